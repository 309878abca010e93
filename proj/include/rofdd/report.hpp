#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "rofdd/mesh.hpp"

namespace rofdd {

/// One row of a convergence trace.
struct TraceRecord {
  std::size_t iteration = 0;
  double dual_energy = 0.0;
  double primal_energy = 0.0;
  std::optional<double> relative_gap;  // (E - E*) / E*, when E* is known
  std::optional<double> jump_norm;     // ||B p~||, primal-dual decomposition only
  std::size_t max_inner_iters = 0;     // largest local solve count so far
  double wall_clock_seconds = 0.0;
  double virtual_wall_clock_seconds = 0.0;
};

enum class StopReason { tolerance, max_iter };

inline std::string_view to_string(StopReason r) {
  return r == StopReason::tolerance ? "tolerance" : "max_iter";
}

struct SolveReport {
  std::size_t iterations = 0;
  DualField dual;
  Image primal;
  std::vector<TraceRecord> trace;
  StopReason stop_reason = StopReason::max_iter;
  std::size_t max_inner_iters = 0;
  double wall_clock_seconds = 0.0;
  double virtual_wall_clock_seconds = 0.0;
};

/// Fills relative_gap of every trace row from a reference minimum E*.
inline void attach_relative_gap(SolveReport& report, double reference_energy) {
  for (auto& rec : report.trace) {
    rec.relative_gap = (rec.primal_energy - reference_energy) / reference_energy;
  }
}

/// Monotonic stopwatch.
class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  [[nodiscard]] double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }
  void reset() { start_ = std::chrono::steady_clock::now(); }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace rofdd
