#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rofdd/errors.hpp"
#include "rofdd/mesh.hpp"
#include "rofdd/report.hpp"

namespace rofdd {

// ---------------------------------------------------------------------------
// PGM

namespace detail {

class PgmCursor {
 public:
  explicit PgmCursor(std::string_view bytes) : b_(bytes) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError("PGM: " + what + " at byte " + std::to_string(pos_));
  }

  void skip_space_and_comments() {
    while (pos_ < b_.size()) {
      const char c = b_[pos_];
      if (c == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n' && b_[pos_] != '\r') ++pos_;
      } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::uint64_t number(const char* what) {
    skip_space_and_comments();
    if (pos_ >= b_.size()) fail(std::string("unexpected end of data reading ") + what);
    std::uint64_t v = 0;
    const char* first = b_.data() + pos_;
    const char* last = b_.data() + b_.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr == first) fail(std::string("expected decimal ") + what);
    pos_ += static_cast<std::size_t>(ptr - first);
    return v;
  }

  /// Consumes the single whitespace byte that ends a binary header.
  void header_terminator() {
    if (pos_ >= b_.size()) fail("unexpected end of data after header");
    const char c = b_[pos_];
    if (c != ' ' && c != '\t' && c != '\n' && c != '\r') fail("expected whitespace after maxval");
    ++pos_;
  }

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return b_.size() - pos_; }
  unsigned char byte_at(std::size_t k) const { return static_cast<unsigned char>(b_[k]); }
  void advance(std::size_t n) { pos_ += n; }

 private:
  std::string_view b_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses a P2 or P5 PGM (maxval <= 65535); intensities are divided by maxval.
inline Image read_pgm(std::string_view bytes) {
  detail::PgmCursor cur(bytes);
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5')) {
    cur.fail("expected magic P2 or P5");
  }
  const bool binary = bytes[1] == '5';
  cur.advance(2);
  const std::uint64_t width = cur.number("width");
  const std::uint64_t height = cur.number("height");
  const std::size_t maxval_pos = cur.pos();
  const std::uint64_t maxval = cur.number("maxval");
  if (width == 0 || height == 0) cur.fail("zero image dimension");
  if (maxval == 0 || maxval > 65535) {
    throw FormatError("PGM: maxval " + std::to_string(maxval) + " outside [1, 65535] at byte " +
                      std::to_string(maxval_pos));
  }
  Image img(GridDims{static_cast<std::size_t>(height), static_cast<std::size_t>(width)});
  const std::size_t count = img.values.size();
  const double scale = 1.0 / static_cast<double>(maxval);

  if (binary) {
    cur.header_terminator();
    const std::size_t bpp = maxval < 256 ? 1 : 2;
    if (cur.remaining() < count * bpp) {
      cur.fail("truncated payload: need " + std::to_string(count * bpp) + " bytes, have " +
               std::to_string(cur.remaining()));
    }
    const std::size_t base = cur.pos();
    for (std::size_t k = 0; k < count; ++k) {
      std::uint64_t v = cur.byte_at(base + k * bpp);
      if (bpp == 2) v = (v << 8) | cur.byte_at(base + k * bpp + 1);
      if (v > maxval) {
        cur.advance(k * bpp);
        cur.fail("sample " + std::to_string(v) + " exceeds maxval");
      }
      img.values[k] = static_cast<double>(v) * scale;
    }
  } else {
    for (std::size_t k = 0; k < count; ++k) {
      const std::uint64_t v = cur.number("sample");
      if (v > maxval) cur.fail("sample " + std::to_string(v) + " exceeds maxval");
      img.values[k] = static_cast<double>(v) * scale;
    }
  }
  return img;
}

/// Binary P5 with maxval 255; values are clamped to [0,1] and rounded.
inline std::string write_pgm(const Image& img) {
  std::string out = "P5\n" + std::to_string(img.dims.cols) + " " + std::to_string(img.dims.rows) +
                    "\n255\n";
  out.reserve(out.size() + img.values.size());
  for (double v : img.values) {
    const double c = std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0);
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(c * 255.0))));
  }
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("error reading '" + path + "'");
  return data;
}

inline void write_file(const std::string& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("error writing '" + path + "'");
}

inline Image load_pgm(const std::string& path) {
  try {
    return read_pgm(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

inline void save_pgm(const std::string& path, const Image& img) { write_file(path, write_pgm(img)); }

// ---------------------------------------------------------------------------
// Noise

/// Standard normal samples: std::mt19937_64 seeded with `seed`, two raw draws
/// a, b per pair, u1 = ((a >> 11) + 1) 2^-53 in (0,1], u2 = (b >> 11) 2^-53,
/// z0 = sqrt(-2 ln u1) cos(2 pi u2), z1 = sqrt(-2 ln u1) sin(2 pi u2).
/// Samples are emitted in the order z0, z1, z0, z1, ...
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : eng_(seed) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
    const double u1 = static_cast<double>((eng_() >> 11) + 1) * kScale;
    const double u2 = static_cast<double>(eng_() >> 11) * kScale;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// f + mean + sqrt(variance) z, pixels in row-major order; no clamping.
inline Image add_gaussian_noise(const Image& f, double mean, double variance, std::uint64_t seed) {
  if (!(variance >= 0.0) || !std::isfinite(variance) || !std::isfinite(mean)) {
    throw ParameterError("noise variance must be finite and >= 0, mean finite");
  }
  Image out = f;
  if (variance == 0.0 && mean == 0.0) return out;
  const double sd = std::sqrt(variance);
  GaussianStream g(seed);
  for (double& v : out.values) v += mean + sd * g.next();
  return out;
}

// ---------------------------------------------------------------------------
// Quality

/// 10 log10(max_val^2 |Omega| / ||u - f_orig||^2); +infinity for identical images.
inline double psnr(const Image& u, const Image& f_orig, double max_val = 1.0) {
  if (u.dims != f_orig.dims) {
    throw DimensionError("psnr: " + to_string(u.dims) + " vs " + to_string(f_orig.dims));
  }
  double sq = 0.0;
  for (std::size_t k = 0; k < u.values.size(); ++k) {
    const double d = u.values[k] - f_orig.values[k];
    sq += d * d;
  }
  if (sq == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(max_val * max_val * static_cast<double>(u.values.size()) / sq);
}

// ---------------------------------------------------------------------------
// Trace CSV

inline constexpr std::string_view kTraceHeader =
    "iteration,dual_energy,primal_energy,relative_gap,jump_norm,max_inner_iters,"
    "wall_clock_seconds,virtual_wall_clock_seconds";

namespace detail {

inline void append_real(std::string& out, double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific, 16);
  out.append(buf, r.ptr);
}

inline double parse_real(std::string_view s, std::size_t line) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw FormatError("trace CSV line " + std::to_string(line) + ": bad number '" +
                      std::string(s) + "'");
  }
  return v;
}

inline std::size_t parse_count(std::string_view s, std::size_t line) {
  std::size_t v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw FormatError("trace CSV line " + std::to_string(line) + ": bad integer '" +
                      std::string(s) + "'");
  }
  return v;
}

}  // namespace detail

/// Optional "# " comment lines, the header row, then one row per record.
/// Reals use 17 significant digits; absent optional fields are empty.
inline std::string write_trace_csv(const std::vector<TraceRecord>& records,
                                   const std::vector<std::string>& comments = {}) {
  std::string out;
  for (const auto& c : comments) {
    out += "# ";
    out += c;
    out += '\n';
  }
  out += kTraceHeader;
  out += '\n';
  for (const TraceRecord& r : records) {
    out += std::to_string(r.iteration);
    out += ',';
    detail::append_real(out, r.dual_energy);
    out += ',';
    detail::append_real(out, r.primal_energy);
    out += ',';
    if (r.relative_gap) detail::append_real(out, *r.relative_gap);
    out += ',';
    if (r.jump_norm) detail::append_real(out, *r.jump_norm);
    out += ',';
    out += std::to_string(r.max_inner_iters);
    out += ',';
    detail::append_real(out, r.wall_clock_seconds);
    out += ',';
    detail::append_real(out, r.virtual_wall_clock_seconds);
    out += '\n';
  }
  return out;
}

inline std::vector<TraceRecord> read_trace_csv(std::string_view text) {
  std::vector<TraceRecord> out;
  bool header_seen = false;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      if (line != kTraceHeader) {
        throw FormatError("trace CSV line " + std::to_string(line_no) + ": unexpected header");
      }
      header_seen = true;
      continue;
    }
    std::vector<std::string_view> cells;
    for (std::size_t start = 0;;) {
      const std::size_t comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (cells.size() != 8) {
      throw FormatError("trace CSV line " + std::to_string(line_no) + ": expected 8 fields, got " +
                        std::to_string(cells.size()));
    }
    TraceRecord r;
    r.iteration = detail::parse_count(cells[0], line_no);
    r.dual_energy = detail::parse_real(cells[1], line_no);
    r.primal_energy = detail::parse_real(cells[2], line_no);
    if (!cells[3].empty()) r.relative_gap = detail::parse_real(cells[3], line_no);
    if (!cells[4].empty()) r.jump_norm = detail::parse_real(cells[4], line_no);
    r.max_inner_iters = detail::parse_count(cells[5], line_no);
    r.wall_clock_seconds = detail::parse_real(cells[6], line_no);
    r.virtual_wall_clock_seconds = detail::parse_real(cells[7], line_no);
    out.push_back(r);
  }
  if (!header_seen) throw FormatError("trace CSV: missing header row");
  return out;
}

}  // namespace rofdd
