#pragma once

#include "rofdd/constraints.hpp"
#include "rofdd/decomposition.hpp"
#include "rofdd/errors.hpp"
#include "rofdd/imaging.hpp"
#include "rofdd/mesh.hpp"
#include "rofdd/parallel.hpp"
#include "rofdd/pdual_ddm.hpp"
#include "rofdd/primal_ddm.hpp"
#include "rofdd/report.hpp"
#include "rofdd/solvers.hpp"
#include "rofdd/vector_ops.hpp"
