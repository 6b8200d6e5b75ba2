#pragma once

// Umbrella header: the whole laboratory for the prescribed-weight
// exponential equation -laplacian(u) + alpha = K e^{2u} on closed
// 2-dimensional domains.

#include "kwlab/errors.hpp"
#include "kwlab/reduce.hpp"
#include "kwlab/linsolve.hpp"
#include "kwlab/domain.hpp"
#include "kwlab/torus.hpp"
#include "kwlab/mesh.hpp"
#include "kwlab/field.hpp"
#include "kwlab/problem.hpp"
#include "kwlab/energy.hpp"
#include "kwlab/solvers.hpp"
#include "kwlab/eigen.hpp"
#include "kwlab/mountain_pass.hpp"
#include "kwlab/continuation.hpp"
#include "kwlab/io.hpp"
#include "kwlab/config.hpp"
#include "kwlab/run.hpp"
