#pragma once

// Umbrella header: the variational-problem model, the constants chain, the
// discretization, the barrier path-following solver, and the verification
// oracles.

#include "varipath/common.hpp"
#include "varipath/jet.hpp"
#include "varipath/quadrature.hpp"
#include "varipath/model.hpp"
#include "varipath/discretize.hpp"
#include "varipath/estimator.hpp"
#include "varipath/barrier.hpp"
#include "varipath/solver.hpp"
#include "varipath/verify.hpp"
#include "varipath/io.hpp"
