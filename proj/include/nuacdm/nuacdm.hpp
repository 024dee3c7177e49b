#pragma once
// Umbrella header.
#include "common.hpp"
#include "rng.hpp"
#include "problem_core.hpp"
#include "sampler.hpp"
#include "sparse_matrix.hpp"
#include "solvers.hpp"
#include "problems.hpp"
#include "data_io.hpp"
#include "parallel.hpp"
#include "bench.hpp"
