#pragma once

// Umbrella header for the long-only moment portfolio toolkit: centered return
// panels, matrix-free sample oracles, simplex-slice geometry, the exact
// quartic line search, affine-normal descent directions, the boundary-aware
// solver, dense verification routes, and the synthetic benchmark harness.

#include "affine_normal.hpp"
#include "bench.hpp"
#include "common.hpp"
#include "linesearch.hpp"
#include "oracle.hpp"
#include "panel.hpp"
#include "panel_io.hpp"
#include "report_json.hpp"
#include "rng.hpp"
#include "simplex.hpp"
#include "solver.hpp"
#include "verification.hpp"
