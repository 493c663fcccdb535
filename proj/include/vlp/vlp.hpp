#pragma once

// Umbrella header for the whole toolkit.

#include "vlp/calibration.hpp"
#include "vlp/circle.hpp"
#include "vlp/config.hpp"
#include "vlp/errors.hpp"
#include "vlp/geometry.hpp"
#include "vlp/metrics.hpp"
#include "vlp/rng.hpp"
#include "vlp/simulator.hpp"
#include "vlp/solver.hpp"
