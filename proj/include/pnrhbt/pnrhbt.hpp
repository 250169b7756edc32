#pragma once

// Umbrella header: photon-number-resolving two-detector coincidence toolkit.

#include "pnrhbt/analytics.hpp"
#include "pnrhbt/config.hpp"
#include "pnrhbt/detector_model.hpp"
#include "pnrhbt/errors.hpp"
#include "pnrhbt/hbt_engine.hpp"
#include "pnrhbt/io.hpp"
#include "pnrhbt/math_util.hpp"
#include "pnrhbt/rng.hpp"
#include "pnrhbt/source_models.hpp"
#include "pnrhbt/version.hpp"
