#pragma once

// Convenience umbrella for the whole library.

#include "astm/calendar.hpp"
#include "astm/control.hpp"
#include "astm/core.hpp"
#include "astm/detector.hpp"
#include "astm/errors.hpp"
#include "astm/forecast.hpp"
#include "astm/harness.hpp"
#include "astm/metrics.hpp"
#include "astm/random.hpp"
#include "astm/scenario_io.hpp"
#include "astm/sim.hpp"
