#pragma once

#include "evtip/config.hpp"
#include "evtip/ensemble.hpp"
#include "evtip/error.hpp"
#include "evtip/extremes.hpp"
#include "evtip/gev.hpp"
#include "evtip/indicators.hpp"
#include "evtip/io.hpp"
#include "evtip/optimize.hpp"
#include "evtip/parallel.hpp"
#include "evtip/random.hpp"
#include "evtip/sde_models.hpp"
#include "evtip/time_series.hpp"
