#pragma once

#include "trafficrisk/accident_sampler.hpp"
#include "trafficrisk/analysis.hpp"
#include "trafficrisk/capacity.hpp"
#include "trafficrisk/config.hpp"
#include "trafficrisk/errors.hpp"
#include "trafficrisk/godunov.hpp"
#include "trafficrisk/hawkes.hpp"
#include "trafficrisk/inflow.hpp"
#include "trafficrisk/network.hpp"
#include "trafficrisk/rng.hpp"
#include "trafficrisk/risk.hpp"
#include "trafficrisk/simulation.hpp"
