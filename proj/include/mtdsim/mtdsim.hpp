#pragma once

#include "mtdsim/attacker.hpp"
#include "mtdsim/cluster.hpp"
#include "mtdsim/errors.hpp"
#include "mtdsim/metrics.hpp"
#include "mtdsim/risk.hpp"
#include "mtdsim/rng.hpp"
#include "mtdsim/scenario.hpp"
#include "mtdsim/simulation.hpp"
#include "mtdsim/vuln.hpp"
