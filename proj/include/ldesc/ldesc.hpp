#pragma once

#include "ldesc/cache.hpp"
#include "ldesc/core.hpp"
#include "ldesc/cta_grid.hpp"
#include "ldesc/descriptor.hpp"
#include "ldesc/experiment.hpp"
#include "ldesc/grid.hpp"
#include "ldesc/metrics.hpp"
#include "ldesc/numa.hpp"
#include "ldesc/policy.hpp"
#include "ldesc/prefetch.hpp"
#include "ldesc/sched.hpp"
#include "ldesc/simulator.hpp"
#include "ldesc/trace.hpp"
#include "ldesc/workload.hpp"
