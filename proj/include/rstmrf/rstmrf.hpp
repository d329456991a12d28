#pragma once

#include "rstmrf/diagnostics.hpp"
#include "rstmrf/experiment.hpp"
#include "rstmrf/forward.hpp"
#include "rstmrf/graph.hpp"
#include "rstmrf/linalg.hpp"
#include "rstmrf/posterior.hpp"
#include "rstmrf/priors.hpp"
#include "rstmrf/rng.hpp"
#include "rstmrf/tree_sampler.hpp"
#include "rstmrf/types.hpp"
