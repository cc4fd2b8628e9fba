#pragma once

// Umbrella header: the full pipeline in one include.

#include "slx/archive.hpp"
#include "slx/bench.hpp"
#include "slx/csv.hpp"
#include "slx/data.hpp"
#include "slx/ensemble.hpp"
#include "slx/explain.hpp"
#include "slx/json_io.hpp"
#include "slx/learner.hpp"
#include "slx/metrics.hpp"
#include "slx/reduce.hpp"
#include "slx/synthetic.hpp"
