#pragma once

// Umbrella header: isolation-forest anomaly detection (axis-aligned and
// oblique variants), model-specific feature attributions, and the evaluation
// toolkit around them.

#include "exad/dataset.hpp"
#include "exad/eval.hpp"
#include "exad/explain.hpp"
#include "exad/forest.hpp"
#include "exad/metrics.hpp"
#include "exad/model_io.hpp"
#include "exad/report_io.hpp"
#include "exad/rng.hpp"
#include "exad/synthetic.hpp"
