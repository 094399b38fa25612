#pragma once

#include "imbalance/catalog.hpp"
#include "imbalance/classifier.hpp"
#include "imbalance/config.hpp"
#include "imbalance/csv.hpp"
#include "imbalance/data.hpp"
#include "imbalance/decision.hpp"
#include "imbalance/errors.hpp"
#include "imbalance/experiment.hpp"
#include "imbalance/matrix.hpp"
#include "imbalance/metrics.hpp"
#include "imbalance/numeric.hpp"
#include "imbalance/report.hpp"
#include "imbalance/rng.hpp"
#include "imbalance/sampling.hpp"
#include "imbalance/sidecar.hpp"
#include "imbalance/synthetic.hpp"
