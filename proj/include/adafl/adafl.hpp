#pragma once

#include "adafl/data.hpp"
#include "adafl/dataset.hpp"
#include "adafl/error.hpp"
#include "adafl/federation.hpp"
#include "adafl/model.hpp"
#include "adafl/random.hpp"
#include "adafl/selection.hpp"
#include "adafl/strategies.hpp"
#include "adafl/harness/config.hpp"
#include "adafl/harness/experiment.hpp"
#include "adafl/harness/metrics.hpp"
#include "adafl/harness/trace.hpp"
