#pragma once

#include "cbsir/bic_histogram.hpp"
#include "cbsir/color_features.hpp"
#include "cbsir/distance.hpp"
#include "cbsir/evaluation.hpp"
#include "cbsir/feedback_engine.hpp"
#include "cbsir/image_io.hpp"
#include "cbsir/index_store.hpp"
#include "cbsir/tiling.hpp"
