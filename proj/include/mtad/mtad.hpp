#pragma once

// Umbrella header for the whole library.

#include "mtad/csv_io.hpp"
#include "mtad/errors.hpp"
#include "mtad/evaluation.hpp"
#include "mtad/granger.hpp"
#include "mtad/iforest.hpp"
#include "mtad/model.hpp"
#include "mtad/nn/adam.hpp"
#include "mtad/nn/dense.hpp"
#include "mtad/nn/grad_check.hpp"
#include "mtad/nn/losses.hpp"
#include "mtad/nn/lstm.hpp"
#include "mtad/nn/tensor.hpp"
#include "mtad/preprocess.hpp"
#include "mtad/rng.hpp"
#include "mtad/schema.hpp"
#include "mtad/special_functions.hpp"
#include "mtad/stats.hpp"
#include "mtad/synthetic.hpp"
#include "mtad/version.hpp"
