#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "mtad/rng.hpp"

namespace mtad::nn {

using Mat = Eigen::MatrixXd;

// Named parameter block with its gradient accumulator. Names are stable and
// unique within a model; checkpoints and the optimizer address tensors by
// them.
struct Tensor {
  std::string name;
  Mat value;
  Mat grad;

  Tensor(std::string n, int rows, int cols)
      : name(std::move(n)), value(Mat::Zero(rows, cols)), grad(Mat::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(); }
};

// Glorot/Xavier uniform init. Entries are drawn row-major so the draw order
// is part of the layer's deterministic contract.
inline void glorot_uniform(Mat& w, int fan_in, int fan_out, RngStream& rng) {
  const double limit = std::sqrt(6.0 / double(fan_in + fan_out));
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-limit, limit);
}

}  // namespace mtad::nn
