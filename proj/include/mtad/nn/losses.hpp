#pragma once

// Training losses: mean-squared window reconstruction and class-weighted
// categorical cross-entropy summed over the days of a window.

#include <cmath>
#include <vector>

#include "mtad/errors.hpp"
#include "mtad/nn/tensor.hpp"

namespace mtad::nn {

inline constexpr double kCrossEntropyEpsilon = 1e-12;

// (1 / (l*m)) * ||w - w_hat||_F^2 for one window.
inline double reconstruction_loss(const Mat& w, const Mat& w_hat) {
  if (w.rows() != w_hat.rows() || w.cols() != w_hat.cols())
    throw DataError("reconstruction_loss: shape mismatch");
  if (w.size() == 0) throw DataError("reconstruction_loss: empty window");
  return (w - w_hat).squaredNorm() / double(w.size());
}

inline Mat reconstruction_loss_grad(const Mat& w, const Mat& w_hat) {
  if (w.rows() != w_hat.rows() || w.cols() != w_hat.cols())
    throw DataError("reconstruction_loss_grad: shape mismatch");
  return (2.0 / double(w.size())) * (w_hat - w);
}

inline void check_probability_rows(const Mat& p) {
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    double sum = 0;
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      const double v = p(i, j);
      if (!(v >= 0) || !(v <= 1))
        throw DataError("cross_entropy: probability out of [0, 1]");
      sum += v;
    }
    if (std::fabs(sum - 1.0) > 1e-6)
      throw DataError("cross_entropy: probability row does not sum to 1");
  }
}

inline void check_one_hot_rows(const Mat& y) {
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    double sum = 0;
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      const double v = y(i, j);
      if (v != 0.0 && v != 1.0) throw DataError("cross_entropy: targets must be one-hot");
      sum += v;
    }
    if (sum != 1.0) throw DataError("cross_entropy: each target row needs exactly one 1");
  }
}

// -sum_t sum_j y_tj * ln(p_tj + eps) * w_j, summed (not averaged) over the
// rows so longer windows weigh proportionally more.
inline double weighted_cross_entropy(const Mat& y, const Mat& p,
                                     const std::vector<double>& class_wts) {
  if (y.rows() != p.rows() || y.cols() != p.cols())
    throw DataError("cross_entropy: shape mismatch");
  if (int(class_wts.size()) != y.cols())
    throw DataError("cross_entropy: class weight count mismatch");
  check_one_hot_rows(y);
  check_probability_rows(p);
  double loss = 0;
  for (Eigen::Index i = 0; i < y.rows(); ++i)
    for (Eigen::Index j = 0; j < y.cols(); ++j)
      if (y(i, j) != 0.0)
        loss -= std::log(p(i, j) + kCrossEntropyEpsilon) * class_wts[std::size_t(j)];
  return loss;
}

// Gradient with respect to the probabilities (pre-softmax composition is the
// layer's job).
inline Mat weighted_cross_entropy_grad(const Mat& y, const Mat& p,
                                       const std::vector<double>& class_wts) {
  if (y.rows() != p.rows() || y.cols() != p.cols())
    throw DataError("cross_entropy_grad: shape mismatch");
  Mat d = Mat::Zero(p.rows(), p.cols());
  for (Eigen::Index i = 0; i < y.rows(); ++i)
    for (Eigen::Index j = 0; j < y.cols(); ++j)
      if (y(i, j) != 0.0)
        d(i, j) = -class_wts[std::size_t(j)] / (p(i, j) + kCrossEntropyEpsilon);
  return d;
}

// Balanced class weights n_total / (n_classes * n_j); classes with no
// examples get weight 1 so they stay inert.
inline std::vector<double> class_weights(const std::vector<long>& counts) {
  long total = 0;
  for (long c : counts) {
    if (c < 0) throw DataError("class_weights: negative count");
    total += c;
  }
  if (total == 0) throw DataError("class_weights: no labeled examples");
  std::vector<double> w(counts.size(), 1.0);
  const double k = double(counts.size());
  for (std::size_t j = 0; j < counts.size(); ++j)
    if (counts[j] > 0) w[j] = double(total) / (k * double(counts[j]));
  return w;
}

}  // namespace mtad::nn
