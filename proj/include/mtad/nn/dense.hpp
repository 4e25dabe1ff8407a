#pragma once

// Dense layer applied per timestep (time-distributed over sequence heads).
// Supports linear output and row-wise softmax; softmax backward applies the
// full Jacobian so it composes with any loss on the probabilities.

#include <string>
#include <vector>

#include "mtad/errors.hpp"
#include "mtad/nn/tensor.hpp"

namespace mtad::nn {

enum class Activation { kLinear, kSoftmax };

class DenseLayer {
 public:
  DenseLayer(std::string name, int input_dim, int output_dim, Activation act)
      : name_(std::move(name)),
        input_dim_(input_dim),
        output_dim_(output_dim),
        act_(act),
        w_(name_ + ".w", input_dim, output_dim),
        b_(name_ + ".b", 1, output_dim) {
    if (input_dim < 1 || output_dim < 1)
      throw ConfigError("DenseLayer: dimensions must be positive");
  }

  void init(RngStream& rng) {
    glorot_uniform(w_.value, input_dim_, output_dim_, rng);
    b_.value.setZero();
  }

  struct Cache {
    Mat input;
    Mat output;
  };

  void forward(const Mat& input, Cache& cache) const {
    if (input.cols() != input_dim_)
      throw ConfigError("DenseLayer: input width mismatch in " + name_);
    Mat z = input * w_.value;
    z.rowwise() += b_.value.row(0);
    if (act_ == Activation::kSoftmax) {
      const Eigen::VectorXd row_max = z.rowwise().maxCoeff();
      z = ((z.colwise() - row_max).array().exp()).matrix();
      const Eigen::VectorXd row_sum = z.rowwise().sum();
      z.array().colwise() /= row_sum.array();
    }
    cache.input = input;
    cache.output = std::move(z);
  }

  // d_output is the gradient w.r.t. the post-activation output. Returns the
  // gradient w.r.t. the input; accumulates parameter gradients.
  Mat backward(const Cache& cache, const Mat& d_output) {
    Mat d_pre;
    if (act_ == Activation::kSoftmax) {
      const Mat& p = cache.output;
      const Eigen::VectorXd dot = (d_output.cwiseProduct(p)).rowwise().sum();
      d_pre = p.cwiseProduct(d_output.colwise() - dot);
    } else {
      d_pre = d_output;
    }
    w_.grad.noalias() += cache.input.transpose() * d_pre;
    b_.grad.row(0) += d_pre.colwise().sum();
    return d_pre * w_.value.transpose();
  }

  std::vector<Tensor*> params() { return {&w_, &b_}; }
  std::vector<const Tensor*> params() const { return {&w_, &b_}; }

  int input_dim() const { return input_dim_; }
  int output_dim() const { return output_dim_; }

 private:
  std::string name_;
  int input_dim_;
  int output_dim_;
  Activation act_;
  Tensor w_, b_;
};

}  // namespace mtad::nn
