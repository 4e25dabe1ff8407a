#pragma once

// Adam with bias correction, one shared step counter across all attached
// tensors.

#include <cmath>
#include <vector>

#include "mtad/errors.hpp"
#include "mtad/nn/tensor.hpp"

namespace mtad::nn {

class AdamOptimizer {
 public:
  struct Config {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
  };

  AdamOptimizer() : AdamOptimizer(Config{}) {}
  explicit AdamOptimizer(Config cfg) : cfg_(cfg) {
    if (cfg_.learning_rate <= 0) throw ConfigError("AdamOptimizer: learning_rate must be > 0");
    if (cfg_.beta1 < 0 || cfg_.beta1 >= 1 || cfg_.beta2 < 0 || cfg_.beta2 >= 1)
      throw ConfigError("AdamOptimizer: betas must be in [0, 1)");
  }

  void attach(const std::vector<Tensor*>& params) {
    params_ = params;
    m_.clear();
    v_.clear();
    for (const Tensor* t : params_) {
      m_.push_back(Mat::Zero(t->value.rows(), t->value.cols()));
      v_.push_back(Mat::Zero(t->value.rows(), t->value.cols()));
    }
    step_ = 0;
  }

  void zero_grads() {
    for (Tensor* t : params_) t->zero_grad();
  }

  void step() {
    if (params_.empty()) throw ConfigError("AdamOptimizer: no parameters attached");
    ++step_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, double(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, double(step_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Tensor* t = params_[i];
      if (!t->grad.allFinite())
        throw NumericError("AdamOptimizer: non-finite gradient for " + t->name);
      m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * t->grad;
      v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * t->grad.cwiseProduct(t->grad);
      t->value.array() -= cfg_.learning_rate * (m_[i].array() / bc1) /
                          ((v_[i].array() / bc2).sqrt() + cfg_.epsilon);
    }
  }

  long step_count() const { return step_; }
  const Config& config() const { return cfg_; }
  const std::vector<Mat>& first_moments() const { return m_; }
  const std::vector<Mat>& second_moments() const { return v_; }

  // Checkpoint restore: moments must match the attached parameter shapes.
  void restore(long step, std::vector<Mat> m, std::vector<Mat> v) {
    if (m.size() != params_.size() || v.size() != params_.size())
      throw DataError("AdamOptimizer: moment count mismatch on restore");
    for (std::size_t i = 0; i < params_.size(); ++i) {
      if (m[i].rows() != params_[i]->value.rows() || m[i].cols() != params_[i]->value.cols() ||
          v[i].rows() != params_[i]->value.rows() || v[i].cols() != params_[i]->value.cols())
        throw DataError("AdamOptimizer: moment shape mismatch on restore for " +
                        params_[i]->name);
    }
    step_ = step;
    m_ = std::move(m);
    v_ = std::move(v);
  }

 private:
  Config cfg_;
  std::vector<Tensor*> params_;
  std::vector<Mat> m_, v_;
  long step_ = 0;
};

}  // namespace mtad::nn
