#pragma once

// LSTM layer with full backpropagation through time. Gates use the classic
// formulation: sigmoid input/forget/output gates, tanh candidate and output
// squashing. The fused weight layout is [input | forget | candidate |
// output] along columns. Recurrent dropout is variational: one mask per
// sample, applied to h_{t-1} at every step, identical in forward and
// backward, never active at inference.

#include <string>
#include <vector>

#include "mtad/errors.hpp"
#include "mtad/nn/tensor.hpp"

namespace mtad::nn {

class LstmLayer {
 public:
  LstmLayer(std::string name, int input_dim, int hidden_dim)
      : name_(std::move(name)),
        input_dim_(input_dim),
        hidden_dim_(hidden_dim),
        w_x_(name_ + ".w_x", input_dim, 4 * hidden_dim),
        w_h_(name_ + ".w_h", hidden_dim, 4 * hidden_dim),
        b_(name_ + ".b", 1, 4 * hidden_dim) {
    if (input_dim < 1 || hidden_dim < 1)
      throw ConfigError("LstmLayer: dimensions must be positive");
  }

  // Glorot-uniform weights, zero biases except the forget-gate block at 1.
  void init(RngStream& rng) {
    glorot_uniform(w_x_.value, input_dim_, 4 * hidden_dim_, rng);
    glorot_uniform(w_h_.value, hidden_dim_, 4 * hidden_dim_, rng);
    b_.value.setZero();
    b_.value.block(0, hidden_dim_, 1, hidden_dim_).setConstant(1.0);
  }

  struct Cache {
    std::vector<Mat> inputs;     // per step: B x d
    std::vector<Mat> h_dropped;  // per step: masked h_{t-1}, B x H
    std::vector<Mat> gate_i, gate_f, gate_g, gate_o;
    std::vector<Mat> cell, cell_tanh, hidden;
    Mat mask;  // B x H recurrent dropout mask; empty means none
  };

  // inputs[t]: B x input_dim. mask: empty, or B x H with entries in
  // {0, 1/(1-p)}; an all-ones mask is bitwise identical to no mask.
  void forward(const std::vector<Mat>& inputs, const Mat& mask, Cache& cache) const {
    const int steps = int(inputs.size());
    if (steps == 0) throw ConfigError("LstmLayer: empty input sequence");
    const auto batch = inputs.front().rows();
    const int h = hidden_dim_;
    if (mask.size() != 0 && (mask.rows() != batch || mask.cols() != h))
      throw ConfigError("LstmLayer: dropout mask shape mismatch");

    cache.inputs = inputs;
    cache.mask = mask;
    cache.h_dropped.resize(std::size_t(steps));
    cache.gate_i.resize(std::size_t(steps));
    cache.gate_f.resize(std::size_t(steps));
    cache.gate_g.resize(std::size_t(steps));
    cache.gate_o.resize(std::size_t(steps));
    cache.cell.resize(std::size_t(steps));
    cache.cell_tanh.resize(std::size_t(steps));
    cache.hidden.resize(std::size_t(steps));

    Mat h_prev = Mat::Zero(batch, h);
    Mat c_prev = Mat::Zero(batch, h);
    for (int t = 0; t < steps; ++t) {
      if (inputs[std::size_t(t)].cols() != input_dim_)
        throw ConfigError("LstmLayer: input width mismatch at step " + std::to_string(t));
      Mat hd = mask.size() != 0 ? h_prev.cwiseProduct(mask) : h_prev;
      Mat pre = inputs[std::size_t(t)] * w_x_.value + hd * w_h_.value;
      pre.rowwise() += b_.value.row(0);
      Mat gi = sigmoid(pre.leftCols(h));
      Mat gf = sigmoid(pre.middleCols(h, h));
      Mat gg = pre.middleCols(2 * h, h).array().tanh().matrix();
      Mat go = sigmoid(pre.rightCols(h));
      Mat c = gf.cwiseProduct(c_prev) + gi.cwiseProduct(gg);
      Mat ct = c.array().tanh().matrix();
      Mat hh = go.cwiseProduct(ct);

      cache.h_dropped[std::size_t(t)] = std::move(hd);
      cache.gate_i[std::size_t(t)] = std::move(gi);
      cache.gate_f[std::size_t(t)] = std::move(gf);
      cache.gate_g[std::size_t(t)] = std::move(gg);
      cache.gate_o[std::size_t(t)] = std::move(go);
      cache.cell[std::size_t(t)] = c;
      cache.cell_tanh[std::size_t(t)] = std::move(ct);
      cache.hidden[std::size_t(t)] = hh;
      h_prev = std::move(hh);
      c_prev = std::move(c);
    }
    if (!cache.hidden.back().allFinite())
      throw NumericError("LstmLayer: non-finite activations in " + name_);
  }

  // d_hidden[t] is the external gradient flowing into h_t (zero matrices
  // where a step receives none). Accumulates parameter gradients and returns
  // the gradients with respect to the inputs.
  std::vector<Mat> backward(const Cache& cache, const std::vector<Mat>& d_hidden) {
    const int steps = int(cache.inputs.size());
    if (int(d_hidden.size()) != steps)
      throw ConfigError("LstmLayer: d_hidden length mismatch");
    const auto batch = cache.inputs.front().rows();
    const int h = hidden_dim_;

    std::vector<Mat> d_inputs(static_cast<std::size_t>(steps));
    Mat dh_rec = Mat::Zero(batch, h);
    Mat dc = Mat::Zero(batch, h);
    for (int t = steps - 1; t >= 0; --t) {
      const Mat& gi = cache.gate_i[std::size_t(t)];
      const Mat& gf = cache.gate_f[std::size_t(t)];
      const Mat& gg = cache.gate_g[std::size_t(t)];
      const Mat& go = cache.gate_o[std::size_t(t)];
      const Mat& ct = cache.cell_tanh[std::size_t(t)];

      Mat dh = d_hidden[std::size_t(t)] + dh_rec;
      Mat d_go = dh.cwiseProduct(ct);
      dc += (dh.cwiseProduct(go).array() * (1.0 - ct.array().square())).matrix();

      Mat d_gi = dc.cwiseProduct(gg);
      Mat d_gg = dc.cwiseProduct(gi);
      Mat d_gf = t > 0 ? dc.cwiseProduct(cache.cell[std::size_t(t - 1)]).eval()
                       : Mat::Zero(batch, h).eval();

      Mat d_pre(batch, 4 * h);
      d_pre.leftCols(h) = (d_gi.array() * gi.array() * (1.0 - gi.array())).matrix();
      d_pre.middleCols(h, h) = (d_gf.array() * gf.array() * (1.0 - gf.array())).matrix();
      d_pre.middleCols(2 * h, h) = (d_gg.array() * (1.0 - gg.array().square())).matrix();
      d_pre.rightCols(h) = (d_go.array() * go.array() * (1.0 - go.array())).matrix();

      w_x_.grad.noalias() += cache.inputs[std::size_t(t)].transpose() * d_pre;
      w_h_.grad.noalias() += cache.h_dropped[std::size_t(t)].transpose() * d_pre;
      b_.grad.row(0) += d_pre.colwise().sum();

      d_inputs[std::size_t(t)] = d_pre * w_x_.value.transpose();
      dh_rec.noalias() = d_pre * w_h_.value.transpose();
      if (cache.mask.size() != 0) dh_rec = dh_rec.cwiseProduct(cache.mask);
      dc = dc.cwiseProduct(gf);
    }
    return d_inputs;
  }

  std::vector<Tensor*> params() { return {&w_x_, &w_h_, &b_}; }
  std::vector<const Tensor*> params() const { return {&w_x_, &w_h_, &b_}; }

  int input_dim() const { return input_dim_; }
  int hidden_dim() const { return hidden_dim_; }
  const std::string& name() const { return name_; }

 private:
  static Mat sigmoid(const Mat& x) {
    return (1.0 / (1.0 + (-x.array()).exp())).matrix();
  }

  std::string name_;
  int input_dim_;
  int hidden_dim_;
  Tensor w_x_, w_h_, b_;
};

// Draws one variational dropout mask row per sample: keep with probability
// 1-p scaled to 1/(1-p), drop to 0. p = 0 yields an empty mask, which the
// forward pass treats identically to all-ones.
inline Mat draw_dropout_mask(Eigen::Index batch, int hidden, double p, RngStream& rng) {
  if (p < 0 || p >= 1) throw ConfigError("draw_dropout_mask: p must be in [0, 1)");
  if (p == 0) return Mat();
  Mat mask(batch, hidden);
  const double keep_scale = 1.0 / (1.0 - p);
  for (Eigen::Index i = 0; i < batch; ++i)
    for (int j = 0; j < hidden; ++j)
      mask(i, j) = rng.bernoulli(p) ? 0.0 : keep_scale;
  return mask;
}

}  // namespace mtad::nn
