#pragma once

// Multi-task rare-event detector. A shared LSTM encoder compresses an l-day
// window into a latent vector; a decoder LSTM reconstructs the window from
// the repeated latent; a predictor LSTM emits day-wise performance-class
// distributions from the same repeated latent. Training minimizes mean
// squared reconstruction plus class-weighted cross-entropy. Inference scores
// the last day's reconstruction error and divides it by a transition-decay
// factor computed from the predicted label sequence, so windows whose
// predicted performance recently changed get amplified scores.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mtad/errors.hpp"
#include "mtad/nn/adam.hpp"
#include "mtad/nn/dense.hpp"
#include "mtad/nn/losses.hpp"
#include "mtad/nn/lstm.hpp"
#include "mtad/rng.hpp"
#include "mtad/schema.hpp"
#include "mtad/stats.hpp"
#include "mtad/version.hpp"

namespace mtad {

struct ModelConfig {
  int window = 10;  // l
  int features = 29;
  int classes = kNumPerfClasses;
  int hidden = 100;
  double lambda_decay = 2.0;
  int epochs = 500;
  int batch = 128;
  double learning_rate = 1e-4;
  double recurrent_dropout = 0.2;
  int patience = 10;
  double val_loss_floor = 0.2;
  double percentile = 95.0;
  // Per-user thresholds fall back to the global one below this many
  // validation windows.
  int min_user_windows = 5;
  // Threshold statistic: scaled score delta (default) or raw alpha.
  bool threshold_on_scaled = true;
  bool predictor_enabled = true;

  void validate() const {
    if (window < 2) throw ConfigError("ModelConfig: window must be >= 2");
    if (features < 1) throw ConfigError("ModelConfig: features must be >= 1");
    if (classes < 2) throw ConfigError("ModelConfig: classes must be >= 2");
    if (hidden < 1) throw ConfigError("ModelConfig: hidden must be >= 1");
    if (lambda_decay <= 0) throw ConfigError("ModelConfig: lambda_decay must be > 0");
    if (epochs < 1) throw ConfigError("ModelConfig: epochs must be >= 1");
    if (batch < 1) throw ConfigError("ModelConfig: batch must be >= 1");
    if (learning_rate <= 0) throw ConfigError("ModelConfig: learning_rate must be > 0");
    if (recurrent_dropout < 0 || recurrent_dropout >= 1)
      throw ConfigError("ModelConfig: recurrent_dropout must be in [0, 1)");
    if (patience < 1) throw ConfigError("ModelConfig: patience must be >= 1");
    if (percentile <= 0 || percentile >= 100)
      throw ConfigError("ModelConfig: percentile must be in (0, 100)");
    if (min_user_windows < 1) throw ConfigError("ModelConfig: min_user_windows must be >= 1");
  }
};

class MultiTaskModel {
 public:
  explicit MultiTaskModel(ModelConfig cfg)
      : cfg_(cfg),
        encoder_("encoder", cfg.features, cfg.hidden),
        decoder_lstm_("decoder_lstm", cfg.hidden, cfg.hidden),
        decoder_out_("decoder_out", cfg.hidden, cfg.features, nn::Activation::kLinear),
        predictor_lstm_("predictor_lstm", cfg.hidden, cfg.hidden),
        predictor_out_("predictor_out", cfg.hidden, cfg.classes,
                       nn::Activation::kSoftmax) {
    cfg_.validate();
  }

  const ModelConfig& config() const { return cfg_; }

  // Weight init draws encoder, decoder, then predictor from one stream, so
  // a reconstruction-only model shares the encoder/decoder draws of a
  // multi-task model initialized with the same seed.
  void init(std::uint64_t seed) {
    RngStream rng(seed, kInitStreamId);
    encoder_.init(rng);
    decoder_lstm_.init(rng);
    decoder_out_.init(rng);
    if (cfg_.predictor_enabled) {
      predictor_lstm_.init(rng);
      predictor_out_.init(rng);
    }
  }

  struct ForwardResult {
    std::vector<nn::Mat> recon;  // per step: B x m
    std::vector<nn::Mat> probs;  // per step: B x c; empty when predictor off
    nn::LstmLayer::Cache enc_cache, dec_cache, pred_cache;
    std::vector<nn::DenseLayer::Cache> dec_out_cache, pred_out_cache;
  };

  // inputs[t]: B x m feature rows for window step t. Masks empty at
  // inference.
  void forward(const std::vector<nn::Mat>& inputs, const nn::Mat& enc_mask,
               const nn::Mat& pred_mask, ForwardResult& fr) const {
    const int l = int(inputs.size());
    if (l != cfg_.window)
      throw ConfigError("MultiTaskModel: expected " + std::to_string(cfg_.window) +
                        " steps, got " + std::to_string(l));
    encoder_.forward(inputs, enc_mask, fr.enc_cache);
    const nn::Mat& latent = fr.enc_cache.hidden.back();

    const std::vector<nn::Mat> repeated(std::size_t(l), latent);
    decoder_lstm_.forward(repeated, nn::Mat(), fr.dec_cache);
    fr.recon.resize(std::size_t(l));
    fr.dec_out_cache.resize(std::size_t(l));
    for (int t = 0; t < l; ++t) {
      decoder_out_.forward(fr.dec_cache.hidden[std::size_t(t)],
                           fr.dec_out_cache[std::size_t(t)]);
      fr.recon[std::size_t(t)] = fr.dec_out_cache[std::size_t(t)].output;
    }

    if (cfg_.predictor_enabled) {
      predictor_lstm_.forward(repeated, pred_mask, fr.pred_cache);
      fr.probs.resize(std::size_t(l));
      fr.pred_out_cache.resize(std::size_t(l));
      for (int t = 0; t < l; ++t) {
        predictor_out_.forward(fr.pred_cache.hidden[std::size_t(t)],
                               fr.pred_out_cache[std::size_t(t)]);
        fr.probs[std::size_t(t)] = fr.pred_out_cache[std::size_t(t)].output;
      }
    }
  }

  // d_recon[t]: gradient on the reconstruction at step t. d_probs[t]:
  // gradient on the predicted probabilities (empty when predictor off).
  // Accumulates parameter gradients.
  void backward(ForwardResult& fr, const std::vector<nn::Mat>& d_recon,
                const std::vector<nn::Mat>& d_probs) {
    const int l = cfg_.window;
    const auto batch = fr.enc_cache.inputs.front().rows();

    std::vector<nn::Mat> d_dec_hidden(static_cast<std::size_t>(l));
    for (int t = 0; t < l; ++t)
      d_dec_hidden[std::size_t(t)] =
          decoder_out_.backward(fr.dec_out_cache[std::size_t(t)], d_recon[std::size_t(t)]);
    const std::vector<nn::Mat> d_dec_inputs =
        decoder_lstm_.backward(fr.dec_cache, d_dec_hidden);

    nn::Mat d_latent = nn::Mat::Zero(batch, cfg_.hidden);
    for (const auto& dm : d_dec_inputs) d_latent += dm;

    if (cfg_.predictor_enabled) {
      std::vector<nn::Mat> d_pred_hidden(static_cast<std::size_t>(l));
      for (int t = 0; t < l; ++t)
        d_pred_hidden[std::size_t(t)] = predictor_out_.backward(
            fr.pred_out_cache[std::size_t(t)], d_probs[std::size_t(t)]);
      const std::vector<nn::Mat> d_pred_inputs =
          predictor_lstm_.backward(fr.pred_cache, d_pred_hidden);
      for (const auto& dm : d_pred_inputs) d_latent += dm;
    }

    std::vector<nn::Mat> d_enc_hidden(std::size_t(l), nn::Mat::Zero(batch, cfg_.hidden));
    d_enc_hidden.back() = std::move(d_latent);
    encoder_.backward(fr.enc_cache, d_enc_hidden);
  }

  std::vector<nn::Tensor*> params() {
    std::vector<nn::Tensor*> out;
    for (auto* t : encoder_.params()) out.push_back(t);
    for (auto* t : decoder_lstm_.params()) out.push_back(t);
    for (auto* t : decoder_out_.params()) out.push_back(t);
    if (cfg_.predictor_enabled) {
      for (auto* t : predictor_lstm_.params()) out.push_back(t);
      for (auto* t : predictor_out_.params()) out.push_back(t);
    }
    return out;
  }

  std::vector<const nn::Tensor*> params() const {
    std::vector<const nn::Tensor*> out;
    for (const auto* t : encoder_.params()) out.push_back(t);
    for (const auto* t : decoder_lstm_.params()) out.push_back(t);
    for (const auto* t : decoder_out_.params()) out.push_back(t);
    if (cfg_.predictor_enabled) {
      for (const auto* t : predictor_lstm_.params()) out.push_back(t);
      for (const auto* t : predictor_out_.params()) out.push_back(t);
    }
    return out;
  }

 private:
  static constexpr std::uint64_t kInitStreamId = 0x1215;

  ModelConfig cfg_;
  nn::LstmLayer encoder_;
  nn::LstmLayer decoder_lstm_;
  nn::DenseLayer decoder_out_;
  nn::LstmLayer predictor_lstm_;
  nn::DenseLayer predictor_out_;
};

// ---------------------------------------------------------------------------
// Batching helpers.

inline std::vector<nn::Mat> windows_to_steps(const std::vector<Window>& windows,
                                             const std::vector<int>& index, int lo,
                                             int hi) {
  const int l = int(windows[std::size_t(index[std::size_t(lo)])].data.rows());
  const int m = int(windows[std::size_t(index[std::size_t(lo)])].data.cols());
  std::vector<nn::Mat> steps(std::size_t(l), nn::Mat(hi - lo, m));
  for (int i = lo; i < hi; ++i) {
    const Window& w = windows[std::size_t(index[std::size_t(i)])];
    for (int t = 0; t < l; ++t) steps[std::size_t(t)].row(i - lo) = w.data.row(t);
  }
  return steps;
}

inline std::vector<nn::Mat> labels_to_onehot(const std::vector<Window>& windows,
                                             const std::vector<int>& index, int lo,
                                             int hi, int classes) {
  const int l = int(windows[std::size_t(index[std::size_t(lo)])].perf_vec.size());
  std::vector<nn::Mat> y(std::size_t(l), nn::Mat::Zero(hi - lo, classes));
  for (int i = lo; i < hi; ++i) {
    const Window& w = windows[std::size_t(index[std::size_t(i)])];
    for (int t = 0; t < l; ++t)
      y[std::size_t(t)](i - lo, int(w.perf_vec[std::size_t(t)])) = 1.0;
  }
  return y;
}

// Day-level class counts across all window positions, the basis for
// balanced cross-entropy weights.
inline std::vector<long> count_window_labels(const std::vector<Window>& windows,
                                             int classes) {
  std::vector<long> counts(std::size_t(classes), 0);
  for (const Window& w : windows)
    for (PerfLabel y : w.perf_vec) ++counts[std::size_t(int(y))];
  return counts;
}

// ---------------------------------------------------------------------------
// Training.

enum class StopReason { kMaxEpochs, kPatience, kValFloor };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::kMaxEpochs: return "max_epochs";
    case StopReason::kPatience: return "patience";
    case StopReason::kValFloor: return "val_floor";
  }
  throw ConfigError("to_string: invalid StopReason");
}

struct TrainReport {
  std::vector<double> train_loss, train_recon, train_ce;
  std::vector<double> val_loss, val_recon, val_ce;
  StopReason stop = StopReason::kMaxEpochs;
  int epochs_run = 0;
  int best_epoch = -1;
  double best_val = 0;
};

namespace model_detail {

inline constexpr std::uint64_t kShuffleStreamBase = 0x5000000;
inline constexpr std::uint64_t kDropoutStreamBase = 0x6000000;

struct BatchLosses {
  double recon = 0;  // mean per-sample reconstruction loss
  double ce = 0;     // mean per-sample cross-entropy
};

// Forward-only evaluation over a window set, batched, no dropout.
inline BatchLosses evaluate_losses(const MultiTaskModel& model,
                                   const std::vector<Window>& windows,
                                   const std::vector<double>& class_wts) {
  const ModelConfig& cfg = model.config();
  const int n = int(windows.size());
  std::vector<int> index(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) index[std::size_t(i)] = i;

  BatchLosses total;
  for (int lo = 0; lo < n; lo += cfg.batch) {
    const int hi = std::min(n, lo + cfg.batch);
    const auto steps = windows_to_steps(windows, index, lo, hi);
    MultiTaskModel::ForwardResult fr;
    model.forward(steps, nn::Mat(), nn::Mat(), fr);
    for (int i = lo; i < hi; ++i) {
      double recon_sq = 0;
      for (int t = 0; t < cfg.window; ++t)
        recon_sq += (steps[std::size_t(t)].row(i - lo) -
                     fr.recon[std::size_t(t)].row(i - lo))
                        .squaredNorm();
      total.recon += recon_sq / double(cfg.window * cfg.features);
    }
    if (cfg.predictor_enabled) {
      const auto y = labels_to_onehot(windows, index, lo, hi, cfg.classes);
      for (int i = lo; i < hi; ++i) {
        double ce = 0;
        for (int t = 0; t < cfg.window; ++t) {
          const auto& yt = y[std::size_t(t)];
          const auto& pt = fr.probs[std::size_t(t)];
          for (int j = 0; j < cfg.classes; ++j)
            if (yt(i - lo, j) != 0.0)
              ce -= std::log(pt(i - lo, j) + nn::kCrossEntropyEpsilon) *
                    class_wts[std::size_t(j)];
        }
        total.ce += ce;
      }
    }
  }
  total.recon /= double(n);
  total.ce /= double(n);
  return total;
}

}  // namespace model_detail

// Minimizes mean over windows of (reconstruction + weighted cross-entropy)
// with Adam, early stopping on the validation loss: stop when it reaches
// val_loss_floor, when it fails to improve for `patience` epochs, or at the
// epoch cap. Training and validation sets must hold only normal windows.
inline TrainReport train_model(MultiTaskModel& model,
                               const std::vector<Window>& train_windows,
                               const std::vector<Window>& val_windows,
                               const std::vector<double>& class_wts,
                               std::uint64_t seed) {
  const ModelConfig& cfg = model.config();
  if (train_windows.empty()) throw DataError("train_model: empty training set");
  if (val_windows.empty()) throw DataError("train_model: empty validation set");
  for (const auto& w : train_windows)
    if (w.rare_label != 0)
      throw DataError("train_model: rare window in training input (user " + w.user_id +
                      ", t=" + std::to_string(w.t) + ")");
  for (const auto& w : val_windows)
    if (w.rare_label != 0)
      throw DataError("train_model: rare window in validation input (user " +
                      w.user_id + ", t=" + std::to_string(w.t) + ")");
  if (cfg.predictor_enabled && int(class_wts.size()) != cfg.classes)
    throw ConfigError("train_model: class weight count mismatch");

  nn::AdamOptimizer optimizer({cfg.learning_rate});
  optimizer.attach(model.params());

  const int n = int(train_windows.size());
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[std::size_t(i)] = i;

  TrainReport report;
  int since_best = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    RngStream shuffle_rng(seed, model_detail::kShuffleStreamBase + std::uint64_t(epoch));
    shuffle_rng.shuffle(order);
    RngStream dropout_rng(seed, model_detail::kDropoutStreamBase + std::uint64_t(epoch));

    double epoch_recon = 0;
    double epoch_ce = 0;
    for (int lo = 0; lo < n; lo += cfg.batch) {
      const int hi = std::min(n, lo + cfg.batch);
      const int b = hi - lo;
      const auto steps = windows_to_steps(train_windows, order, lo, hi);

      nn::Mat enc_mask, pred_mask;
      if (cfg.recurrent_dropout > 0) {
        enc_mask = nn::Mat(b, cfg.hidden);
        pred_mask = cfg.predictor_enabled ? nn::Mat(b, cfg.hidden) : nn::Mat();
        const double keep_scale = 1.0 / (1.0 - cfg.recurrent_dropout);
        for (int i = 0; i < b; ++i) {
          for (int j = 0; j < cfg.hidden; ++j)
            enc_mask(i, j) = dropout_rng.bernoulli(cfg.recurrent_dropout) ? 0.0 : keep_scale;
          if (cfg.predictor_enabled)
            for (int j = 0; j < cfg.hidden; ++j)
              pred_mask(i, j) =
                  dropout_rng.bernoulli(cfg.recurrent_dropout) ? 0.0 : keep_scale;
        }
      }

      MultiTaskModel::ForwardResult fr;
      model.forward(steps, enc_mask, pred_mask, fr);

      // Batch objective: (1/b) sum_i [recon_i + ce_i].
      const double recon_scale = 2.0 / (double(cfg.window * cfg.features) * double(b));
      std::vector<nn::Mat> d_recon(static_cast<std::size_t>(cfg.window));
      double batch_recon = 0;
      for (int t = 0; t < cfg.window; ++t) {
        const nn::Mat diff = fr.recon[std::size_t(t)] - steps[std::size_t(t)];
        batch_recon += diff.squaredNorm();
        d_recon[std::size_t(t)] = recon_scale * diff;
      }
      batch_recon /= double(cfg.window * cfg.features);
      epoch_recon += batch_recon;
      batch_recon /= double(b);

      std::vector<nn::Mat> d_probs;
      if (cfg.predictor_enabled) {
        const auto y = labels_to_onehot(train_windows, order, lo, hi, cfg.classes);
        d_probs.resize(std::size_t(cfg.window));
        double batch_ce = 0;
        for (int t = 0; t < cfg.window; ++t) {
          const auto& yt = y[std::size_t(t)];
          const auto& pt = fr.probs[std::size_t(t)];
          nn::Mat dp = nn::Mat::Zero(b, cfg.classes);
          for (int i = 0; i < b; ++i) {
            for (int j = 0; j < cfg.classes; ++j) {
              if (yt(i, j) != 0.0) {
                batch_ce -= std::log(pt(i, j) + nn::kCrossEntropyEpsilon) *
                            class_wts[std::size_t(j)];
                dp(i, j) = -class_wts[std::size_t(j)] /
                           ((pt(i, j) + nn::kCrossEntropyEpsilon) * double(b));
              }
            }
          }
          d_probs[std::size_t(t)] = std::move(dp);
        }
        epoch_ce += batch_ce;
      }

      optimizer.zero_grads();
      model.backward(fr, d_recon, d_probs);
      optimizer.step();
    }
    report.train_recon.push_back(epoch_recon / double(n));
    report.train_ce.push_back(epoch_ce / double(n));
    report.train_loss.push_back(report.train_recon.back() + report.train_ce.back());

    const auto val = model_detail::evaluate_losses(model, val_windows, class_wts);
    report.val_recon.push_back(val.recon);
    report.val_ce.push_back(val.ce);
    report.val_loss.push_back(val.recon + val.ce);
    report.epochs_run = epoch;

    const double val_loss = report.val_loss.back();
    if (report.best_epoch < 0 || val_loss < report.best_val) {
      report.best_val = val_loss;
      report.best_epoch = epoch;
      since_best = 0;
    } else {
      ++since_best;
    }
    if (val_loss <= cfg.val_loss_floor) {
      report.stop = StopReason::kValFloor;
      return report;
    }
    if (since_best >= cfg.patience) {
      report.stop = StopReason::kPatience;
      return report;
    }
  }
  report.stop = StopReason::kMaxEpochs;
  return report;
}

// ---------------------------------------------------------------------------
// Inference.

// Last-day reconstruction error: mean squared residual over features.
inline double anomaly_score(const nn::Mat& w, const nn::Mat& w_hat) {
  if (w.rows() != w_hat.rows() || w.cols() != w_hat.cols())
    throw DataError("anomaly_score: shape mismatch");
  if (w.rows() < 1) throw DataError("anomaly_score: empty window");
  return (w.row(w.rows() - 1) - w_hat.row(w.rows() - 1)).squaredNorm() /
         double(w.cols());
}

// r_t = 1 iff the predicted label changes between consecutive days; length
// l-1 for l labels.
inline std::vector<int> transition_vector(const std::vector<PerfLabel>& labels) {
  if (labels.size() < 2)
    throw ConfigError("transition_vector: need at least two labels");
  std::vector<int> r(labels.size() - 1);
  for (std::size_t t = 1; t < labels.size(); ++t)
    r[t - 1] = labels[t] != labels[t - 1] ? 1 : 0;
  return r;
}

// s = (1/(l-1)) * sum_t exp(-lambda * t * r_t), t = 1..l-1. Positions with
// no transition contribute exactly 1; more recent transitions (larger t)
// shrink s more, amplifying delta = alpha / s.
inline double scaling_factor(const std::vector<int>& r, double lambda) {
  if (r.empty()) throw ConfigError("scaling_factor: empty transition vector");
  if (lambda <= 0) throw ConfigError("scaling_factor: lambda must be > 0");
  double sum = 0;
  for (std::size_t t = 1; t <= r.size(); ++t) {
    if (r[t - 1] != 0 && r[t - 1] != 1)
      throw ConfigError("scaling_factor: transitions must be 0 or 1");
    sum += r[t - 1] == 1 ? std::exp(-lambda * double(t)) : 1.0;
  }
  return sum / double(r.size());
}

struct DetectionOutcome {
  std::string user_id;
  int t = 0;
  double alpha = 0;
  std::vector<int> transitions;
  double s = 1;
  double delta = 0;
  std::vector<PerfLabel> predicted;
  int decision = 0;
  double gamma_used = 0;
  int true_label = 0;
};

struct ThresholdSet {
  double global = 0;
  std::map<std::string, double> per_user;
  std::set<std::string> fell_back;  // users without enough validation windows
  double percentile = 95.0;
};

namespace model_detail {

// Shared scoring pass: everything detection needs except the threshold.
inline std::vector<DetectionOutcome> score_windows(const MultiTaskModel& model,
                                                   const std::vector<Window>& windows,
                                                   double lambda) {
  const ModelConfig& cfg = model.config();
  const int n = int(windows.size());
  std::vector<int> index(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) index[std::size_t(i)] = i;

  std::vector<DetectionOutcome> out(static_cast<std::size_t>(n));
  for (int lo = 0; lo < n; lo += cfg.batch) {
    const int hi = std::min(n, lo + cfg.batch);
    const auto steps = windows_to_steps(windows, index, lo, hi);
    MultiTaskModel::ForwardResult fr;
    model.forward(steps, nn::Mat(), nn::Mat(), fr);
    for (int i = lo; i < hi; ++i) {
      const Window& w = windows[std::size_t(i)];
      DetectionOutcome& o = out[std::size_t(i)];
      o.user_id = w.user_id;
      o.t = w.t;
      o.true_label = w.rare_label;
      double last_sq = (steps[std::size_t(cfg.window - 1)].row(i - lo) -
                        fr.recon[std::size_t(cfg.window - 1)].row(i - lo))
                           .squaredNorm();
      o.alpha = last_sq / double(cfg.features);
      if (cfg.predictor_enabled) {
        o.predicted.resize(std::size_t(cfg.window));
        for (int t = 0; t < cfg.window; ++t) {
          const auto row = fr.probs[std::size_t(t)].row(i - lo);
          int best = 0;
          for (int j = 1; j < cfg.classes; ++j)
            if (row(j) > row(best)) best = j;  // ties keep the lowest index
          o.predicted[std::size_t(t)] = PerfLabel(best);
        }
        o.transitions = transition_vector(o.predicted);
        o.s = scaling_factor(o.transitions, lambda);
      } else {
        o.transitions.assign(std::size_t(cfg.window - 1), 0);
        o.s = 1.0;
      }
      o.delta = o.alpha / o.s;
    }
  }
  return out;
}

}  // namespace model_detail

// Detection thresholds from validation scores: the chosen percentile of the
// scaled score (or raw alpha when threshold_on_scaled is off), globally and
// optionally per user. Users with fewer than min_user_windows validation
// windows fall back to the global threshold and are flagged. lambda defaults
// to the model's configured decay; sweeps pass other values so thresholds
// stay consistent with the detection statistic.
inline ThresholdSet fit_thresholds(const MultiTaskModel& model,
                                   const std::vector<Window>& val_windows,
                                   double pct, bool per_user, double lambda = 0) {
  if (val_windows.empty()) throw DataError("fit_thresholds: empty validation set");
  for (const auto& w : val_windows)
    if (w.rare_label != 0)
      throw DataError("fit_thresholds: rare window in validation input (user " +
                      w.user_id + ")");
  const ModelConfig& cfg = model.config();
  if (lambda == 0) lambda = cfg.lambda_decay;
  const auto scored = model_detail::score_windows(model, val_windows, lambda);

  std::vector<double> all;
  std::map<std::string, std::vector<double>> by_user;
  all.reserve(scored.size());
  for (const auto& o : scored) {
    const double stat = cfg.threshold_on_scaled ? o.delta : o.alpha;
    all.push_back(stat);
    if (per_user) by_user[o.user_id].push_back(stat);
  }

  ThresholdSet thr;
  thr.percentile = pct;
  thr.global = percentile(all, pct);
  if (per_user) {
    for (auto& [user, scores] : by_user) {
      if (int(scores.size()) >= cfg.min_user_windows)
        thr.per_user[user] = percentile(scores, pct);
      else
        thr.fell_back.insert(user);
    }
  }
  return thr;
}

// Flag windows whose scaled score strictly exceeds the applicable threshold
// (per-user if fitted, else global).
inline std::vector<DetectionOutcome> detect(const MultiTaskModel& model,
                                            const std::vector<Window>& windows,
                                            const ThresholdSet& thresholds,
                                            double lambda) {
  auto scored = model_detail::score_windows(model, windows, lambda);
  const bool on_scaled = model.config().threshold_on_scaled;
  for (auto& o : scored) {
    const auto it = thresholds.per_user.find(o.user_id);
    o.gamma_used = it != thresholds.per_user.end() ? it->second : thresholds.global;
    const double stat = on_scaled ? o.delta : o.alpha;
    o.decision = stat > o.gamma_used ? 1 : 0;
  }
  return scored;
}

// Ablation: flag a window iff the predictor places a label transition at the
// window's final day. No reconstruction involved.
inline std::vector<int> predictor_only_detect(const MultiTaskModel& model,
                                              const std::vector<Window>& windows) {
  if (!model.config().predictor_enabled)
    throw ConfigError("predictor_only_detect: model has no predictor head");
  const auto scored =
      model_detail::score_windows(model, windows, model.config().lambda_decay);
  std::vector<int> decisions(scored.size(), 0);
  for (std::size_t i = 0; i < scored.size(); ++i)
    decisions[i] = scored[i].transitions.back() == 1 ? 1 : 0;
  return decisions;
}

// ---------------------------------------------------------------------------
// Checkpointing: named tensors with shapes, config echo, optional optimizer
// state. JSON doubles round-trip bit-exactly (shortest-representation dump).

inline nlohmann::json model_config_to_json(const ModelConfig& cfg) {
  return nlohmann::json{{"window", cfg.window},
                        {"features", cfg.features},
                        {"classes", cfg.classes},
                        {"hidden", cfg.hidden},
                        {"lambda_decay", cfg.lambda_decay},
                        {"epochs", cfg.epochs},
                        {"batch", cfg.batch},
                        {"learning_rate", cfg.learning_rate},
                        {"recurrent_dropout", cfg.recurrent_dropout},
                        {"patience", cfg.patience},
                        {"val_loss_floor", cfg.val_loss_floor},
                        {"percentile", cfg.percentile},
                        {"min_user_windows", cfg.min_user_windows},
                        {"threshold_on_scaled", cfg.threshold_on_scaled},
                        {"predictor_enabled", cfg.predictor_enabled}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.window = j.at("window").get<int>();
  cfg.features = j.at("features").get<int>();
  cfg.classes = j.at("classes").get<int>();
  cfg.hidden = j.at("hidden").get<int>();
  cfg.lambda_decay = j.at("lambda_decay").get<double>();
  cfg.epochs = j.at("epochs").get<int>();
  cfg.batch = j.at("batch").get<int>();
  cfg.learning_rate = j.at("learning_rate").get<double>();
  cfg.recurrent_dropout = j.at("recurrent_dropout").get<double>();
  cfg.patience = j.at("patience").get<int>();
  cfg.val_loss_floor = j.at("val_loss_floor").get<double>();
  cfg.percentile = j.at("percentile").get<double>();
  cfg.min_user_windows = j.at("min_user_windows").get<int>();
  cfg.threshold_on_scaled = j.at("threshold_on_scaled").get<bool>();
  cfg.predictor_enabled = j.at("predictor_enabled").get<bool>();
  return cfg;
}

namespace model_detail {

inline nlohmann::json tensor_to_json(const nn::Tensor& t) {
  std::vector<double> data;
  data.reserve(std::size_t(t.value.size()));
  for (Eigen::Index i = 0; i < t.value.rows(); ++i)
    for (Eigen::Index j = 0; j < t.value.cols(); ++j) data.push_back(t.value(i, j));
  return nlohmann::json{{"name", t.name},
                        {"rows", t.value.rows()},
                        {"cols", t.value.cols()},
                        {"data", data}};
}

inline nn::Mat mat_from_json(const nlohmann::json& j, const std::string& what) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 || Eigen::Index(data.size()) != rows * cols)
    throw DataError("checkpoint: bad tensor payload for " + what);
  nn::Mat m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j2 = 0; j2 < cols; ++j2) m(i, j2) = data[k++];
  return m;
}

}  // namespace model_detail

inline void save_checkpoint(const MultiTaskModel& model, const nn::AdamOptimizer* opt,
                            const std::string& path) {
  nlohmann::json j;
  j["format_version"] = kFormatVersion;
  j["config"] = model_config_to_json(model.config());
  auto& tensors = j["tensors"] = nlohmann::json::array();
  for (const nn::Tensor* t : model.params())
    tensors.push_back(model_detail::tensor_to_json(*t));
  if (opt != nullptr) {
    nlohmann::json adam;
    adam["step"] = opt->step_count();
    auto& ms = adam["m"] = nlohmann::json::array();
    auto& vs = adam["v"] = nlohmann::json::array();
    const auto params = model.params();
    for (std::size_t i = 0; i < params.size(); ++i) {
      nn::Tensor mt(params[i]->name, int(params[i]->value.rows()),
                    int(params[i]->value.cols()));
      mt.value = opt->first_moments()[i];
      ms.push_back(model_detail::tensor_to_json(mt));
      mt.value = opt->second_moments()[i];
      vs.push_back(model_detail::tensor_to_json(mt));
    }
    j["adam"] = std::move(adam);
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << j.dump() << "\n";
  if (!out) throw DataError("write failed: " + path);
}

struct Checkpoint {
  MultiTaskModel model;
  bool has_adam = false;
  long adam_step = 0;
  std::vector<nn::Mat> adam_m, adam_v;

  // Re-attach and restore optimizer state onto this checkpoint's model.
  void resume(nn::AdamOptimizer& opt) {
    opt.attach(model.params());
    if (has_adam) opt.restore(adam_step, adam_m, adam_v);
  }
};

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("invalid checkpoint JSON in " + path + ": " + e.what());
  }
  if (j.at("format_version").get<int>() != kFormatVersion)
    throw DataError("checkpoint: unsupported format_version in " + path);

  Checkpoint ckpt{MultiTaskModel(model_config_from_json(j.at("config")))};
  auto params = ckpt.model.params();
  const auto& tensors = j.at("tensors");
  if (tensors.size() != params.size())
    throw DataError("checkpoint: tensor count mismatch in " + path);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& tj = tensors[i];
    if (tj.at("name").get<std::string>() != params[i]->name)
      throw DataError("checkpoint: tensor name mismatch: expected " + params[i]->name);
    nn::Mat m = model_detail::mat_from_json(tj, params[i]->name);
    if (m.rows() != params[i]->value.rows() || m.cols() != params[i]->value.cols())
      throw DataError("checkpoint: tensor shape mismatch for " + params[i]->name);
    params[i]->value = std::move(m);
  }
  if (j.contains("adam")) {
    ckpt.has_adam = true;
    ckpt.adam_step = j["adam"].at("step").get<long>();
    for (const auto& mj : j["adam"].at("m"))
      ckpt.adam_m.push_back(model_detail::mat_from_json(mj, "adam.m"));
    for (const auto& vj : j["adam"].at("v"))
      ckpt.adam_v.push_back(model_detail::mat_from_json(vj, "adam.v"));
  }
  return ckpt;
}

}  // namespace mtad
