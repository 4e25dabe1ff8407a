#pragma once

// Isolation forest over fixed-length feature vectors. Trees isolate points by
// recursive random axis-aligned splits; anomalous points isolate in fewer
// splits, so short expected path lengths map to scores near 1.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include <Eigen/Core>

#include "mtad/errors.hpp"
#include "mtad/rng.hpp"
#include "mtad/stats.hpp"

namespace mtad {

struct IsolationForestConfig {
  int trees = 200;
  int sample_size = 256;
  double contamination = 0.02;  // target training flag rate

  void validate() const {
    if (trees < 1) throw ConfigError("IsolationForestConfig: trees must be >= 1");
    if (sample_size < 2)
      throw ConfigError("IsolationForestConfig: sample_size must be >= 2");
    if (contamination <= 0 || contamination >= 0.5)
      throw ConfigError("IsolationForestConfig: contamination must be in (0, 0.5)");
  }
};

namespace iforest_detail {

inline constexpr double kEulerGamma = 0.57721566490153286060;
inline constexpr std::uint64_t kTreeStreamBase = 0x7000000;

inline double harmonic(long n) {
  if (n <= 0) return 0;
  if (n <= 64) {
    double h = 0;
    for (long i = 1; i <= n; ++i) h += 1.0 / double(i);
    return h;
  }
  return std::log(double(n)) + kEulerGamma;
}

}  // namespace iforest_detail

// Average path length of an unsuccessful BST search in a subsample of size n;
// normalizes path lengths and terminates unsplit leaves.
inline double average_path_length(long n) {
  if (n <= 1) return 0;
  if (n == 2) return 1;
  return 2.0 * iforest_detail::harmonic(n - 1) - 2.0 * double(n - 1) / double(n);
}

class IsolationForest {
 public:
  explicit IsolationForest(IsolationForestConfig cfg = {}) : cfg_(cfg) {
    cfg_.validate();
  }

  const IsolationForestConfig& config() const { return cfg_; }

  // Builds the ensemble on rows of x, then fixes the decision threshold at
  // the (1 - contamination) percentile of the training scores.
  void fit(const Eigen::MatrixXd& x, std::uint64_t seed) {
    if (x.rows() < 2) throw DataError("IsolationForest: need at least 2 rows");
    if (x.cols() < 1) throw DataError("IsolationForest: need at least 1 feature");
    const long n = x.rows();
    const long psi = std::min<long>(cfg_.sample_size, n);
    height_limit_ = int(std::ceil(std::log2(double(psi))));
    path_norm_ = average_path_length(psi);
    if (path_norm_ <= 0)
      throw NumericError("IsolationForest: degenerate path normalizer");

    trees_.assign(std::size_t(cfg_.trees), {});
    std::vector<long> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), 0L);
    for (int k = 0; k < cfg_.trees; ++k) {
      RngStream rng(seed, iforest_detail::kTreeStreamBase + std::uint64_t(k));
      // Partial Fisher-Yates: the first psi entries become the subsample.
      std::vector<long> idx = all;
      for (long i = 0; i < psi; ++i) {
        const long j = i + long(rng.uniform_int(0, std::uint64_t(n - 1 - i)));
        std::swap(idx[std::size_t(i)], idx[std::size_t(j)]);
      }
      idx.resize(std::size_t(psi));
      build(trees_[std::size_t(k)], x, idx, 0, rng);
    }

    train_scores_.resize(std::size_t(n));
    for (long i = 0; i < n; ++i) train_scores_[std::size_t(i)] = score(x.row(i));
    threshold_ = percentile(train_scores_, 100.0 * (1.0 - cfg_.contamination));
  }

  // Anomaly score in (0, 1): 2^(-E[h(x)] / c(psi)).
  double score(const Eigen::RowVectorXd& row) const {
    if (trees_.empty()) throw ConfigError("IsolationForest: not fitted");
    double total = 0;
    for (const auto& tree : trees_) total += path_length(tree, row);
    return std::exp2(-(total / double(trees_.size())) / path_norm_);
  }

  std::vector<double> score_rows(const Eigen::MatrixXd& x) const {
    std::vector<double> out(std::size_t(x.rows()));
    for (long i = 0; i < x.rows(); ++i) out[std::size_t(i)] = score(x.row(i));
    return out;
  }

  // 1 iff the score strictly exceeds the fitted threshold.
  std::vector<int> decide_rows(const Eigen::MatrixXd& x) const {
    std::vector<int> out(std::size_t(x.rows()));
    for (long i = 0; i < x.rows(); ++i)
      out[std::size_t(i)] = score(x.row(i)) > threshold_ ? 1 : 0;
    return out;
  }

  double threshold() const {
    if (trees_.empty()) throw ConfigError("IsolationForest: not fitted");
    return threshold_;
  }

  const std::vector<double>& train_scores() const { return train_scores_; }

 private:
  struct Node {
    int feature = -1;      // -1 marks a leaf
    double split = 0;
    int left = -1, right = -1;
    long size = 0;         // leaf only: points that terminated here
  };
  using Tree = std::vector<Node>;

  void build(Tree& tree, const Eigen::MatrixXd& x, const std::vector<long>& rows,
             int depth, RngStream& rng) {
    const int node_id = int(tree.size());
    tree.push_back({});
    if (depth >= height_limit_ || rows.size() <= 1) {
      tree[std::size_t(node_id)].size = long(rows.size());
      return;
    }

    // Split on a feature that actually varies within this node.
    std::vector<int> varying;
    std::vector<double> lo(std::size_t(x.cols())), hi(std::size_t(x.cols()));
    for (int f = 0; f < int(x.cols()); ++f) {
      double mn = x(rows.front(), f), mx = mn;
      for (long r : rows) {
        mn = std::min(mn, x(r, f));
        mx = std::max(mx, x(r, f));
      }
      lo[std::size_t(f)] = mn;
      hi[std::size_t(f)] = mx;
      if (mx > mn) varying.push_back(f);
    }
    if (varying.empty()) {
      tree[std::size_t(node_id)].size = long(rows.size());
      return;
    }
    const int f =
        varying[std::size_t(rng.uniform_int(0, std::uint64_t(varying.size() - 1)))];
    const double split = rng.uniform(lo[std::size_t(f)], hi[std::size_t(f)]);

    std::vector<long> left_rows, right_rows;
    for (long r : rows)
      (x(r, f) < split ? left_rows : right_rows).push_back(r);
    if (left_rows.empty() || right_rows.empty()) {
      // Split landed on the boundary value; terminate rather than recurse
      // without progress.
      tree[std::size_t(node_id)].size = long(rows.size());
      return;
    }

    tree[std::size_t(node_id)].feature = f;
    tree[std::size_t(node_id)].split = split;
    const int left_id = int(tree.size());
    build(tree, x, left_rows, depth + 1, rng);
    const int right_id = int(tree.size());
    build(tree, x, right_rows, depth + 1, rng);
    tree[std::size_t(node_id)].left = left_id;
    tree[std::size_t(node_id)].right = right_id;
  }

  double path_length(const Tree& tree, const Eigen::RowVectorXd& row) const {
    int node = 0;
    int depth = 0;
    while (tree[std::size_t(node)].feature >= 0) {
      const Node& nd = tree[std::size_t(node)];
      node = row(nd.feature) < nd.split ? nd.left : nd.right;
      ++depth;
    }
    return double(depth) + average_path_length(tree[std::size_t(node)].size);
  }

  IsolationForestConfig cfg_;
  std::vector<Tree> trees_;
  int height_limit_ = 0;
  double path_norm_ = 0;
  double threshold_ = 0;
  std::vector<double> train_scores_;
};

}  // namespace mtad
