#pragma once

// Pre/post-event Granger-style analysis: for each event and feature, test
// whether the pre-event segment adds explanatory power for the post-event
// segment beyond the post segment's own lags. Restricted vs unrestricted OLS
// with the SSR-based F test, lags 1..max_lag, significant if any lag clears
// p < alpha.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mtad/errors.hpp"
#include "mtad/schema.hpp"
#include "mtad/special_functions.hpp"

namespace mtad {

struct LaggedRegression {
  Eigen::VectorXd coefficients;
  double ssr = 0;
  int n_obs = 0;
  int n_params = 0;
};

// Least squares through column-pivoted QR. Rank deficiency is an error that
// names the dependent columns rather than silently returning one solution of
// many.
inline LaggedRegression ols_fit(const Eigen::VectorXd& y, const Eigen::MatrixXd& x) {
  if (x.rows() != y.size())
    throw DataError("ols_fit: row count mismatch between y and X");
  if (x.rows() <= x.cols())
    throw DataError("ols_fit: need more observations than parameters");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < x.cols()) {
    const auto& perm = qr.colsPermutation().indices();
    std::string cols;
    for (Eigen::Index i = qr.rank(); i < x.cols(); ++i) {
      if (!cols.empty()) cols += ", ";
      cols += std::to_string(perm[i]);
    }
    throw DataError("ols_fit: design matrix is rank deficient (dependent columns: " +
                    cols + ")");
  }
  LaggedRegression r;
  r.coefficients = qr.solve(y);
  r.ssr = (y - x * r.coefficients).squaredNorm();
  r.n_obs = int(x.rows());
  r.n_params = int(x.cols());
  return r;
}

enum class LagStatus {
  kOk,
  kDegenerate,  // unrestricted model fits perfectly; p reported as 0
  kInfeasible,  // not enough observations for this lag's error dof
};

struct LagTest {
  int lag = 0;
  double f_stat = 0;
  double p_value = 1;
  LagStatus status = LagStatus::kOk;
};

struct GrangerResult {
  std::vector<LagTest> lags;
  bool significant = false;
};

// Does `source` Granger-cause `target`? Both series must be positionally
// aligned and equal length. For lag L the regression rows are t = L..n-1,
// restricted design [1, target lags 1..L], unrestricted adds source lags.
inline GrangerResult granger_f_test(const std::vector<double>& target,
                                    const std::vector<double>& source,
                                    int max_lag = 6, double alpha = 0.05) {
  const int n = int(target.size());
  if (int(source.size()) != n)
    throw DataError("granger_f_test: target and source lengths differ");
  if (max_lag < 1) throw ConfigError("granger_f_test: max_lag must be >= 1");
  if (n < 2 * max_lag + 3)
    throw DataError("granger_f_test: series too short (" + std::to_string(n) +
                    " points for max_lag " + std::to_string(max_lag) + ")");

  GrangerResult res;
  for (int lag = 1; lag <= max_lag; ++lag) {
    LagTest lt;
    lt.lag = lag;
    const int n_eff = n - lag;
    const int dof2 = n_eff - 2 * lag - 1;
    if (dof2 < 1) {
      // Error dof would be empty; the lag cannot be tested at this length.
      lt.f_stat = std::numeric_limits<double>::quiet_NaN();
      lt.p_value = std::numeric_limits<double>::quiet_NaN();
      lt.status = LagStatus::kInfeasible;
      res.lags.push_back(lt);
      continue;
    }
    Eigen::VectorXd y(n_eff);
    Eigen::MatrixXd xr(n_eff, lag + 1);
    Eigen::MatrixXd xu(n_eff, 2 * lag + 1);
    for (int t = lag; t < n; ++t) {
      const int row = t - lag;
      y(row) = target[std::size_t(t)];
      xr(row, 0) = 1.0;
      xu(row, 0) = 1.0;
      for (int j = 1; j <= lag; ++j) {
        xr(row, j) = target[std::size_t(t - j)];
        xu(row, j) = target[std::size_t(t - j)];
        xu(row, lag + j) = source[std::size_t(t - j)];
      }
    }
    const LaggedRegression restricted = ols_fit(y, xr);
    const LaggedRegression unrestricted = ols_fit(y, xu);
    const double ssr_r = restricted.ssr;
    const double ssr_u = unrestricted.ssr;
    if (ssr_u <= 1e-12 * std::max(1.0, ssr_r)) {
      lt.f_stat = std::numeric_limits<double>::infinity();
      lt.p_value = 0.0;
      lt.status = LagStatus::kDegenerate;
      res.lags.push_back(lt);
      if (alpha > 0) res.significant = true;
      continue;
    }
    double f = ((ssr_r - ssr_u) / double(lag)) / (ssr_u / double(dof2));
    if (f < 0) f = 0;  // models are nested; negative values are rounding noise
    lt.f_stat = f;
    lt.p_value = f_upper_tail(f, lag, dof2);
    res.lags.push_back(lt);
    if (lt.p_value < alpha) res.significant = true;
  }
  return res;
}

// Pre/post segments around an event at position `event_pos` in the series.
// The pre segment includes the event day. Both sides are truncated to the
// same length n (last n pre rows, first n post rows) so lagged rows align
// positionally across the event boundary.
struct PrePostSegments {
  Eigen::MatrixXd pre;
  Eigen::MatrixXd post;
};

inline std::optional<PrePostSegments> pre_post_split(const UserSeries& series,
                                                     int event_pos,
                                                     std::string* skip_reason = nullptr,
                                                     int min_side = 15) {
  const int T = series.length();
  if (event_pos < 0 || event_pos >= T)
    throw ConfigError("pre_post_split: event position out of range");
  const int n_pre = event_pos + 1;
  const int n_post = T - 1 - event_pos;
  if (n_pre < min_side || n_post < min_side) {
    if (skip_reason)
      *skip_reason = "fewer than " + std::to_string(min_side) +
                     " days on one side of the event";
    return std::nullopt;
  }
  const int n = std::min(n_pre, n_post);
  const int m = int(series.days.front().features.size());
  PrePostSegments seg;
  seg.pre.resize(n, m);
  seg.post.resize(n, m);
  for (int i = 0; i < n; ++i) {
    const DayRecord& dpre = series.days[std::size_t(event_pos - n + 1 + i)];
    const DayRecord& dpost = series.days[std::size_t(event_pos + 1 + i)];
    for (int f = 0; f < m; ++f) {
      seg.pre(i, f) = dpre.features[std::size_t(f)];
      seg.post(i, f) = dpost.features[std::size_t(f)];
    }
  }
  return seg;
}

struct EventGrangerDetail {
  std::string user_id;
  int day = 0;
  bool tested = false;
  std::string skip_reason;
  std::vector<GrangerResult> per_feature;  // indexed by feature, empty if skipped
};

struct GrangerReport {
  std::vector<long> significant_count;  // per feature
  int total_series = 0;                 // events that passed eligibility
  int skipped = 0;
  int rank_failures = 0;  // per-feature tests aborted on rank deficiency
  std::vector<EventGrangerDetail> details;
};

// Cohort-level scan: one pre->post test per (eligible event, feature). The
// series should be imputed first; the F statistic is invariant to each
// feature's affine normalization, so raw imputed values are fine.
inline GrangerReport significance_counts(const Cohort& cohort, int max_lag = 6,
                                         double alpha = 0.05, int min_side = 15) {
  if (cohort.empty()) throw DataError("significance_counts: empty cohort");
  const int m = int(cohort.front().days.front().features.size());
  GrangerReport report;
  report.significant_count.assign(std::size_t(m), 0);

  for (const auto& user : cohort) {
    for (int pos = 0; pos < user.length(); ++pos) {
      if (user.days[std::size_t(pos)].rare_label != 1) continue;
      EventGrangerDetail detail;
      detail.user_id = user.user_id;
      detail.day = user.days[std::size_t(pos)].day_index;
      const auto seg = pre_post_split(user, pos, &detail.skip_reason, min_side);
      if (!seg) {
        ++report.skipped;
        report.details.push_back(std::move(detail));
        continue;
      }
      detail.tested = true;
      detail.per_feature.resize(std::size_t(m));
      for (int f = 0; f < m; ++f) {
        std::vector<double> pre(std::size_t(seg->pre.rows()));
        std::vector<double> post(std::size_t(seg->post.rows()));
        for (int i = 0; i < seg->pre.rows(); ++i) {
          pre[std::size_t(i)] = seg->pre(i, f);
          post[std::size_t(i)] = seg->post(i, f);
        }
        try {
          detail.per_feature[std::size_t(f)] =
              granger_f_test(post, pre, max_lag, alpha);
        } catch (const DataError&) {
          ++report.rank_failures;
          continue;
        }
        if (detail.per_feature[std::size_t(f)].significant)
          ++report.significant_count[std::size_t(f)];
      }
      ++report.total_series;
      report.details.push_back(std::move(detail));
    }
  }
  return report;
}

}  // namespace mtad
