#pragma once

// Preprocessing pipeline pieces: mean imputation with calendar gap filling,
// forward fill of performance labels from event days, within-subject
// normalization against a caller-chosen fit set, and rolling window
// extraction.

#include <string>
#include <unordered_set>
#include <vector>

#include "mtad/errors.hpp"
#include "mtad/schema.hpp"
#include "mtad/stats.hpp"

namespace mtad {

// Replaces every missing entry by the per-user per-feature mean of observed
// values, and inserts fully-imputed records for day_index gaps so the series
// becomes consecutive. Masks are preserved so imputation remains auditable.
inline UserSeries impute_mean(const UserSeries& series) {
  if (series.days.empty())
    throw DataError("impute_mean: empty series for user " + series.user_id);
  const int m = int(series.days.front().features.size());

  std::vector<double> sum(m, 0.0);
  std::vector<long> count(m, 0);
  for (const auto& d : series.days) {
    if (int(d.features.size()) != m || int(d.observed.size()) != m)
      throw DataError("impute_mean: ragged feature row for user " + series.user_id);
    for (int f = 0; f < m; ++f) {
      if (d.observed[f]) {
        sum[f] += d.features[f];
        ++count[f];
      }
    }
  }
  std::vector<double> fill(m);
  for (int f = 0; f < m; ++f) {
    if (count[f] == 0)
      throw DataError("impute_mean: feature " + std::to_string(f) +
                      " has no observed values for user " + series.user_id);
    fill[f] = sum[f] / double(count[f]);
  }

  UserSeries out;
  out.user_id = series.user_id;
  out.norm_stats = series.norm_stats;
  out.days.reserve(series.days.size());
  int prev = series.days.front().day_index;
  for (std::size_t i = 0; i < series.days.size(); ++i) {
    const DayRecord& d = series.days[i];
    if (i > 0) {
      if (d.day_index <= prev)
        throw DataError("impute_mean: day_index not strictly increasing for user " +
                        series.user_id);
      for (int gap = prev + 1; gap < d.day_index; ++gap) {
        DayRecord g;
        g.day_index = gap;
        g.features = fill;
        g.observed.assign(std::size_t(m), 0);
        g.rare_label = -1;
        out.days.push_back(std::move(g));
      }
    }
    DayRecord nd = d;
    for (int f = 0; f < m; ++f)
      if (!nd.observed[f]) nd.features[f] = fill[f];
    out.days.push_back(std::move(nd));
    prev = d.day_index;
  }
  return out;
}

// Day-wise performance labels: days that carry a label keep it, unlabeled
// days inherit the most recent known label (kUnknown before the first).
// Unreported rare labels become 0; reported event days keep 1. Idempotent.
inline UserSeries forward_fill_labels(const UserSeries& series) {
  UserSeries out = series;
  PerfLabel current = PerfLabel::kUnknown;
  for (auto& d : out.days) {
    d.rare_label = d.rare_label == 1 ? 1 : 0;
    if (d.perf_label)
      current = *d.perf_label;
    else
      d.perf_label = current;
  }
  return out;
}

// Within-subject z-scoring. Mean and population std come only from the days
// listed in fit_days (by day_index), so held-out data never leaks into the
// statistics. Zero-variance features map to 0.
inline UserSeries normalize_within_subject(const UserSeries& series,
                                           const std::vector<int>& fit_days) {
  if (fit_days.empty())
    throw ConfigError("normalize_within_subject: empty fit set");
  if (series.days.empty())
    throw DataError("normalize_within_subject: empty series for user " + series.user_id);
  const int m = int(series.days.front().features.size());

  std::unordered_set<int> fit(fit_days.begin(), fit_days.end());
  std::vector<std::vector<double>> cols(static_cast<std::size_t>(m));
  for (const auto& d : series.days) {
    if (!fit.count(d.day_index)) continue;
    for (int f = 0; f < m; ++f) cols[std::size_t(f)].push_back(d.features[f]);
  }
  if (cols[0].empty())
    throw ConfigError("normalize_within_subject: fit set matches no days for user " +
                      series.user_id);

  UserSeries out = series;
  out.norm_stats.mean.resize(std::size_t(m));
  out.norm_stats.scale.resize(std::size_t(m));
  out.norm_stats.fitted = true;
  for (int f = 0; f < m; ++f) {
    out.norm_stats.mean[std::size_t(f)] = mean_of(cols[std::size_t(f)]);
    out.norm_stats.scale[std::size_t(f)] = pop_std(cols[std::size_t(f)]);
  }
  for (auto& d : out.days) {
    for (int f = 0; f < m; ++f) {
      const double mu = out.norm_stats.mean[std::size_t(f)];
      const double sc = out.norm_stats.scale[std::size_t(f)];
      d.features[f] = sc > 0 ? (d.features[f] - mu) / sc : 0.0;
    }
  }
  return out;
}

// Inverse of normalize_within_subject for a series carrying fitted stats.
inline UserSeries denormalize_within_subject(const UserSeries& series) {
  if (!series.norm_stats.fitted)
    throw ConfigError("denormalize_within_subject: series has no fitted stats");
  UserSeries out = series;
  const int m = int(out.norm_stats.mean.size());
  for (auto& d : out.days) {
    for (int f = 0; f < m; ++f) {
      const double mu = out.norm_stats.mean[std::size_t(f)];
      const double sc = out.norm_stats.scale[std::size_t(f)];
      d.features[f] = sc > 0 ? d.features[f] * sc + mu : mu;
    }
  }
  return out;
}

// All length-l windows over consecutive days. A series shorter than l yields
// no windows and bumps *warning_count. Labels should be forward filled
// first; days without a label fall back to kUnknown.
inline std::vector<Window> make_windows(const UserSeries& series, int l,
                                        int* warning_count = nullptr) {
  if (l < 2) throw ConfigError("make_windows: window length must be >= 2");
  std::vector<Window> out;
  const int T = series.length();
  if (T < l) {
    if (warning_count) ++*warning_count;
    return out;
  }
  const int m = int(series.days.front().features.size());
  out.reserve(std::size_t(T - l + 1));
  for (int end = l - 1; end < T; ++end) {
    Window w;
    w.user_id = series.user_id;
    w.t = series.days[std::size_t(end)].day_index;
    w.data.resize(l, m);
    w.perf_vec.resize(std::size_t(l));
    for (int r = 0; r < l; ++r) {
      const DayRecord& d = series.days[std::size_t(end - l + 1 + r)];
      for (int f = 0; f < m; ++f) w.data(r, f) = d.features[f];
      w.perf_vec[std::size_t(r)] = d.perf_label.value_or(PerfLabel::kUnknown);
    }
    w.rare_label = series.days[std::size_t(end)].rare_label == 1 ? 1 : 0;
    out.push_back(std::move(w));
  }
  return out;
}

// Missing-data audit around one event day: the fraction of days in
// [day - span, day + span] (clipped to the series) that have any unobserved
// feature.
struct EventSpanAudit {
  int day = 0;
  int span_days = 0;
  int imputed_days = 0;
  double fraction = 0;
};

inline std::vector<EventSpanAudit> audit_event_spans(const UserSeries& series,
                                                     int span = 30) {
  std::vector<EventSpanAudit> out;
  const int T = series.length();
  for (int i = 0; i < T; ++i) {
    if (series.days[std::size_t(i)].rare_label != 1) continue;
    EventSpanAudit a;
    a.day = series.days[std::size_t(i)].day_index;
    const int lo = std::max(0, i - span);
    const int hi = std::min(T - 1, i + span);
    a.span_days = hi - lo + 1;
    for (int j = lo; j <= hi; ++j) {
      const auto& obs = series.days[std::size_t(j)].observed;
      bool any_missing = false;
      for (auto o : obs) {
        if (!o) {
          any_missing = true;
          break;
        }
      }
      if (any_missing) ++a.imputed_days;
    }
    a.fraction = a.span_days > 0 ? double(a.imputed_days) / double(a.span_days) : 0.0;
    out.push_back(a);
  }
  return out;
}

}  // namespace mtad
