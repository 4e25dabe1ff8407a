#pragma once

// Experimental protocol: per-user 80:10:10 splits of normal windows with all
// rare windows held out for testing, leakage-safe normalization, exact-day
// positive-class metrics, multi-seed aggregation, parameter sweeps, the
// predictor-only ablation, and per-event-type recall reporting.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "mtad/csv_io.hpp"
#include "mtad/errors.hpp"
#include "mtad/iforest.hpp"
#include "mtad/model.hpp"
#include "mtad/preprocess.hpp"
#include "mtad/rng.hpp"
#include "mtad/schema.hpp"
#include "mtad/stats.hpp"

namespace mtad {

// ---------------------------------------------------------------------------
// Exact-day metrics.

struct Metrics {
  double precision = 0, recall = 0, f1 = 0;
  long tp = 0, fp = 0, fn = 0, tn = 0;
};

// Positive-class precision/recall/F1 over aligned exact-day decisions. No
// predicted positives -> precision 0; no true positives -> recall 0;
// P+R = 0 -> F1 0.
inline Metrics score_exact_day(const std::vector<int>& decisions,
                               const std::vector<int>& truth) {
  if (decisions.size() != truth.size())
    throw DataError("score_exact_day: decision/truth length mismatch");
  Metrics m;
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    const bool d = decisions[i] != 0, y = truth[i] != 0;
    if (d && y) ++m.tp;
    else if (d && !y) ++m.fp;
    else if (!d && y) ++m.fn;
    else ++m.tn;
  }
  m.precision = m.tp + m.fp > 0 ? double(m.tp) / double(m.tp + m.fp) : 0.0;
  m.recall = m.tp + m.fn > 0 ? double(m.tp) / double(m.tp + m.fn) : 0.0;
  m.f1 = m.precision + m.recall > 0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

// Tie-aware area under the ROC curve (average rank of positives).
inline double auroc(const std::vector<double>& scores, const std::vector<int>& truth) {
  if (scores.size() != truth.size())
    throw DataError("auroc: score/truth length mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<double> rank(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double mid = 0.5 * double(i + j) + 1.0;  // 1-based midrank
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
    i = j + 1;
  }
  long npos = 0;
  double rank_sum = 0;
  for (std::size_t k = 0; k < n; ++k)
    if (truth[k] != 0) {
      ++npos;
      rank_sum += rank[k];
    }
  const long nneg = long(n) - npos;
  if (npos == 0 || nneg == 0) throw DataError("auroc: need both classes");
  return (rank_sum - 0.5 * double(npos) * double(npos + 1)) /
         (double(npos) * double(nneg));
}

// ---------------------------------------------------------------------------
// Splits.

enum class SplitMode { kRandom, kContiguous };

struct SplitSpec {
  std::uint64_t seed = 0;
  SplitMode mode = SplitMode::kRandom;
  struct UserSplit {
    std::vector<int> train, val, test;  // window end day indices, ascending
  };
  std::map<std::string, UserSplit> users;
  std::vector<std::string> excluded;  // users with too few normal windows
};

// Partition each user's window end days: normals shuffled (or kept in time
// order for contiguous mode) then split val/test = floor(n/10) each, train =
// remainder; rare end days all go to test. Users under min_normal_windows
// are excluded and reported.
inline SplitSpec make_splits(const Cohort& cohort, int window, std::uint64_t seed,
                             int min_normal_windows = 10,
                             SplitMode mode = SplitMode::kRandom) {
  if (window < 2) throw ConfigError("make_splits: window must be >= 2");
  if (min_normal_windows < 3)
    throw ConfigError("make_splits: min_normal_windows must be >= 3");
  SplitSpec spec;
  spec.seed = seed;
  spec.mode = mode;
  for (const UserSeries& series : cohort) {
    const int t_len = int(series.days.size());
    std::vector<int> normals, rares;
    for (int p = window - 1; p < t_len; ++p) {
      const DayRecord& day = series.days[std::size_t(p)];
      (day.rare_label == 1 ? rares : normals).push_back(day.day_index);
    }
    if (int(normals.size()) < min_normal_windows) {
      spec.excluded.push_back(series.user_id);
      continue;
    }
    if (mode == SplitMode::kRandom) {
      RngStream rng(seed, fnv1a64(series.user_id));
      rng.shuffle(normals);
    }
    const int n = int(normals.size());
    const int n_val = n / 10, n_test = n / 10;
    SplitSpec::UserSplit us;
    if (mode == SplitMode::kRandom) {
      us.val.assign(normals.begin(), normals.begin() + n_val);
      us.test.assign(normals.begin() + n_val, normals.begin() + n_val + n_test);
      us.train.assign(normals.begin() + n_val + n_test, normals.end());
    } else {
      // Time order: earliest windows train, then validate, then test.
      us.train.assign(normals.begin(), normals.end() - n_val - n_test);
      us.val.assign(normals.end() - n_val - n_test, normals.end() - n_test);
      us.test.assign(normals.end() - n_test, normals.end());
    }
    us.test.insert(us.test.end(), rares.begin(), rares.end());
    std::sort(us.train.begin(), us.train.end());
    std::sort(us.val.begin(), us.val.end());
    std::sort(us.test.begin(), us.test.end());
    spec.users.emplace(series.user_id, std::move(us));
  }
  if (spec.users.empty()) throw DataError("make_splits: no eligible users");
  return spec;
}

struct SplitWindows {
  std::vector<Window> train, val, test;
  // Per-day views for methods that score single days: rows are the
  // (normalized) end-day feature vectors of the corresponding windows.
  Eigen::MatrixXd day_fit;   // train + val end days
  Eigen::MatrixXd day_test;  // test end days, row i <-> test[i]
};

// Normalizes each user's series on its train+val end days only, builds
// windows, and routes them per the split. Rare windows can only land in
// test; a violation is a hard error.
inline SplitWindows materialize_split(const Cohort& cohort, const SplitSpec& spec,
                                      int window) {
  SplitWindows out;
  std::map<std::string, const UserSeries*> index;
  for (const UserSeries& s : cohort) index[s.user_id] = &s;

  std::vector<Eigen::RowVectorXd> fit_rows, test_rows;
  for (const auto& [user_id, us] : spec.users) {
    const auto it = index.find(user_id);
    if (it == index.end())
      throw DataError("materialize_split: user " + user_id + " not in cohort");
    std::vector<int> fit_days = us.train;
    fit_days.insert(fit_days.end(), us.val.begin(), us.val.end());
    const UserSeries series = normalize_within_subject(*it->second, fit_days);

    const std::set<int> train_set(us.train.begin(), us.train.end());
    const std::set<int> val_set(us.val.begin(), us.val.end());
    const std::set<int> test_set(us.test.begin(), us.test.end());
    for (Window& w : make_windows(series, window)) {
      if (train_set.count(w.t)) {
        if (w.rare_label != 0)
          throw DataError("materialize_split: rare window routed to train for user " +
                          user_id);
        fit_rows.emplace_back(w.data.row(w.data.rows() - 1));
        out.train.push_back(std::move(w));
      } else if (val_set.count(w.t)) {
        if (w.rare_label != 0)
          throw DataError("materialize_split: rare window routed to val for user " +
                          user_id);
        fit_rows.emplace_back(w.data.row(w.data.rows() - 1));
        out.val.push_back(std::move(w));
      } else if (test_set.count(w.t)) {
        test_rows.emplace_back(w.data.row(w.data.rows() - 1));
        out.test.push_back(std::move(w));
      } else {
        throw DataError("materialize_split: window end day " + std::to_string(w.t) +
                        " missing from split for user " + user_id);
      }
    }
  }
  if (out.train.empty() || out.val.empty() || out.test.empty())
    throw DataError("materialize_split: a partition came out empty");

  const auto m = fit_rows.front().cols();
  out.day_fit.resize(long(fit_rows.size()), m);
  for (std::size_t i = 0; i < fit_rows.size(); ++i) out.day_fit.row(long(i)) = fit_rows[i];
  out.day_test.resize(long(test_rows.size()), m);
  for (std::size_t i = 0; i < test_rows.size(); ++i)
    out.day_test.row(long(i)) = test_rows[i];
  return out;
}

// ---------------------------------------------------------------------------
// Methods and per-split evaluation.

enum class Method {
  kMtad,
  kMtadPt,
  kLstmEd,
  kLstmEdPt,
  kIsolationForest,
  kPredictorOnly,
};

inline const char* to_string(Method m) {
  switch (m) {
    case Method::kMtad: return "MTAD";
    case Method::kMtadPt: return "MTAD-PT";
    case Method::kLstmEd: return "LSTM-ED";
    case Method::kLstmEdPt: return "LSTM-ED-PT";
    case Method::kIsolationForest: return "IF";
    case Method::kPredictorOnly: return "PREDICTOR-ONLY";
  }
  throw ConfigError("to_string: invalid Method");
}

inline Method parse_method(const std::string& s) {
  if (s == "MTAD") return Method::kMtad;
  if (s == "MTAD-PT") return Method::kMtadPt;
  if (s == "LSTM-ED") return Method::kLstmEd;
  if (s == "LSTM-ED-PT") return Method::kLstmEdPt;
  if (s == "IF") return Method::kIsolationForest;
  if (s == "PREDICTOR-ONLY") return Method::kPredictorOnly;
  throw ConfigError("unknown method: " + s);
}

inline std::vector<Method> all_methods() {
  return {Method::kMtad,   Method::kMtadPt,          Method::kLstmEd,
          Method::kLstmEdPt, Method::kIsolationForest, Method::kPredictorOnly};
}

struct EvalConfig {
  ModelConfig model;  // multi-task configuration; the reconstruction-only
                      // baseline reuses it with the predictor disabled
  int ed_epochs = 300;
  IsolationForestConfig iforest;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  int min_normal_windows = 10;
  SplitMode split_mode = SplitMode::kRandom;
  std::vector<Method> methods = all_methods();

  void validate() const {
    model.validate();
    iforest.validate();
    if (ed_epochs < 1) throw ConfigError("EvalConfig: ed_epochs must be >= 1");
    if (seeds.empty()) throw ConfigError("EvalConfig: seeds must be nonempty");
    if (methods.empty()) throw ConfigError("EvalConfig: methods must be nonempty");
    if (min_normal_windows < 3)
      throw ConfigError("EvalConfig: min_normal_windows must be >= 3");
  }
};

struct TrainedSplit {
  std::uint64_t seed = 0;
  SplitSpec spec;
  SplitWindows data;
  std::vector<double> class_wts;
  MultiTaskModel mtad;
  MultiTaskModel lstm_ed;
  TrainReport mtad_report, ed_report;
  IsolationForest iforest;

  TrainedSplit(const ModelConfig& mtad_cfg, const ModelConfig& ed_cfg,
               const IsolationForestConfig& if_cfg)
      : mtad(mtad_cfg), lstm_ed(ed_cfg), iforest(if_cfg) {}
};

// Split, train the multi-task model, the reconstruction-only model, and the
// isolation forest, all from one seed.
inline TrainedSplit train_split(const Cohort& cohort, std::uint64_t seed,
                                const EvalConfig& cfg) {
  cfg.validate();
  ModelConfig ed_cfg = cfg.model;
  ed_cfg.predictor_enabled = false;
  ed_cfg.epochs = cfg.ed_epochs;

  TrainedSplit ts(cfg.model, ed_cfg, cfg.iforest);
  ts.seed = seed;
  ts.spec = make_splits(cohort, cfg.model.window, seed, cfg.min_normal_windows,
                        cfg.split_mode);
  ts.data = materialize_split(cohort, ts.spec, cfg.model.window);
  ts.class_wts =
      nn::class_weights(count_window_labels(ts.data.train, cfg.model.classes));
  ts.mtad.init(seed);
  ts.mtad_report =
      train_model(ts.mtad, ts.data.train, ts.data.val, ts.class_wts, seed);
  ts.lstm_ed.init(seed);
  ts.ed_report =
      train_model(ts.lstm_ed, ts.data.train, ts.data.val, ts.class_wts, seed);
  ts.iforest.fit(ts.data.day_fit, seed);
  return ts;
}

inline std::vector<TrainedSplit> train_all_splits(const Cohort& cohort,
                                                  const EvalConfig& cfg) {
  cfg.validate();
  std::vector<TrainedSplit> out;
  out.reserve(cfg.seeds.size());
  for (const std::uint64_t seed : cfg.seeds) {
    try {
      out.push_back(train_split(cohort, seed, cfg));
    } catch (const std::exception& e) {
      throw DataError("split " + std::to_string(seed) + ": " + e.what());
    }
  }
  return out;
}

struct MethodRun {
  Method method = Method::kMtad;
  std::vector<DetectionOutcome> outcomes;  // one per test window
  Metrics metrics;
};

// Evaluate one method on one trained split. lambda applies to the
// multi-task variants; pct is the threshold percentile.
inline MethodRun eval_method(const TrainedSplit& ts, Method method, double lambda,
                             double pct) {
  MethodRun run;
  run.method = method;
  switch (method) {
    case Method::kMtad:
    case Method::kMtadPt: {
      const bool per_user = method == Method::kMtadPt;
      const ThresholdSet thr =
          fit_thresholds(ts.mtad, ts.data.val, pct, per_user, lambda);
      run.outcomes = detect(ts.mtad, ts.data.test, thr, lambda);
      break;
    }
    case Method::kLstmEd:
    case Method::kLstmEdPt: {
      const bool per_user = method == Method::kLstmEdPt;
      const ThresholdSet thr = fit_thresholds(ts.lstm_ed, ts.data.val, pct, per_user);
      run.outcomes =
          detect(ts.lstm_ed, ts.data.test, thr, ts.lstm_ed.config().lambda_decay);
      break;
    }
    case Method::kIsolationForest: {
      const auto scores = ts.iforest.score_rows(ts.data.day_test);
      const double thr = ts.iforest.threshold();
      run.outcomes.resize(ts.data.test.size());
      for (std::size_t i = 0; i < ts.data.test.size(); ++i) {
        const Window& w = ts.data.test[i];
        DetectionOutcome& o = run.outcomes[i];
        o.user_id = w.user_id;
        o.t = w.t;
        o.true_label = w.rare_label;
        o.alpha = scores[i];  // per-day isolation score stands in for alpha
        o.s = 1.0;
        o.delta = scores[i];
        o.transitions.assign(1, 0);
        o.gamma_used = thr;
        o.decision = scores[i] > thr ? 1 : 0;
      }
      break;
    }
    case Method::kPredictorOnly: {
      run.outcomes = model_detail::score_windows(ts.mtad, ts.data.test, lambda);
      for (auto& o : run.outcomes) {
        o.decision = o.transitions.back() == 1 ? 1 : 0;
        o.gamma_used = 0;  // not threshold-based
      }
      break;
    }
  }
  std::vector<int> decisions(run.outcomes.size()), truth(run.outcomes.size());
  for (std::size_t i = 0; i < run.outcomes.size(); ++i) {
    decisions[i] = run.outcomes[i].decision;
    truth[i] = run.outcomes[i].true_label;
  }
  run.metrics = score_exact_day(decisions, truth);
  return run;
}

inline Metrics metrics_from_outcomes(const std::vector<DetectionOutcome>& outcomes) {
  std::vector<int> decisions(outcomes.size()), truth(outcomes.size());
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    decisions[i] = outcomes[i].decision;
    truth[i] = outcomes[i].true_label;
  }
  return score_exact_day(decisions, truth);
}

// ---------------------------------------------------------------------------
// Aggregation.

struct MetricRow {
  std::string method;
  int window = 0;
  double lambda = 0;  // 0 marks methods the decay does not apply to
  bool personalized = false;
  std::string source = "computed";
  double p_mean = 0, p_std = 0;
  double r_mean = 0, r_std = 0;
  double f1_mean = 0, f1_std = 0;
  int n_splits = 0;
};

inline MetricRow aggregate_metrics(const std::string& method, int window,
                                   double lambda, bool personalized,
                                   const std::vector<Metrics>& per_split) {
  if (per_split.empty()) throw DataError("aggregate_metrics: no splits");
  std::vector<double> p, r, f1;
  for (const Metrics& m : per_split) {
    p.push_back(m.precision);
    r.push_back(m.recall);
    f1.push_back(m.f1);
  }
  MetricRow row;
  row.method = method;
  row.window = window;
  row.lambda = lambda;
  row.personalized = personalized;
  row.p_mean = mean_of(p);
  row.p_std = pop_std(p);
  row.r_mean = mean_of(r);
  row.r_std = pop_std(r);
  row.f1_mean = mean_of(f1);
  row.f1_std = pop_std(f1);
  row.n_splits = int(per_split.size());
  return row;
}

inline bool method_is_personalized(Method m) {
  return m == Method::kMtadPt || m == Method::kLstmEdPt;
}

inline bool method_uses_lambda(Method m) {
  return m == Method::kMtad || m == Method::kMtadPt || m == Method::kPredictorOnly;
}

struct ExperimentResult {
  std::vector<MetricRow> rows;  // one per method, cfg order
  // split_runs[i][m]: outcomes of method m on split seeds[i]
  std::vector<std::map<Method, MethodRun>> split_runs;
  std::vector<std::uint64_t> seeds;
};

// Evaluate the given methods on already-trained splits; lambda covers the
// multi-task variants.
inline ExperimentResult evaluate_methods(const std::vector<TrainedSplit>& splits,
                                         const std::vector<Method>& methods,
                                         double lambda, double pct) {
  if (splits.empty()) throw DataError("evaluate_methods: no trained splits");
  if (methods.empty()) throw ConfigError("evaluate_methods: no methods");
  ExperimentResult result;
  result.split_runs.resize(splits.size());
  for (std::size_t i = 0; i < splits.size(); ++i) {
    result.seeds.push_back(splits[i].seed);
    for (const Method m : methods)
      result.split_runs[i].emplace(m, eval_method(splits[i], m, lambda, pct));
  }
  const int window = splits.front().mtad.config().window;
  for (const Method m : methods) {
    std::vector<Metrics> per_split;
    for (const auto& runs : result.split_runs) per_split.push_back(runs.at(m).metrics);
    result.rows.push_back(aggregate_metrics(to_string(m), window,
                                            method_uses_lambda(m) ? lambda : 0.0,
                                            method_is_personalized(m), per_split));
  }
  return result;
}

// Full protocol: train per seed, evaluate, aggregate.
inline ExperimentResult run_experiment(const Cohort& cohort, const EvalConfig& cfg) {
  const auto splits = train_all_splits(cohort, cfg);
  return evaluate_methods(splits, cfg.methods, cfg.model.lambda_decay,
                          cfg.model.percentile);
}

// Published reference results for methods this codebase does not implement;
// carried verbatim into reports and marked by source.
inline std::vector<MetricRow> paper_reported_rows() {
  auto make = [](const std::string& name, bool pt, double p, double ps, double r,
                 double rs, double f1, double f1s) {
    MetricRow row;
    row.method = name;
    row.personalized = pt;
    row.source = "paper-reported";
    row.p_mean = p;
    row.p_std = ps;
    row.r_mean = r;
    row.r_std = rs;
    row.f1_mean = f1;
    row.f1_std = f1s;
    row.n_splits = 10;
    return row;
  };
  return {
      make("OCSVM", false, 0.32, 0.04, 0.07, 0.00, 0.12, 0.06),
      make("LSTM-VAE", false, 0.28, 0.04, 0.07, 0.01, 0.12, 0.01),
      make("DAGMM", false, 0.04, 0.01, 0.11, 0.02, 0.06, 0.01),
      make("LSTM-VAE-PT", true, 0.25, 0.02, 0.27, 0.02, 0.26, 0.02),
  };
}

// ---------------------------------------------------------------------------
// Sweeps.

struct SweepRow {
  std::string param;
  double value = 0;
  MetricRow row;
};

// Decay-constant sweep reuses trained models; only thresholds and the scaled
// scores move with lambda.
inline std::vector<SweepRow> sweep_lambda(const std::vector<TrainedSplit>& splits,
                                          const std::vector<double>& values,
                                          double pct,
                                          const std::vector<Method>& methods = {
                                              Method::kMtad, Method::kMtadPt}) {
  for (const Method m : methods)
    if (!method_uses_lambda(m))
      throw ConfigError("sweep_lambda: method does not use the decay constant");
  std::vector<SweepRow> rows;
  for (const double lambda : values) {
    if (lambda <= 0) throw ConfigError("sweep_lambda: lambda must be > 0");
    const auto result = evaluate_methods(splits, methods, lambda, pct);
    for (const MetricRow& row : result.rows)
      rows.push_back({"lambda", lambda, row});
  }
  return rows;
}

// Window-size sweep retrains everything per value.
inline std::vector<SweepRow> sweep_window(const Cohort& cohort, const EvalConfig& cfg,
                                          const std::vector<int>& values,
                                          const std::vector<Method>& methods = {
                                              Method::kMtad, Method::kLstmEd,
                                              Method::kMtadPt, Method::kLstmEdPt}) {
  std::vector<SweepRow> rows;
  for (const int l : values) {
    EvalConfig sub = cfg;
    sub.model.window = l;
    sub.methods = methods;
    const auto result = run_experiment(cohort, sub);
    for (const MetricRow& row : result.rows)
      rows.push_back({"window_size", double(l), row});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Event-type breakdown.

struct EventCategoryStat {
  std::string label;
  long total = 0;           // evaluable events in the category
  double detected_mean = 0; // mean detections across splits
  double recall_mean = 0;
};

struct EventTypeReport {
  std::vector<EventCategoryStat> by_type;
  std::vector<EventCategoryStat> by_valence;
  long evaluable_events = 0;
  long skipped_events = 0;  // excluded user or day never becomes a window end
  int n_splits = 0;
};

// Recall per event type and per valence for one method's outcomes across
// splits. An event is evaluable when its day appears as a test window in
// every split (rare days always route to test).
inline EventTypeReport event_type_breakdown(
    const std::vector<EventRecord>& events,
    const std::vector<std::vector<DetectionOutcome>>& split_outcomes) {
  if (split_outcomes.empty()) throw DataError("event_type_breakdown: no splits");
  const int n_splits = int(split_outcomes.size());

  // (user, day) -> decision, one map per split.
  std::vector<std::map<std::pair<std::string, int>, int>> flagged(
      static_cast<std::size_t>(n_splits));
  for (int s = 0; s < n_splits; ++s)
    for (const DetectionOutcome& o : split_outcomes[std::size_t(s)])
      flagged[std::size_t(s)][{o.user_id, o.t}] = o.decision;

  struct Tally {
    long total = 0;
    std::vector<long> detected;
  };
  std::map<int, Tally> type_tally;      // keyed by EventType index
  std::map<int, Tally> valence_tally;   // keyed by Valence index
  for (int i = 0; i < kNumEventTypes; ++i)
    type_tally[i].detected.assign(std::size_t(n_splits), 0);
  for (int i = 0; i < 2; ++i)
    valence_tally[i].detected.assign(std::size_t(n_splits), 0);

  EventTypeReport report;
  report.n_splits = n_splits;
  for (const EventRecord& ev : events) {
    const std::pair<std::string, int> key{ev.user_id, ev.day};
    bool evaluable = true;
    for (int s = 0; s < n_splits && evaluable; ++s)
      evaluable = flagged[std::size_t(s)].count(key) > 0;
    if (!evaluable) {
      ++report.skipped_events;
      continue;
    }
    ++report.evaluable_events;
    Tally& tt = type_tally[int(ev.type)];
    Tally& vt = valence_tally[int(ev.valence)];
    ++tt.total;
    ++vt.total;
    for (int s = 0; s < n_splits; ++s) {
      if (flagged[std::size_t(s)][key] == 1) {
        ++tt.detected[std::size_t(s)];
        ++vt.detected[std::size_t(s)];
      }
    }
  }

  auto summarize = [n_splits](const std::string& label, const Tally& t) {
    EventCategoryStat stat;
    stat.label = label;
    stat.total = t.total;
    double det = 0;
    for (const long d : t.detected) det += double(d);
    stat.detected_mean = det / double(n_splits);
    stat.recall_mean = t.total > 0 ? stat.detected_mean / double(t.total) : 0.0;
    return stat;
  };
  for (const auto& [idx, tally] : type_tally)
    report.by_type.push_back(summarize(to_string(EventType(idx)), tally));
  for (const auto& [idx, tally] : valence_tally)
    report.by_valence.push_back(summarize(to_string(Valence(idx)), tally));
  return report;
}

// ---------------------------------------------------------------------------
// Result files.

inline void write_metrics_csv(const std::string& path,
                              const std::vector<MetricRow>& rows) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "method,window,lambda,personalized,source,p_mean,p_std,r_mean,r_std,"
         "f1_mean,f1_std,n_splits\n";
  for (const MetricRow& r : rows) {
    out << r.method << ',' << r.window << ',' << format_double(r.lambda) << ','
        << (r.personalized ? 1 : 0) << ',' << r.source << ','
        << format_double(r.p_mean) << ',' << format_double(r.p_std) << ','
        << format_double(r.r_mean) << ',' << format_double(r.r_std) << ','
        << format_double(r.f1_mean) << ',' << format_double(r.f1_std) << ','
        << r.n_splits << "\n";
  }
  if (!out) throw DataError("write failed: " + path);
}

inline void write_sweep_csv(const std::string& path,
                            const std::vector<SweepRow>& rows) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "param,value,method,window,lambda,personalized,p_mean,p_std,r_mean,"
         "r_std,f1_mean,f1_std,n_splits\n";
  for (const SweepRow& s : rows) {
    const MetricRow& r = s.row;
    out << s.param << ',' << format_double(s.value) << ',' << r.method << ','
        << r.window << ',' << format_double(r.lambda) << ','
        << (r.personalized ? 1 : 0) << ',' << format_double(r.p_mean) << ','
        << format_double(r.p_std) << ',' << format_double(r.r_mean) << ','
        << format_double(r.r_std) << ',' << format_double(r.f1_mean) << ','
        << format_double(r.f1_std) << ',' << r.n_splits << "\n";
  }
  if (!out) throw DataError("write failed: " + path);
}

inline void write_event_types_csv(const std::string& path,
                                  const EventTypeReport& report) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "category,label,total,detected_mean,recall_mean\n";
  for (const EventCategoryStat& s : report.by_type)
    out << "type," << s.label << ',' << s.total << ','
        << format_double(s.detected_mean) << ',' << format_double(s.recall_mean)
        << "\n";
  for (const EventCategoryStat& s : report.by_valence)
    out << "valence," << s.label << ',' << s.total << ','
        << format_double(s.detected_mean) << ',' << format_double(s.recall_mean)
        << "\n";
  if (!out) throw DataError("write failed: " + path);
}

inline void write_decisions_csv(const std::string& path,
                                const std::vector<DetectionOutcome>& outcomes) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "user_id,t,alpha,s,delta,gamma_used,decision,true_label\n";
  for (const DetectionOutcome& o : outcomes) {
    out << o.user_id << ',' << o.t << ',' << format_double(o.alpha) << ','
        << format_double(o.s) << ',' << format_double(o.delta) << ','
        << format_double(o.gamma_used) << ',' << o.decision << ',' << o.true_label
        << "\n";
  }
  if (!out) throw DataError("write failed: " + path);
}

inline std::vector<DetectionOutcome> read_decisions_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line))
    throw DataError("empty decisions file: " + path);
  if (split_csv_line(line) !=
      std::vector<std::string>{"user_id", "t", "alpha", "s", "delta", "gamma_used",
                               "decision", "true_label"})
    throw DataError("unexpected decisions header in " + path);
  std::vector<DetectionOutcome> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 8) throw DataError("bad decisions row in " + path);
    DetectionOutcome o;
    o.user_id = cells[0];
    o.t = int(parse_long(cells[1], "t"));
    o.alpha = parse_double(cells[2], "alpha");
    o.s = parse_double(cells[3], "s");
    o.delta = parse_double(cells[4], "delta");
    o.gamma_used = parse_double(cells[5], "gamma_used");
    o.decision = int(parse_long(cells[6], "decision"));
    o.true_label = int(parse_long(cells[7], "true_label"));
    out.push_back(std::move(o));
  }
  return out;
}

}  // namespace mtad
