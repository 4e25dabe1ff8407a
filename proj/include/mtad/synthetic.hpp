#pragma once

// Synthetic cohort generator. Each user's daily features follow a per-user
// baseline plus weekday/weekend seasonality plus AR(1) noise; rare life
// events inject exponentially decaying mean shifts on a type-dependent
// feature subset and set the day-wise performance label from the event day
// onward. Whole days go missing at random. Every user draws from its own
// counter-based substreams, so enlarging the cohort never changes the data
// of existing users.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "mtad/errors.hpp"
#include "mtad/preprocess.hpp"
#include "mtad/rng.hpp"
#include "mtad/schema.hpp"

namespace mtad {

struct CohortConfig {
  int n_users = 126;
  int days_min = 70;
  int days_max = 90;
  double target_anomaly_ratio = 0.019;
  // personal, work, health, financial, societal, other
  std::array<double, kNumEventTypes> event_type_mix{92, 69, 14, 13, 8, 2};
  double positive_fraction = 136.0 / 198.0;
  double effect_magnitude = 1.0;
  int effect_duration_min = 5;
  int effect_duration_max = 15;
  double ar_coefficient = 0.5;
  double miss_prob = 0.05;
  std::uint64_t seed = 42;

  void validate() const {
    if (n_users < 1) throw ConfigError("CohortConfig: n_users must be >= 1");
    if (days_min < 1 || days_max < days_min)
      throw ConfigError("CohortConfig: invalid days range");
    if (target_anomaly_ratio <= 0 || target_anomaly_ratio > 0.05)
      throw ConfigError("CohortConfig: target_anomaly_ratio must be in (0, 0.05]");
    double mix_sum = 0;
    for (double w : event_type_mix) {
      if (w < 0) throw ConfigError("CohortConfig: negative event type weight");
      mix_sum += w;
    }
    if (mix_sum <= 0) throw ConfigError("CohortConfig: event type mix sums to zero");
    if (positive_fraction < 0 || positive_fraction > 1)
      throw ConfigError("CohortConfig: positive_fraction must be in [0, 1]");
    if (effect_magnitude < 0)
      throw ConfigError("CohortConfig: effect_magnitude must be >= 0");
    if (effect_duration_min < 1 || effect_duration_max < effect_duration_min)
      throw ConfigError("CohortConfig: invalid effect duration range");
    if (ar_coefficient < 0 || ar_coefficient >= 1)
      throw ConfigError("CohortConfig: ar_coefficient must be in [0, 1)");
    if (miss_prob < 0 || miss_prob >= 0.25)
      throw ConfigError("CohortConfig: miss_prob must be in [0, 0.25)");
  }
};

// Per-event injection plan: which features shift, by how many stationary
// standard deviations, and for how long.
struct EventProfile {
  EventType type = EventType::kPersonal;
  Valence valence = Valence::kPositive;
  PerfLabel perf = PerfLabel::kNoEffect;
  int duration = 10;
  std::vector<int> affected;
  std::vector<double> shift;
};

struct GeneratedCohort {
  Cohort cohort;
  std::vector<EventRecord> events;
  CohortStats stats;
};

namespace synth_detail {

enum Purpose : std::uint64_t {
  kDays = 1,
  kUserParams = 2,
  kFeatures = 3,
  kEvents = 4,
  kMissing = 5,
};

inline std::uint64_t user_stream(int uid, Purpose p, std::uint64_t attempt = 0) {
  return (std::uint64_t(std::uint32_t(uid)) << 8) | std::uint64_t(p) | (attempt << 48);
}

// Feature groups by name prefix drive the seasonal strength, event
// involvement probability, and the direction convention for signed shifts.
enum class Group { kActStill, kActMove, kLoc, kUnlock, kUnique };

inline Group feature_group(const std::string& name) {
  if (name.rfind("act_still", 0) == 0) return Group::kActStill;
  if (name.rfind("act_", 0) == 0) return Group::kActMove;
  if (name.rfind("loc_unique", 0) == 0) return Group::kUnique;
  if (name.rfind("loc_", 0) == 0) return Group::kLoc;
  return Group::kUnlock;
}

struct FeatureTraits {
  double base_mean = 0;
  double noise_scale = 0;      // raw units per unit of AR noise
  double season_strength = 0;  // relative weekday/weekend amplitude
  double rhythm_strength = 0;  // relative slow-rhythm amplitude
  double involve_prob = 0;     // chance an event touches this feature
  double direction = 1;        // raw-unit sign of a positive-valence shift
};

inline FeatureTraits feature_traits(const FeatureSchema& schema, int f) {
  const std::string& name = schema.names[std::size_t(f)];
  const int ep = schema.epoch[std::size_t(f)];
  // Crude circadian profile: epoch 1 is night, 2-4 daytime blocks.
  static constexpr double kEpochFactor[5] = {1.0, 0.55, 1.2, 1.25, 1.0};
  FeatureTraits t;
  switch (feature_group(name)) {
    case Group::kActStill:
      t = {240.0, 0.22, 0.65, 0.50, 0.40, -1.0};
      break;
    case Group::kActMove:
      t = {40.0, 0.30, 0.75, 0.65, 0.45, 1.0};
      break;
    case Group::kLoc:
      // Location and activity features carry the strongest routine
      // structure, both weekly and slow rhythms. The slow rhythms are what
      // the pre/post lagged regressions pick up: a weekly cycle is absorbed
      // exactly by six own lags plus an intercept, multi-period rhythms are
      // not.
      t = {8.0, 0.28, 1.05, 0.85, 0.60, 1.0};
      break;
    case Group::kUnlock:
      t = {55.0, 0.26, 0.35, 0.15, 0.30, -1.0};
      break;
    case Group::kUnique:
      t = {5.0, 0.25, 1.0, 0.75, 0.65, 1.0};
      break;
  }
  t.base_mean *= kEpochFactor[ep];
  t.noise_scale = std::max(0.5, t.noise_scale * t.base_mean);
  return t;
}

// Weekend days under a fixed 7-day calendar anchored at day_index 0.
inline bool is_weekend(int day) { return day % 7 == 5 || day % 7 == 6; }

// Mean-zero weekly profile: weekends sit high, weekdays slightly low.
inline double season_value(int day) { return is_weekend(day) ? 2.5 : -1.0; }

// Slow lifestyle rhythm: a per-user, per-feature-group sum of sinusoids with
// incommensurate periods well above a week (pay cycles, social routines).
// Four components need an order-8 linear recurrence, so six own lags cannot
// absorb them and the pre-event segment retains real explanatory power for
// the post-event segment.
inline constexpr int kRhythmComponents = 4;

struct Rhythm {
  std::array<double, kRhythmComponents> amp{};
  std::array<double, kRhythmComponents> omega{};
  std::array<double, kRhythmComponents> phase{};

  double value(int day) const {
    double v = 0;
    for (int k = 0; k < kRhythmComponents; ++k)
      v += amp[std::size_t(k)] * std::sin(omega[std::size_t(k)] * day + phase[std::size_t(k)]);
    return v;
  }

  double variance() const {
    double v = 0;
    for (double a : amp) v += 0.5 * a * a;
    return v;
  }
};

inline Rhythm draw_rhythm(RngStream& rng, double strength) {
  Rhythm r;
  for (int k = 0; k < kRhythmComponents; ++k) {
    const double period = rng.uniform(8.0, 45.0);
    r.omega[std::size_t(k)] = 2.0 * std::numbers::pi / period;
    r.phase[std::size_t(k)] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    r.amp[std::size_t(k)] = strength * rng.uniform(0.6, 1.4) / std::sqrt(double(kRhythmComponents));
  }
  return r;
}

// Stationary std of (season + rhythm + AR noise) in noise units, used to
// express event shifts in per-user per-feature standard deviations.
inline double stationary_std(double season_amp, double rhythm_var, double phi) {
  const double var_season = 2.5 * season_amp * season_amp;
  const double var_ar = 1.0 / (1.0 - phi * phi);
  return std::sqrt(var_season + rhythm_var + var_ar);
}

// Shift size per performance class, in innovation standard deviations (see
// the injection comment in generate_cohort). kShiftCalibration rescales the
// class bases so the cohort-mean first-5-day shift of affected features
// lands just above 1 pre-event standard deviation at effect_magnitude = 1:
// detectable, but not trivially so.
inline constexpr double kShiftCalibration = 1.5;

inline double class_shift_base(PerfLabel y) {
  switch (y) {
    case PerfLabel::kLargeNeg:
    case PerfLabel::kLargePos:
      return 2.6;
    case PerfLabel::kMedNeg:
    case PerfLabel::kMedPos:
      return 2.1;
    case PerfLabel::kSmallNeg:
    case PerfLabel::kSmallPos:
      return 1.7;
    default:
      return 1.45;  // kNoEffect still shifts behavior, just less
  }
}

inline PerfLabel perf_class_for(Valence v, int severity) {
  // severity: 0 = no effect, 1 = small, 2 = medium, 3 = large
  if (severity == 0) return PerfLabel::kNoEffect;
  if (v == Valence::kPositive) {
    return severity == 1 ? PerfLabel::kSmallPos
           : severity == 2 ? PerfLabel::kMedPos
                           : PerfLabel::kLargePos;
  }
  return severity == 1 ? PerfLabel::kSmallNeg
         : severity == 2 ? PerfLabel::kMedNeg
                         : PerfLabel::kLargeNeg;
}

// Placement margins: events keep kMarginLo days of lead-in and kMarginHi
// days of visible aftermath inside the series.
inline constexpr int kMarginLo = 10;
inline constexpr int kMarginHi = 6;
inline constexpr int kMinEventGap = 60;

inline bool two_events_feasible(int T) {
  return T - 1 - kMarginHi - kMinEventGap >= kMarginLo;
}

}  // namespace synth_detail

// Whole-day missingness: each non-event day is blanked with probability p.
// Returns the number of blanked days. Deterministic in (seed, stream).
inline long blank_days_stream(UserSeries& series, double p, RngStream& rng) {
  long blanked = 0;
  for (auto& d : series.days) {
    if (d.rare_label == 1) continue;
    if (!rng.bernoulli(p)) continue;
    std::fill(d.features.begin(), d.features.end(), 0.0);
    std::fill(d.observed.begin(), d.observed.end(), std::uint8_t(0));
    ++blanked;
  }
  return blanked;
}

// Standalone missingness injection keyed by the user id.
inline long inject_missingness(UserSeries& series, double p, std::uint64_t seed) {
  if (p < 0 || p >= 0.25) throw ConfigError("inject_missingness: p must be in [0, 0.25)");
  RngStream rng(seed, fnv1a64(series.user_id) ^ synth_detail::Purpose::kMissing);
  return blank_days_stream(series, p, rng);
}

inline GeneratedCohort generate_cohort(const CohortConfig& cfg) {
  using namespace synth_detail;
  cfg.validate();

  const FeatureSchema schema = FeatureSchema::behavioral();
  const int m = schema.size();
  std::vector<FeatureTraits> traits;
  traits.reserve(std::size_t(m));
  for (int f = 0; f < m; ++f) traits.push_back(feature_traits(schema, f));

  // Closed-form second-event probability so each user can decide on its own
  // stream whether it hosts one or two events. Keeps the realized rare-day
  // ratio near target without any cross-user draws.
  const double expected_days = 0.5 * (cfg.days_min + cfg.days_max);
  const double events_per_user = cfg.target_anomaly_ratio * expected_days;
  int feasible_lengths = 0;
  for (int T = cfg.days_min; T <= cfg.days_max; ++T)
    if (two_events_feasible(T)) ++feasible_lengths;
  const double p_feasible =
      double(feasible_lengths) / double(cfg.days_max - cfg.days_min + 1);
  double p_second = 0;
  double p_first = 1;
  if (events_per_user <= 1.0) {
    p_first = events_per_user;
  } else {
    if (p_feasible <= 0 || (events_per_user - 1.0) / p_feasible > 1.0 + 1e-9)
      throw ConfigError(
          "generate_cohort: target_anomaly_ratio infeasible under the 60-day "
          "event spacing rule for this days range");
    p_second = std::min(1.0, (events_per_user - 1.0) / p_feasible);
  }

  const std::vector<double> type_weights(cfg.event_type_mix.begin(),
                                         cfg.event_type_mix.end());
  // Severity mix of the performance impact, per valence sign.
  const std::vector<double> severity_weights = {0.08, 0.30, 0.40, 0.22};

  GeneratedCohort out;
  out.cohort.reserve(std::size_t(cfg.n_users));
  int uid_width = 3;
  for (int v = cfg.n_users; v >= 1000; v /= 10) ++uid_width;

  for (int uid = 0; uid < cfg.n_users; ++uid) {
    std::string id = std::to_string(uid);
    id = "u" + std::string(std::size_t(uid_width) - std::min<std::size_t>(id.size(), std::size_t(uid_width)), '0') + id;

    RngStream days_rng(cfg.seed, user_stream(uid, kDays));
    const int T = int(days_rng.uniform_int(cfg.days_min, cfg.days_max));

    RngStream param_rng(cfg.seed, user_stream(uid, kUserParams));
    // Users differ in how predictable their behavior is: the AR coefficient,
    // the weekly-profile strength, and the rhythm strength all vary widely,
    // so per-user reconstruction-error scales stay heterogeneous even after
    // within-subject z-scoring.
    const double phi =
        std::clamp(cfg.ar_coefficient + 0.15 * param_rng.normal(), 0.20, 0.75);
    const double season_mult = param_rng.uniform(0.60, 1.30);
    const double rhythm_mult =
        std::clamp(std::exp(0.25 * param_rng.normal()), 0.55, 1.80);
    const double event_mult =
        std::clamp(std::exp(0.35 * param_rng.normal()), 0.45, 1.90);
    std::vector<double> user_mean(static_cast<std::size_t>(m));
    for (int f = 0; f < m; ++f)
      user_mean[std::size_t(f)] =
          traits[std::size_t(f)].base_mean * (1.0 + 0.3 * param_rng.normal());
    // One unit-strength rhythm per feature group; features scale it by their
    // rhythm_strength trait.
    std::array<Rhythm, 5> rhythms;
    static constexpr Group kGroups[5] = {Group::kActStill, Group::kActMove,
                                         Group::kLoc, Group::kUnlock,
                                         Group::kUnique};
    for (int g = 0; g < 5; ++g)
      rhythms[std::size_t(g)] = draw_rhythm(param_rng, rhythm_mult);

    // Base signal: mean + scale * (seasonality + slow rhythm + AR(1) noise).
    UserSeries series;
    series.user_id = id;
    series.days.resize(std::size_t(T));
    for (int d = 0; d < T; ++d) {
      series.days[std::size_t(d)].day_index = d;
      series.days[std::size_t(d)].features.resize(std::size_t(m));
      series.days[std::size_t(d)].observed.assign(std::size_t(m), 1);
    }
    RngStream feat_rng(cfg.seed, user_stream(uid, kFeatures));
    const double ar_sd = std::sqrt(1.0 / (1.0 - phi * phi));
    for (int f = 0; f < m; ++f) {
      const FeatureTraits& tr = traits[std::size_t(f)];
      const Rhythm& rhythm = rhythms[std::size_t(
          std::find(kGroups, kGroups + 5, feature_group(schema.names[std::size_t(f)])) -
          kGroups)];
      const double amp = season_mult * tr.season_strength;
      double a = ar_sd * feat_rng.normal();
      for (int d = 0; d < T; ++d) {
        if (d > 0) a = phi * a + feat_rng.normal();
        series.days[std::size_t(d)].features[std::size_t(f)] =
            user_mean[std::size_t(f)] +
            tr.noise_scale * (amp * season_value(d) +
                              tr.rhythm_strength * rhythm.value(d) + a);
      }
    }

    // Event plan.
    RngStream event_rng(cfg.seed, user_stream(uid, kEvents));
    int n_events;
    if (events_per_user <= 1.0) {
      n_events = (T - 1 - kMarginHi >= kMarginLo && event_rng.bernoulli(p_first)) ? 1 : 0;
    } else {
      n_events = 1;
      if (two_events_feasible(T) && event_rng.bernoulli(p_second)) n_events = 2;
    }
    std::vector<int> event_days;
    if (n_events == 1) {
      event_days.push_back(int(event_rng.uniform_int(kMarginLo, T - 1 - kMarginHi)));
    } else if (n_events == 2) {
      const int d1 =
          int(event_rng.uniform_int(kMarginLo, T - 1 - kMarginHi - kMinEventGap));
      const int d2 = int(event_rng.uniform_int(d1 + kMinEventGap, T - 1 - kMarginHi));
      event_days.push_back(d1);
      event_days.push_back(d2);
    }

    for (int day : event_days) {
      EventProfile profile;
      profile.type = EventType(event_rng.categorical(type_weights));
      profile.valence = event_rng.bernoulli(cfg.positive_fraction)
                            ? Valence::kPositive
                            : Valence::kNegative;
      const bool silent =
          profile.type == EventType::kSocietal || profile.type == EventType::kOther;
      // Societal/other events touch neither behavior nor performance: the
      // severity draw still advances the stream so the event plan is stable
      // across type draws.
      const int severity = int(event_rng.categorical(severity_weights));
      profile.perf =
          silent ? PerfLabel::kNoEffect : perf_class_for(profile.valence, severity);
      profile.duration =
          int(event_rng.uniform_int(cfg.effect_duration_min, cfg.effect_duration_max));
      if (!silent) {
        for (int f = 0; f < m; ++f)
          if (event_rng.bernoulli(traits[std::size_t(f)].involve_prob))
            profile.affected.push_back(f);
        // Guarantee a detectable footprint even on unlucky subset draws.
        for (int f = 0; profile.affected.size() < 3 && f < m; ++f)
          if (std::find(profile.affected.begin(), profile.affected.end(), f) ==
              profile.affected.end())
            profile.affected.push_back(f);
        std::sort(profile.affected.begin(), profile.affected.end());
        const double valence_sign =
            profile.valence == Valence::kPositive ? 1.0 : -1.0;
        for (int f : profile.affected) {
          const double wiggle = event_rng.uniform(0.75, 1.25);
          profile.shift.push_back(class_shift_base(profile.perf) * wiggle *
                                  valence_sign * traits[std::size_t(f)].direction);
        }
      }

      // Inject: decaying additive shift in raw units, scaled to this user's
      // day-to-day innovation std of the affected feature. Innovation scaling
      // ties each event's visibility to how unpredictable the user already
      // is, so predictable users host subtler events than erratic ones -- the
      // spread a personalized threshold exploits.
      const double beta = 2.0 / double(profile.duration);
      for (std::size_t k = 0; k < profile.affected.size(); ++k) {
        const int f = profile.affected[k];
        const FeatureTraits& tr = traits[std::size_t(f)];
        const double sd_innov = tr.noise_scale;
        const double full = profile.shift[k] * cfg.effect_magnitude * event_mult *
                            kShiftCalibration * sd_innov;
        for (int d = day; d < std::min(T, day + profile.duration); ++d)
          series.days[std::size_t(d)].features[std::size_t(f)] +=
              full * std::exp(-beta * double(d - day));
      }

      series.days[std::size_t(day)].rare_label = 1;
      series.days[std::size_t(day)].event_meta =
          EventMeta{profile.type, profile.valence};
      // Non-silent events report a performance class on the event day; the
      // fill pass below propagates it. Silent events report nothing.
      if (!silent)
        series.days[std::size_t(day)].perf_label = profile.perf;

      EventRecord rec;
      rec.user_id = id;
      rec.day = day;
      rec.type = profile.type;
      rec.valence = profile.valence;
      rec.perf = profile.perf;
      rec.duration = profile.duration;
      rec.affected = profile.affected;
      out.events.push_back(std::move(rec));

      out.stats.type_counts[std::size_t(profile.type)]++;
      out.stats.valence_counts[profile.valence == Valence::kPositive ? 0 : 1]++;
    }

    // Day labels follow forward-fill semantics: Unknown before the first
    // reported class, then each reported class persists until the next one.
    {
      PerfLabel current = PerfLabel::kUnknown;
      for (auto& d : series.days) {
        if (d.perf_label)
          current = *d.perf_label;
        else
          d.perf_label = current;
      }
    }

    // Missingness, re-rolled wholesale if any event's +-30 day span would
    // exceed the 25% imputation budget.
    long blanked = 0;
    for (std::uint64_t attempt = 0;; ++attempt) {
      if (attempt > 100)
        throw DataError("generate_cohort: missingness audit failed repeatedly for " + id);
      UserSeries candidate = series;
      RngStream miss_rng(cfg.seed, user_stream(uid, kMissing, attempt));
      const long b = blank_days_stream(candidate, cfg.miss_prob, miss_rng);
      bool ok = true;
      for (const auto& audit : audit_event_spans(candidate, 30)) {
        if (audit.fraction >= 0.25) {
          ok = false;
          break;
        }
      }
      if (ok) {
        series = std::move(candidate);
        blanked = b;
        break;
      }
    }

    out.stats.total_days += T;
    out.stats.rare_days += long(event_days.size());
    out.stats.blanked_days += blanked;
    out.cohort.push_back(std::move(series));
  }

  out.stats.users = cfg.n_users;
  out.stats.events = int(out.events.size());
  out.stats.realized_ratio =
      out.stats.total_days > 0
          ? double(out.stats.rare_days) / double(out.stats.total_days)
          : 0.0;
  return out;
}

}  // namespace mtad
