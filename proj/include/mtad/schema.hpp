#pragma once

// Canonical data model for daily behavioral feature series: per-day records
// with missingness masks, rare-event labels, and day-wise workplace
// performance classes.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <Eigen/Core>

#include "mtad/errors.hpp"

namespace mtad {

// Day-wise performance classes in fixed index order. Index order matters:
// one-hot targets, class weights, and argmax tie-breaking all use it.
enum class PerfLabel : std::uint8_t {
  kUnknown = 0,
  kLargeNeg,
  kMedNeg,
  kSmallNeg,
  kNoEffect,
  kSmallPos,
  kMedPos,
  kLargePos,
};

inline constexpr int kNumPerfClasses = 8;

inline const char* to_string(PerfLabel y) {
  switch (y) {
    case PerfLabel::kUnknown: return "unknown";
    case PerfLabel::kLargeNeg: return "large_neg";
    case PerfLabel::kMedNeg: return "med_neg";
    case PerfLabel::kSmallNeg: return "small_neg";
    case PerfLabel::kNoEffect: return "no_effect";
    case PerfLabel::kSmallPos: return "small_pos";
    case PerfLabel::kMedPos: return "med_pos";
    case PerfLabel::kLargePos: return "large_pos";
  }
  throw ConfigError("to_string: invalid PerfLabel");
}

inline std::optional<PerfLabel> parse_perf_label(std::string_view s) {
  for (int i = 0; i < kNumPerfClasses; ++i) {
    const auto y = PerfLabel(i);
    if (s == to_string(y)) return y;
  }
  return std::nullopt;
}

enum class EventType : std::uint8_t {
  kPersonal = 0,
  kWork,
  kHealth,
  kFinancial,
  kSocietal,
  kOther,
};

inline constexpr int kNumEventTypes = 6;

inline const char* to_string(EventType t) {
  switch (t) {
    case EventType::kPersonal: return "personal";
    case EventType::kWork: return "work";
    case EventType::kHealth: return "health";
    case EventType::kFinancial: return "financial";
    case EventType::kSocietal: return "societal";
    case EventType::kOther: return "other";
  }
  throw ConfigError("to_string: invalid EventType");
}

inline std::optional<EventType> parse_event_type(std::string_view s) {
  for (int i = 0; i < kNumEventTypes; ++i) {
    const auto t = EventType(i);
    if (s == to_string(t)) return t;
  }
  return std::nullopt;
}

enum class Valence : std::uint8_t { kPositive = 0, kNegative };

inline const char* to_string(Valence v) {
  return v == Valence::kPositive ? "positive" : "negative";
}

inline std::optional<Valence> parse_valence(std::string_view s) {
  if (s == "positive") return Valence::kPositive;
  if (s == "negative") return Valence::kNegative;
  return std::nullopt;
}

struct EventMeta {
  EventType type = EventType::kPersonal;
  Valence valence = Valence::kPositive;
};

// Feature naming layout. Epoch-scoped features carry an _ep_1.._ep_4 suffix
// (four six-hour blocks per day); whole-day features use epoch 0.
struct FeatureSchema {
  std::vector<std::string> names;
  std::vector<int> epoch;

  int size() const { return int(names.size()); }

  // The 29-feature behavioral layout: 7 sensor aggregates x 4 epochs plus
  // the daily count of unique locations.
  static FeatureSchema behavioral() {
    static const char* kBases[] = {"act_still_dur",  "act_walking_dur",
                                   "act_running_dur", "loc_dist",
                                   "loc_visit_num",   "unlock_dur",
                                   "unlock_num"};
    FeatureSchema s;
    for (const char* base : kBases) {
      for (int ep = 1; ep <= 4; ++ep) {
        s.names.push_back(std::string(base) + "_ep_" + std::to_string(ep));
        s.epoch.push_back(ep);
      }
    }
    s.names.push_back("loc_unique_num");
    s.epoch.push_back(0);
    return s;
  }

  void validate() const {
    if (names.size() != 29 || epoch.size() != 29)
      throw DataError("FeatureSchema: expected exactly 29 features, got " +
                      std::to_string(names.size()));
    std::unordered_set<std::string> seen;
    for (const auto& n : names)
      if (!seen.insert(n).second)
        throw DataError("FeatureSchema: duplicate feature name " + n);
    // Every epoch-scoped base must appear for all four epochs.
    std::unordered_map<std::string, unsigned> eps;
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (epoch[i] == 0) continue;
      if (epoch[i] < 1 || epoch[i] > 4)
        throw DataError("FeatureSchema: epoch out of range for " + names[i]);
      const auto pos = names[i].rfind("_ep_");
      if (pos == std::string::npos)
        throw DataError("FeatureSchema: epoch feature without _ep_ suffix: " + names[i]);
      eps[names[i].substr(0, pos)] |= 1u << (epoch[i] - 1);
    }
    for (const auto& [base, mask] : eps)
      if (mask != 0xF)
        throw DataError("FeatureSchema: base " + base + " missing some epochs");
  }
};

struct DayRecord {
  int day_index = 0;
  std::vector<double> features;
  std::vector<std::uint8_t> observed;  // 1 = measured, 0 = missing/imputed
  std::int8_t rare_label = 0;          // 1 = rare event day, -1 = unreported
  std::optional<PerfLabel> perf_label;
  std::optional<EventMeta> event_meta;
};

struct NormStats {
  std::vector<double> mean;
  std::vector<double> scale;  // population std over the fit days
  bool fitted = false;
};

struct UserSeries {
  std::string user_id;
  std::vector<DayRecord> days;
  NormStats norm_stats;

  int length() const { return int(days.size()); }
};

using Cohort = std::vector<UserSeries>;

// One model input: l consecutive days of features plus their per-day
// performance labels. rare_label is the label of the final day, which is the
// day a detection decision refers to.
struct Window {
  std::string user_id;
  int t = 0;  // day_index of the most recent day in the window
  Eigen::MatrixXd data;
  std::vector<PerfLabel> perf_vec;
  int rare_label = 0;
};

// Ground-truth record of one injected event, carried alongside a synthetic
// cohort for evaluation breakdowns.
struct EventRecord {
  std::string user_id;
  int day = 0;
  EventType type = EventType::kPersonal;
  Valence valence = Valence::kPositive;
  PerfLabel perf = PerfLabel::kNoEffect;
  int duration = 0;
  std::vector<int> affected;  // feature indices with injected shifts
};

struct CohortStats {
  int users = 0;
  long total_days = 0;
  int events = 0;
  long rare_days = 0;
  double realized_ratio = 0;
  long blanked_days = 0;
  std::vector<long> type_counts = std::vector<long>(kNumEventTypes, 0);
  std::vector<long> valence_counts = std::vector<long>(2, 0);
};

}  // namespace mtad
