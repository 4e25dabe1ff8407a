#pragma once

// Cohort CSV and sidecar JSON input-output. One CSV row per participant-day;
// empty cells are missing values. Doubles are written with shortest
// round-trip formatting so write -> read is bit-exact.

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "mtad/errors.hpp"
#include "mtad/schema.hpp"

namespace mtad {

inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const std::string& context) {
  double v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw DataError("failed to parse number '" + std::string(s) + "' in " + context);
  return v;
}

inline long parse_long(std::string_view s, const std::string& context) {
  long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw DataError("failed to parse integer '" + std::string(s) + "' in " + context);
  return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

inline std::vector<std::string> cohort_csv_header(const FeatureSchema& schema) {
  std::vector<std::string> h = {"user_id", "day_index"};
  h.insert(h.end(), schema.names.begin(), schema.names.end());
  h.push_back("rare_label");
  h.push_back("perf_label");
  h.push_back("event_type");
  h.push_back("event_valence");
  return h;
}

// The CSV represents raw observations: only observed feature cells carry
// values, imputed/missing cells stay empty.
inline void write_cohort_csv(const std::string& path, const Cohort& cohort,
                             const FeatureSchema& schema) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  const auto header = cohort_csv_header(schema);
  for (std::size_t i = 0; i < header.size(); ++i)
    out << (i ? "," : "") << header[i];
  out << "\n";
  const int m = schema.size();
  for (const auto& user : cohort) {
    for (const auto& d : user.days) {
      out << user.user_id << "," << d.day_index;
      for (int f = 0; f < m; ++f) {
        out << ",";
        if (d.observed[std::size_t(f)]) out << format_double(d.features[std::size_t(f)]);
      }
      out << ",";
      if (d.rare_label >= 0) out << int(d.rare_label);
      out << ",";
      if (d.perf_label) out << to_string(*d.perf_label);
      out << ",";
      if (d.event_meta) out << to_string(d.event_meta->type);
      out << ",";
      if (d.event_meta) out << to_string(d.event_meta->valence);
      out << "\n";
    }
  }
  if (!out) throw DataError("write failed: " + path);
}

inline Cohort read_cohort_csv(const std::string& path, const FeatureSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty file: " + path);
  const auto header = split_csv_line(line);
  const auto expected = cohort_csv_header(schema);
  if (header != expected)
    throw DataError("unexpected cohort CSV header in " + path);

  const int m = schema.size();
  Cohort cohort;
  std::map<std::string, std::size_t> user_pos;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    const std::string ctx = path + ":" + std::to_string(line_no);
    if (int(cells.size()) != m + 6)
      throw DataError("wrong column count in " + ctx);

    const std::string& uid = cells[0];
    if (uid.empty()) throw DataError("empty user_id in " + ctx);
    auto it = user_pos.find(uid);
    if (it == user_pos.end()) {
      it = user_pos.emplace(uid, cohort.size()).first;
      cohort.push_back(UserSeries{uid, {}, {}});
    }
    UserSeries& user = cohort[it->second];

    DayRecord d;
    d.day_index = int(parse_long(cells[1], ctx));
    d.features.resize(std::size_t(m), 0.0);
    d.observed.assign(std::size_t(m), 0);
    for (int f = 0; f < m; ++f) {
      const std::string& cell = cells[std::size_t(2 + f)];
      if (cell.empty()) continue;
      d.features[std::size_t(f)] = parse_double(cell, ctx);
      d.observed[std::size_t(f)] = 1;
    }
    const std::string& rare = cells[std::size_t(m + 2)];
    if (rare.empty()) {
      d.rare_label = -1;
    } else {
      const long r = parse_long(rare, ctx);
      if (r != 0 && r != 1) throw DataError("rare_label must be 0 or 1 in " + ctx);
      d.rare_label = std::int8_t(r);
    }
    const std::string& perf = cells[std::size_t(m + 3)];
    if (!perf.empty()) {
      const auto y = parse_perf_label(perf);
      if (!y) throw DataError("unknown perf_label '" + perf + "' in " + ctx);
      d.perf_label = *y;
    }
    const std::string& etype = cells[std::size_t(m + 4)];
    const std::string& evalence = cells[std::size_t(m + 5)];
    if (etype.empty() != evalence.empty())
      throw DataError("event_type and event_valence must appear together in " + ctx);
    if (!etype.empty()) {
      const auto t = parse_event_type(etype);
      const auto v = parse_valence(evalence);
      if (!t) throw DataError("unknown event_type '" + etype + "' in " + ctx);
      if (!v) throw DataError("unknown event_valence '" + evalence + "' in " + ctx);
      d.event_meta = EventMeta{*t, *v};
    }
    user.days.push_back(std::move(d));
  }

  for (auto& user : cohort) {
    std::sort(user.days.begin(), user.days.end(),
              [](const DayRecord& a, const DayRecord& b) { return a.day_index < b.day_index; });
    for (std::size_t i = 1; i < user.days.size(); ++i)
      if (user.days[i].day_index == user.days[i - 1].day_index)
        throw DataError("duplicate day_index " + std::to_string(user.days[i].day_index) +
                        " for user " + user.user_id + " in " + path);
  }
  return cohort;
}

inline nlohmann::json event_to_json(const EventRecord& e) {
  return nlohmann::json{{"user_id", e.user_id},
                        {"day", e.day},
                        {"type", to_string(e.type)},
                        {"valence", to_string(e.valence)},
                        {"perf", to_string(e.perf)},
                        {"duration", e.duration},
                        {"affected", e.affected}};
}

inline EventRecord event_from_json(const nlohmann::json& j) {
  EventRecord e;
  e.user_id = j.at("user_id").get<std::string>();
  e.day = j.at("day").get<int>();
  const auto t = parse_event_type(j.at("type").get<std::string>());
  const auto v = parse_valence(j.at("valence").get<std::string>());
  const auto p = parse_perf_label(j.at("perf").get<std::string>());
  if (!t || !v || !p) throw DataError("invalid event record in events JSON");
  e.type = *t;
  e.valence = *v;
  e.perf = *p;
  e.duration = j.at("duration").get<int>();
  e.affected = j.at("affected").get<std::vector<int>>();
  return e;
}

inline nlohmann::json stats_to_json(const CohortStats& s) {
  return nlohmann::json{{"users", s.users},
                        {"total_days", s.total_days},
                        {"events", s.events},
                        {"rare_days", s.rare_days},
                        {"realized_ratio", s.realized_ratio},
                        {"blanked_days", s.blanked_days},
                        {"type_counts", s.type_counts},
                        {"valence_counts", s.valence_counts}};
}

inline CohortStats stats_from_json(const nlohmann::json& j) {
  CohortStats s;
  s.users = j.at("users").get<int>();
  s.total_days = j.at("total_days").get<long>();
  s.events = j.at("events").get<int>();
  s.rare_days = j.at("rare_days").get<long>();
  s.realized_ratio = j.at("realized_ratio").get<double>();
  s.blanked_days = j.at("blanked_days").get<long>();
  s.type_counts = j.at("type_counts").get<std::vector<long>>();
  s.valence_counts = j.at("valence_counts").get<std::vector<long>>();
  return s;
}

// Sidecar ground truth: generator config echo, realized stats, event list.
inline void write_events_json(const std::string& path, const nlohmann::json& config,
                              const std::vector<EventRecord>& events,
                              const CohortStats& stats) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["config"] = config;
  j["stats"] = stats_to_json(stats);
  auto& arr = j["events"] = nlohmann::json::array();
  for (const auto& e : events) arr.push_back(event_to_json(e));
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw DataError("write failed: " + path);
}

struct EventsFile {
  nlohmann::json config;
  std::vector<EventRecord> events;
  CohortStats stats;
};

inline EventsFile read_events_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("invalid JSON in " + path + ": " + e.what());
  }
  EventsFile f;
  f.config = j.value("config", nlohmann::json::object());
  if (j.contains("stats")) f.stats = stats_from_json(j.at("stats"));
  for (const auto& ej : j.at("events")) f.events.push_back(event_from_json(ej));
  return f;
}

}  // namespace mtad
