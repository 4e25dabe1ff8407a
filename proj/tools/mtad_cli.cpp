// Command-line front end: generate synthetic cohorts, run the pre/post
// Granger scan, train and evaluate the detection methods, and sweep
// hyperparameters. Every run writes a manifest sufficient to reproduce it.

#include <sys/stat.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mtad/mtad.hpp"

using json = nlohmann::json;

namespace {

struct CliOptions {
  std::string config_path;
  std::string out_dir = "results";
  std::string cohort_path;  // CSV input; empty means generate internally
  std::string events_path;  // ground-truth sidecar for event breakdowns
  std::string param;        // sweep parameter
  std::vector<double> values;
  std::string methods_csv;
  bool personalized = false;
  long long seed = -1;           // cohort seed override
  std::string seeds_csv;         // split seeds override
  long long users = -1;          // cohort size override
  double ratio = -1;             // anomaly ratio override
  double percentile = -1;        // threshold percentile override
  int max_lag = 6;
  int min_side = 15;
  double alpha = 0.05;
};

void ensure_dir(const std::string& path) {
  struct stat st{};
  if (::stat(path.c_str(), &st) == 0) {
    if (!S_ISDIR(st.st_mode))
      throw mtad::DataError("output path exists and is not a directory: " + path);
    return;
  }
  if (::mkdir(path.c_str(), 0755) != 0)
    throw mtad::DataError("cannot create output directory: " + path);
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw mtad::DataError("cannot open config: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw mtad::ConfigError("invalid JSON in " + path + ": " + e.what());
  }
  // A previous run's manifest is accepted as-is: reuse its embedded config.
  if (j.contains("config") && j.contains("format_version")) return j["config"];
  return j;
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw mtad::DataError("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw mtad::DataError("write failed: " + path);
}

// --- config (de)serialization: partial JSON updates a default-constructed
// config; to_json emits every field so manifests echo the full state.

void apply_cohort_json(mtad::CohortConfig& cfg, const json& j) {
  cfg.n_users = j.value("n_users", cfg.n_users);
  cfg.days_min = j.value("days_min", cfg.days_min);
  cfg.days_max = j.value("days_max", cfg.days_max);
  cfg.target_anomaly_ratio = j.value("target_anomaly_ratio", cfg.target_anomaly_ratio);
  if (j.contains("event_type_mix")) {
    const auto mix = j.at("event_type_mix").get<std::vector<double>>();
    if (int(mix.size()) != mtad::kNumEventTypes)
      throw mtad::ConfigError("event_type_mix must have 6 entries");
    std::copy(mix.begin(), mix.end(), cfg.event_type_mix.begin());
  }
  cfg.positive_fraction = j.value("positive_fraction", cfg.positive_fraction);
  cfg.effect_magnitude = j.value("effect_magnitude", cfg.effect_magnitude);
  cfg.effect_duration_min = j.value("effect_duration_min", cfg.effect_duration_min);
  cfg.effect_duration_max = j.value("effect_duration_max", cfg.effect_duration_max);
  cfg.ar_coefficient = j.value("ar_coefficient", cfg.ar_coefficient);
  cfg.miss_prob = j.value("miss_prob", cfg.miss_prob);
  cfg.seed = j.value("seed", cfg.seed);
}

json cohort_json(const mtad::CohortConfig& cfg) {
  return json{{"n_users", cfg.n_users},
              {"days_min", cfg.days_min},
              {"days_max", cfg.days_max},
              {"target_anomaly_ratio", cfg.target_anomaly_ratio},
              {"event_type_mix", std::vector<double>(cfg.event_type_mix.begin(),
                                                     cfg.event_type_mix.end())},
              {"positive_fraction", cfg.positive_fraction},
              {"effect_magnitude", cfg.effect_magnitude},
              {"effect_duration_min", cfg.effect_duration_min},
              {"effect_duration_max", cfg.effect_duration_max},
              {"ar_coefficient", cfg.ar_coefficient},
              {"miss_prob", cfg.miss_prob},
              {"seed", cfg.seed}};
}

void apply_model_json(mtad::ModelConfig& cfg, const json& j) {
  cfg.window = j.value("window", cfg.window);
  cfg.features = j.value("features", cfg.features);
  cfg.classes = j.value("classes", cfg.classes);
  cfg.hidden = j.value("hidden", cfg.hidden);
  cfg.lambda_decay = j.value("lambda_decay", cfg.lambda_decay);
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.batch = j.value("batch", cfg.batch);
  cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
  cfg.recurrent_dropout = j.value("recurrent_dropout", cfg.recurrent_dropout);
  cfg.patience = j.value("patience", cfg.patience);
  cfg.val_loss_floor = j.value("val_loss_floor", cfg.val_loss_floor);
  cfg.percentile = j.value("percentile", cfg.percentile);
  cfg.min_user_windows = j.value("min_user_windows", cfg.min_user_windows);
  cfg.threshold_on_scaled = j.value("threshold_on_scaled", cfg.threshold_on_scaled);
}

mtad::Method parse_method_flex(std::string name) {
  std::transform(name.begin(), name.end(), name.begin(),
                 [](unsigned char c) { return char(std::toupper(c)); });
  std::replace(name.begin(), name.end(), '_', '-');
  if (name == "IFOREST") name = "IF";
  return mtad::parse_method(name);
}

void apply_eval_json(mtad::EvalConfig& cfg, const json& j) {
  if (j.contains("model")) apply_model_json(cfg.model, j.at("model"));
  cfg.ed_epochs = j.value("ed_epochs", cfg.ed_epochs);
  if (j.contains("iforest")) {
    const json& f = j.at("iforest");
    cfg.iforest.trees = f.value("trees", cfg.iforest.trees);
    cfg.iforest.sample_size = f.value("sample_size", cfg.iforest.sample_size);
    cfg.iforest.contamination = f.value("contamination", cfg.iforest.contamination);
  }
  if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  cfg.min_normal_windows = j.value("min_normal_windows", cfg.min_normal_windows);
  if (j.contains("split_mode")) {
    const std::string mode = j.at("split_mode").get<std::string>();
    if (mode == "random") cfg.split_mode = mtad::SplitMode::kRandom;
    else if (mode == "contiguous") cfg.split_mode = mtad::SplitMode::kContiguous;
    else throw mtad::ConfigError("split_mode must be random or contiguous");
  }
  if (j.contains("methods")) {
    cfg.methods.clear();
    for (const auto& s : j.at("methods"))
      cfg.methods.push_back(parse_method_flex(s.get<std::string>()));
  }
}

json eval_json(const mtad::EvalConfig& cfg) {
  json methods = json::array();
  for (const mtad::Method m : cfg.methods) methods.push_back(mtad::to_string(m));
  return json{
      {"model", mtad::model_config_to_json(cfg.model)},
      {"ed_epochs", cfg.ed_epochs},
      {"iforest",
       {{"trees", cfg.iforest.trees},
        {"sample_size", cfg.iforest.sample_size},
        {"contamination", cfg.iforest.contamination}}},
      {"seeds", cfg.seeds},
      {"min_normal_windows", cfg.min_normal_windows},
      {"split_mode",
       cfg.split_mode == mtad::SplitMode::kRandom ? "random" : "contiguous"},
      {"methods", methods}};
}

std::vector<std::string> split_commas(const std::string& csv) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : csv) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::string method_slug(mtad::Method m) {
  std::string s = mtad::to_string(m);
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return char(std::tolower(c)); });
  std::replace(s.begin(), s.end(), '-', '_');
  return s;
}

// Resolve the method list from config + flags. --personalized inserts the
// per-user-threshold variant after each method that has one.
std::vector<mtad::Method> resolve_methods(const mtad::EvalConfig& cfg,
                                          const CliOptions& opt) {
  std::vector<mtad::Method> methods = cfg.methods;
  if (!opt.methods_csv.empty()) {
    methods.clear();
    for (const std::string& name : split_commas(opt.methods_csv))
      methods.push_back(parse_method_flex(name));
  }
  if (opt.personalized) {
    std::vector<mtad::Method> expanded;
    for (const mtad::Method m : methods) {
      expanded.push_back(m);
      mtad::Method pt = m;
      if (m == mtad::Method::kMtad) pt = mtad::Method::kMtadPt;
      if (m == mtad::Method::kLstmEd) pt = mtad::Method::kLstmEdPt;
      if (pt != m &&
          std::find(methods.begin(), methods.end(), pt) == methods.end())
        expanded.push_back(pt);
    }
    methods = expanded;
  }
  if (methods.empty()) throw mtad::ConfigError("no methods selected");
  return methods;
}

struct LoadedCohort {
  mtad::Cohort raw;
  std::vector<mtad::EventRecord> events;
  mtad::CohortStats stats;
  bool generated = false;
  mtad::CohortConfig config;  // meaningful when generated
};

// Either read the cohort CSV (+ optional events sidecar) or generate one
// from the config; flags override the generator seed/size/ratio.
LoadedCohort load_or_generate(const json& cfg_json, const CliOptions& opt) {
  LoadedCohort lc;
  if (!opt.cohort_path.empty()) {
    lc.raw = mtad::read_cohort_csv(opt.cohort_path,
                                   mtad::FeatureSchema::behavioral());
    if (!opt.events_path.empty()) {
      const mtad::EventsFile ef = mtad::read_events_json(opt.events_path);
      lc.events = ef.events;
      lc.stats = ef.stats;
    }
    return lc;
  }
  if (cfg_json.contains("cohort")) apply_cohort_json(lc.config, cfg_json.at("cohort"));
  if (opt.seed >= 0) lc.config.seed = std::uint64_t(opt.seed);
  if (opt.users >= 0) lc.config.n_users = int(opt.users);
  if (opt.ratio >= 0) lc.config.target_anomaly_ratio = opt.ratio;
  mtad::GeneratedCohort gen = mtad::generate_cohort(lc.config);
  lc.raw = std::move(gen.cohort);
  lc.events = std::move(gen.events);
  lc.stats = gen.stats;
  lc.generated = true;
  return lc;
}

mtad::Cohort preprocess(const mtad::Cohort& raw) {
  mtad::Cohort out;
  out.reserve(raw.size());
  for (const mtad::UserSeries& user : raw)
    out.push_back(mtad::forward_fill_labels(mtad::impute_mean(user)));
  return out;
}

// --- subcommands ------------------------------------------------------------

int cmd_generate(const CliOptions& opt) {
  const json cfg_json =
      opt.config_path.empty() ? json::object() : load_json(opt.config_path);
  mtad::CohortConfig cfg;
  if (cfg_json.contains("cohort")) apply_cohort_json(cfg, cfg_json.at("cohort"));
  else apply_cohort_json(cfg, cfg_json);  // allow a bare cohort object too
  if (opt.seed >= 0) cfg.seed = std::uint64_t(opt.seed);
  if (opt.users >= 0) cfg.n_users = int(opt.users);
  if (opt.ratio >= 0) cfg.target_anomaly_ratio = opt.ratio;

  const mtad::GeneratedCohort gen = mtad::generate_cohort(cfg);
  ensure_dir(opt.out_dir);
  const std::string cohort_path = opt.out_dir + "/cohort.csv";
  const std::string events_path = opt.out_dir + "/events.json";
  mtad::write_cohort_csv(cohort_path, gen.cohort, mtad::FeatureSchema::behavioral());
  mtad::write_events_json(events_path, cohort_json(cfg), gen.events, gen.stats);

  std::cout << "wrote " << cohort_path << " (" << gen.stats.users << " users, "
            << gen.stats.total_days << " days) and " << events_path << "\n"
            << "events: " << gen.stats.events << ", rare days: " << gen.stats.rare_days
            << ", realized anomaly ratio: "
            << mtad::format_double(gen.stats.realized_ratio) << "\n";
  return 0;
}

int cmd_granger(const CliOptions& opt) {
  if (opt.cohort_path.empty())
    throw mtad::ConfigError("granger requires --cohort <csv>");
  mtad::Cohort cohort;
  for (const mtad::UserSeries& user :
       mtad::read_cohort_csv(opt.cohort_path, mtad::FeatureSchema::behavioral()))
    cohort.push_back(mtad::impute_mean(user));

  const mtad::GrangerReport report =
      mtad::significance_counts(cohort, opt.max_lag, opt.alpha, opt.min_side);

  ensure_dir(opt.out_dir);
  const mtad::FeatureSchema schema = mtad::FeatureSchema::behavioral();
  const std::string report_path = opt.out_dir + "/granger_report.csv";
  {
    std::ofstream out(report_path);
    if (!out) throw mtad::DataError("cannot open for writing: " + report_path);
    out << "feature,significant_count,total_events\n";
    for (std::size_t f = 0; f < report.significant_count.size(); ++f)
      out << schema.names[f] << ',' << report.significant_count[f] << ','
          << report.total_series << "\n";
    if (!out) throw mtad::DataError("write failed: " + report_path);
  }

  // Full per-event per-lag detail for auditing the counts.
  json details = json::array();
  for (const mtad::EventGrangerDetail& d : report.details) {
    json dj{{"user_id", d.user_id}, {"day", d.day}, {"tested", d.tested}};
    if (!d.tested) {
      dj["skip_reason"] = d.skip_reason;
    } else {
      json feats = json::array();
      for (std::size_t f = 0; f < d.per_feature.size(); ++f) {
        const mtad::GrangerResult& r = d.per_feature[f];
        json lags = json::array();
        for (const mtad::LagTest& lt : r.lags)
          lags.push_back({{"lag", lt.lag},
                          {"f_stat", lt.f_stat},
                          {"p_value", lt.p_value},
                          {"status", int(lt.status)}});
        feats.push_back({{"feature", schema.names[f]},
                         {"significant", r.significant},
                         {"lags", lags}});
      }
      dj["features"] = feats;
    }
    details.push_back(dj);
  }
  json summary{{"format_version", mtad::kFormatVersion},
               {"library_version", mtad::kLibraryVersion},
               {"max_lag", opt.max_lag},
               {"alpha", opt.alpha},
               {"min_side", opt.min_side},
               {"eligible_events", report.total_series},
               {"skipped", report.skipped},
               {"rank_failures", report.rank_failures},
               {"events", details}};
  write_json(opt.out_dir + "/granger_details.json", summary);

  std::cout << "tested " << report.total_series << " events ("
            << report.skipped << " skipped, " << report.rank_failures
            << " rank failures); report in " << report_path << "\n";
  return 0;
}

json manifest_inputs(const LoadedCohort& lc, const CliOptions& opt) {
  json in;
  if (lc.generated) {
    in["cohort"] = "generated";
    in["cohort_config"] = cohort_json(lc.config);
  } else {
    in["cohort"] = opt.cohort_path;
    if (!opt.events_path.empty()) in["events"] = opt.events_path;
  }
  return in;
}

void warn_excluded(const std::vector<mtad::TrainedSplit>& splits) {
  if (splits.empty() || splits.front().spec.excluded.empty()) return;
  std::cerr << "warning: excluded (too few normal windows):";
  for (const std::string& user : splits.front().spec.excluded)
    std::cerr << ' ' << user;
  std::cerr << "\n";
}

int cmd_run(const CliOptions& opt) {
  const json cfg_json =
      opt.config_path.empty() ? json::object() : load_json(opt.config_path);
  mtad::EvalConfig cfg;
  apply_eval_json(cfg, cfg_json);
  if (!opt.seeds_csv.empty()) {
    cfg.seeds.clear();
    for (const std::string& s : split_commas(opt.seeds_csv))
      cfg.seeds.push_back(std::stoull(s));
  }
  if (opt.percentile > 0) cfg.model.percentile = opt.percentile;
  cfg.methods = resolve_methods(cfg, opt);
  cfg.validate();

  const LoadedCohort lc = load_or_generate(cfg_json, opt);
  const mtad::Cohort cohort = preprocess(lc.raw);

  const auto splits = mtad::train_all_splits(cohort, cfg);
  warn_excluded(splits);
  const mtad::ExperimentResult result = mtad::evaluate_methods(
      splits, cfg.methods, cfg.model.lambda_decay, cfg.model.percentile);

  ensure_dir(opt.out_dir);
  std::vector<mtad::MetricRow> rows = result.rows;
  const auto reference = mtad::paper_reported_rows();
  rows.insert(rows.end(), reference.begin(), reference.end());
  mtad::write_metrics_csv(opt.out_dir + "/metrics.csv", rows);

  json outputs = json::array();
  outputs.push_back("metrics.csv");
  for (std::size_t i = 0; i < splits.size(); ++i) {
    for (const mtad::Method m : cfg.methods) {
      const std::string name = "decisions_" + method_slug(m) + "_" +
                               std::to_string(splits[i].seed) + ".csv";
      mtad::write_decisions_csv(opt.out_dir + "/" + name,
                                result.split_runs[i].at(m).outcomes);
      outputs.push_back(name);
    }
  }

  // Event-type recall for the first multi-task method (or first method).
  if (!lc.events.empty()) {
    mtad::Method breakdown_method = cfg.methods.front();
    if (std::find(cfg.methods.begin(), cfg.methods.end(), mtad::Method::kMtad) !=
        cfg.methods.end())
      breakdown_method = mtad::Method::kMtad;
    std::vector<std::vector<mtad::DetectionOutcome>> split_outcomes;
    for (const auto& runs : result.split_runs)
      split_outcomes.push_back(runs.at(breakdown_method).outcomes);
    const mtad::EventTypeReport report =
        mtad::event_type_breakdown(lc.events, split_outcomes);
    mtad::write_event_types_csv(opt.out_dir + "/event_types.csv", report);
    outputs.push_back("event_types.csv");
  }

  json manifest{{"format_version", mtad::kFormatVersion},
                {"library_version", mtad::kLibraryVersion},
                {"subcommand", "run"},
                {"config", eval_json(cfg)},
                {"inputs", manifest_inputs(lc, opt)},
                {"outputs", outputs}};
  if (lc.generated) manifest["config"]["cohort"] = cohort_json(lc.config);
  write_json(opt.out_dir + "/manifest.json", manifest);

  for (const mtad::MetricRow& r : result.rows)
    std::cout << r.method << ": P=" << mtad::format_double(r.p_mean)
              << " R=" << mtad::format_double(r.r_mean)
              << " F1=" << mtad::format_double(r.f1_mean) << " (std "
              << mtad::format_double(r.f1_std) << ", " << r.n_splits
              << " splits)\n";
  std::cout << "results in " << opt.out_dir << "\n";
  return 0;
}

int cmd_sweep(const CliOptions& opt) {
  if (opt.param != "lambda" && opt.param != "window_size")
    throw mtad::ConfigError("--param must be lambda or window_size");
  const json cfg_json =
      opt.config_path.empty() ? json::object() : load_json(opt.config_path);
  mtad::EvalConfig cfg;
  apply_eval_json(cfg, cfg_json);
  if (!opt.seeds_csv.empty()) {
    cfg.seeds.clear();
    for (const std::string& s : split_commas(opt.seeds_csv))
      cfg.seeds.push_back(std::stoull(s));
  }
  cfg.validate();

  const LoadedCohort lc = load_or_generate(cfg_json, opt);
  const mtad::Cohort cohort = preprocess(lc.raw);

  std::vector<mtad::SweepRow> rows;
  if (opt.param == "lambda") {
    std::vector<double> values = opt.values;
    if (values.empty()) values = {0.5, 2.0, 5.0, 10.0};
    const auto splits = mtad::train_all_splits(cohort, cfg);
    warn_excluded(splits);
    std::vector<mtad::Method> methods = {mtad::Method::kMtad, mtad::Method::kMtadPt};
    if (!opt.methods_csv.empty()) {
      methods.clear();
      for (const std::string& name : split_commas(opt.methods_csv))
        methods.push_back(parse_method_flex(name));
    }
    rows = mtad::sweep_lambda(splits, values, cfg.model.percentile, methods);
  } else {
    std::vector<int> values;
    for (const double v : opt.values) values.push_back(int(v));
    if (values.empty()) values = {6, 8, 10, 12};
    std::vector<mtad::Method> methods = {mtad::Method::kMtad, mtad::Method::kLstmEd,
                                         mtad::Method::kMtadPt,
                                         mtad::Method::kLstmEdPt};
    if (!opt.methods_csv.empty()) {
      methods.clear();
      for (const std::string& name : split_commas(opt.methods_csv))
        methods.push_back(parse_method_flex(name));
    }
    rows = mtad::sweep_window(cohort, cfg, values, methods);
  }

  ensure_dir(opt.out_dir);
  const std::string sweep_path = opt.out_dir + "/sweep_" + opt.param + ".csv";
  mtad::write_sweep_csv(sweep_path, rows);

  json manifest{{"format_version", mtad::kFormatVersion},
                {"library_version", mtad::kLibraryVersion},
                {"subcommand", "sweep"},
                {"param", opt.param},
                {"config", eval_json(cfg)},
                {"inputs", manifest_inputs(lc, opt)},
                {"outputs", json::array({"sweep_" + opt.param + ".csv"})}};
  if (lc.generated) manifest["config"]["cohort"] = cohort_json(lc.config);
  write_json(opt.out_dir + "/manifest.json", manifest);

  std::cout << "wrote " << rows.size() << " rows to " << sweep_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rare life-event detection in behavioral time series"};
  app.require_subcommand(1);
  CliOptions opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "JSON config (or prior manifest)");
    sub->add_option("--out", opt.out_dir, "output directory (default: results)");
    sub->add_option("--seed", opt.seed, "cohort generator seed override");
  };

  CLI::App* generate = app.add_subcommand("generate", "write a synthetic cohort");
  add_common(generate);
  generate->add_option("--users", opt.users, "number of users");
  generate->add_option("--ratio", opt.ratio, "target anomaly ratio");

  CLI::App* granger = app.add_subcommand("granger", "pre/post event Granger scan");
  add_common(granger);
  granger->add_option("--cohort", opt.cohort_path, "cohort CSV")->required();
  granger->add_option("--max-lag", opt.max_lag, "maximum tested lag (default 6)");
  granger->add_option("--min-side", opt.min_side, "minimum days per side (default 15)");
  granger->add_option("--alpha", opt.alpha, "significance level (default 0.05)");

  CLI::App* run = app.add_subcommand("run", "train and evaluate detection methods");
  add_common(run);
  run->add_option("--cohort", opt.cohort_path, "cohort CSV (omit to generate)");
  run->add_option("--events", opt.events_path, "ground-truth events JSON");
  run->add_option("--methods", opt.methods_csv,
                  "comma list: mtad,mtad_pt,lstm_ed,lstm_ed_pt,iforest,predictor_only");
  run->add_flag("--personalized", opt.personalized,
                "add per-user-threshold variants of the selected methods");
  run->add_option("--seeds", opt.seeds_csv, "comma list of split seeds");
  run->add_option("--percentile", opt.percentile, "threshold percentile");
  run->add_option("--users", opt.users, "generated cohort size");
  run->add_option("--ratio", opt.ratio, "generated anomaly ratio");

  CLI::App* sweep = app.add_subcommand("sweep", "sweep lambda or window size");
  add_common(sweep);
  sweep->add_option("--cohort", opt.cohort_path, "cohort CSV (omit to generate)");
  sweep->add_option("--param", opt.param, "lambda | window_size")->required();
  sweep->add_option("--values", opt.values, "values to sweep")->delimiter(',');
  sweep->add_option("--methods", opt.methods_csv, "comma list of methods");
  sweep->add_option("--seeds", opt.seeds_csv, "comma list of split seeds");
  sweep->add_option("--users", opt.users, "generated cohort size");
  sweep->add_option("--ratio", opt.ratio, "generated anomaly ratio");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (generate->parsed()) return cmd_generate(opt);
    if (granger->parsed()) return cmd_granger(opt);
    if (run->parsed()) return cmd_run(opt);
    if (sweep->parsed()) return cmd_sweep(opt);
    throw mtad::ConfigError("no subcommand given");
  } catch (const mtad::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const mtad::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const mtad::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
