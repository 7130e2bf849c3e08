#include "drivestyle/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace drivestyle {

namespace {

// Rethrows with the stage name prefixed, preserving the exception type so
// the CLI can keep its exit-code mapping.
template <typename F>
auto run_stage(const char* name, F&& fn) {
  auto prefix = [&](const char* what) {
    return std::string("stage ") + name + ": " + what;
  };
  try {
    return fn();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(prefix(e.what()));
  } catch (const ParseError& e) {
    throw ParseError(prefix(e.what()));
  } catch (const SchemaError& e) {
    throw SchemaError(prefix(e.what()));
  } catch (const IoError& e) {
    throw IoError(prefix(e.what()));
  } catch (const NotFoundError& e) {
    throw NotFoundError(prefix(e.what()));
  } catch (const FeasibilityError& e) {
    throw FeasibilityError(prefix(e.what()));
  } catch (const std::exception& e) {
    throw std::runtime_error(prefix(e.what()));
  }
}

ordered_json profile_to_json(const ProfileParams& p) {
  return ordered_json{{"label", p.label},
                      {"desired_speed_factor", p.desired_speed_factor},
                      {"max_accel", p.max_accel},
                      {"comfort_decel", p.comfort_decel},
                      {"min_gap", p.min_gap},
                      {"time_headway", p.time_headway},
                      {"steer_aggressiveness", p.steer_aggressiveness},
                      {"noise_scale", p.noise_scale}};
}

void profile_from_json(ProfileParams& p, const json& j) {
  if (j.contains("desired_speed_factor"))
    p.desired_speed_factor = j["desired_speed_factor"].get<double>();
  if (j.contains("max_accel")) p.max_accel = j["max_accel"].get<double>();
  if (j.contains("comfort_decel"))
    p.comfort_decel = j["comfort_decel"].get<double>();
  if (j.contains("min_gap")) p.min_gap = j["min_gap"].get<double>();
  if (j.contains("time_headway"))
    p.time_headway = j["time_headway"].get<double>();
  if (j.contains("steer_aggressiveness"))
    p.steer_aggressiveness = j["steer_aggressiveness"].get<double>();
  if (j.contains("noise_scale")) p.noise_scale = j["noise_scale"].get<double>();
}

ordered_json config_to_json(const RunConfig& cfg) {
  ordered_json j;
  j["seed"] = cfg.seed;
  j["traces_per_class"] = cfg.traces_per_class;
  j["trace_duration_s"] = cfg.trace_duration_s;
  j["road_length_m"] = cfg.road_length_m;
  ordered_json profiles = ordered_json::array();
  for (const auto& p : cfg.profiles) profiles.push_back(profile_to_json(p));
  j["profiles"] = std::move(profiles);
  j["warmup_s"] = cfg.warmup_s;
  j["window_len"] = cfg.window_len;
  j["zero_tolerance"] = cfg.zero_tolerance;
  j["stop_speed_eps"] = cfg.stop_speed_eps;
  j["feature_config"] = cfg.feature_config;
  j["overspeed_per_sample"] = cfg.overspeed_per_sample;
  j["task"] = cfg.task;
  j["model"] = cfg.model;
  j["split_ratio"] = cfg.split_ratio;
  j["rf"] = ordered_json{{"n_trees", cfg.rf.n_trees},
                         {"max_depth", cfg.rf.max_depth},
                         {"min_samples_leaf", cfg.rf.min_samples_leaf},
                         {"features_per_split", cfg.rf.features_per_split},
                         {"bootstrap", cfg.rf.bootstrap}};
  j["gbt"] = ordered_json{{"n_rounds", cfg.gbt.n_rounds},
                          {"max_depth", cfg.gbt.max_depth},
                          {"min_samples_leaf", cfg.gbt.min_samples_leaf},
                          {"learning_rate", cfg.gbt.learning_rate}};
  j["svm"] = ordered_json{{"lambda", cfg.svm.lambda}, {"epochs", cfg.svm.epochs}};
  j["n_waterfalls"] = cfg.n_waterfalls;
  j["rulebook"] = cfg.rulebook_path;
  j["out"] = cfg.out_dir;
  if (cfg.task == "binary")
    j["binary_mapping"] = "class 1 = aggressive; class 0 = cautious + normal";
  return j;
}

std::vector<double> column(const FeatureTable& table, std::size_t col) {
  std::vector<double> v;
  v.reserve(table.rows.size());
  for (const auto& r : table.rows) v.push_back(r.values[col]);
  return v;
}

Matrix table_matrix(const FeatureTable& table) {
  Matrix X;
  X.reserve(table.rows.size());
  for (const auto& r : table.rows) X.push_back(r.values);
  return X;
}

ordered_json metrics_to_json(const MetricsReport& rep) {
  ordered_json j;
  j["accuracy"] = rep.accuracy;
  j["precision"] = rep.precision;
  j["recall"] = rep.recall;
  j["f1"] = rep.f1;
  j["averaging"] = rep.averaging;
  ordered_json per_class = ordered_json::array();
  for (const auto& m : rep.per_class)
    per_class.push_back(ordered_json{{"precision", m.precision},
                                     {"recall", m.recall},
                                     {"f1", m.f1},
                                     {"degenerate", m.degenerate}});
  j["per_class"] = std::move(per_class);
  return j;
}

}  // namespace

void RunConfig::validate() const {
  if (traces_per_class < 1)
    throw std::invalid_argument("config: traces_per_class must be >= 1");
  if (trace_duration_s < 60.0)
    throw std::invalid_argument("config: trace_duration_s must be >= 60");
  if (road_length_m <= 0)
    throw std::invalid_argument("config: road_length_m must be positive");
  if (profiles.size() != 3)
    throw std::invalid_argument("config: exactly three profiles expected");
  for (const auto& p : profiles) p.validate();
  std::set<int> labels;
  for (const auto& p : profiles) labels.insert(p.label);
  if (labels != std::set<int>{kCautious, kNormal, kAggressive})
    throw std::invalid_argument("config: profile labels must be {0, 1, 2}");
  if (warmup_s < 0) throw std::invalid_argument("config: warmup_s must be >= 0");
  if (window_len <= 0)
    throw std::invalid_argument("config: window_len must be positive");
  if (zero_tolerance < 0 || zero_tolerance > 1)
    throw std::invalid_argument("config: zero_tolerance must be in [0, 1]");
  if (split_ratio <= 0 || split_ratio >= 1)
    throw std::invalid_argument("config: split_ratio must be in (0, 1)");
  feature_config_names();  // ensure catalog is reachable
  feature_config(feature_config);
  if (task != "three_class" && task != "binary")
    throw std::invalid_argument("config: task must be three_class or binary");
  if (model != "rf" && model != "gbt" && model != "svm")
    throw std::invalid_argument("config: model must be rf, gbt or svm");
  if (n_waterfalls < 0)
    throw std::invalid_argument("config: n_waterfalls must be >= 0");
}

void apply_config_json(RunConfig& cfg, const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: malformed JSON: ") + e.what());
  }
  try {
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("traces_per_class"))
      cfg.traces_per_class = j["traces_per_class"].get<int>();
    if (j.contains("trace_duration_s"))
      cfg.trace_duration_s = j["trace_duration_s"].get<double>();
    if (j.contains("road_length_m"))
      cfg.road_length_m = j["road_length_m"].get<double>();
    if (j.contains("profiles")) {
      for (const auto& pj : j["profiles"]) {
        const int label = pj.at("label").get<int>();
        for (auto& p : cfg.profiles)
          if (p.label == label) profile_from_json(p, pj);
      }
    }
    if (j.contains("warmup_s")) cfg.warmup_s = j["warmup_s"].get<double>();
    if (j.contains("window_len")) cfg.window_len = j["window_len"].get<int>();
    if (j.contains("zero_tolerance"))
      cfg.zero_tolerance = j["zero_tolerance"].get<double>();
    if (j.contains("stop_speed_eps"))
      cfg.stop_speed_eps = j["stop_speed_eps"].get<double>();
    if (j.contains("feature_config"))
      cfg.feature_config = j["feature_config"].get<std::string>();
    if (j.contains("overspeed_per_sample"))
      cfg.overspeed_per_sample = j["overspeed_per_sample"].get<bool>();
    if (j.contains("task")) cfg.task = j["task"].get<std::string>();
    if (j.contains("model")) cfg.model = j["model"].get<std::string>();
    if (j.contains("split_ratio"))
      cfg.split_ratio = j["split_ratio"].get<double>();
    if (j.contains("rf")) {
      const auto& r = j["rf"];
      if (r.contains("n_trees")) cfg.rf.n_trees = r["n_trees"].get<int>();
      if (r.contains("max_depth")) cfg.rf.max_depth = r["max_depth"].get<int>();
      if (r.contains("min_samples_leaf"))
        cfg.rf.min_samples_leaf = r["min_samples_leaf"].get<int>();
      if (r.contains("features_per_split"))
        cfg.rf.features_per_split = r["features_per_split"].get<int>();
      if (r.contains("bootstrap")) cfg.rf.bootstrap = r["bootstrap"].get<bool>();
    }
    if (j.contains("gbt")) {
      const auto& g = j["gbt"];
      if (g.contains("n_rounds")) cfg.gbt.n_rounds = g["n_rounds"].get<int>();
      if (g.contains("max_depth")) cfg.gbt.max_depth = g["max_depth"].get<int>();
      if (g.contains("min_samples_leaf"))
        cfg.gbt.min_samples_leaf = g["min_samples_leaf"].get<int>();
      if (g.contains("learning_rate"))
        cfg.gbt.learning_rate = g["learning_rate"].get<double>();
    }
    if (j.contains("svm")) {
      const auto& s = j["svm"];
      if (s.contains("lambda")) cfg.svm.lambda = s["lambda"].get<double>();
      if (s.contains("epochs")) cfg.svm.epochs = s["epochs"].get<int>();
    }
    if (j.contains("n_waterfalls"))
      cfg.n_waterfalls = j["n_waterfalls"].get<int>();
    if (j.contains("rulebook"))
      cfg.rulebook_path = j["rulebook"].get<std::string>();
    if (j.contains("out")) cfg.out_dir = j["out"].get<std::string>();
  } catch (const json::exception& e) {
    throw SchemaError(std::string("config: bad field type: ") + e.what());
  }
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  RunConfig cfg;
  apply_config_json(cfg, buffer.str());
  return cfg;
}

void prepare_out_dir(const std::string& dir, bool force) {
  if (dir.empty())
    throw std::invalid_argument("output directory not set (use --out)");
  fs::path p(dir);
  if (fs::exists(p) && !fs::is_empty(p) && !force)
    throw std::invalid_argument("output directory '" + dir +
                                "' is not empty (pass --force to reuse it)");
  fs::create_directories(p);
}

TraceSet generate_traces(const RunConfig& cfg) {
  TraceSet set;
  for (const auto& profile : cfg.profiles) {
    for (int i = 0; i < cfg.traces_per_class; ++i) {
      const std::uint64_t seed =
          derive_seed(cfg.seed, static_cast<std::uint64_t>(profile.label),
                      static_cast<std::uint64_t>(i));
      set.ids.push_back("trace_" + std::to_string(profile.label) + "_" +
                        std::to_string(i));
      set.traces.push_back(generate_trace(profile, cfg.trace_duration_s, seed));
    }
  }
  return set;
}

std::vector<std::string> run_generate(const RunConfig& cfg) {
  cfg.validate();
  prepare_out_dir(cfg.out_dir, cfg.force);
  TraceSet set = generate_traces(cfg);

  std::vector<std::string> files;
  ordered_json manifest = ordered_json::array();
  for (std::size_t i = 0; i < set.traces.size(); ++i) {
    const std::string file = set.ids[i] + ".csv";
    const fs::path path = fs::path(cfg.out_dir) / file;
    export_trace(set.traces[i], path.string());
    files.push_back(path.string());
    manifest.push_back(ordered_json{{"file", file},
                                    {"label", set.traces[i].front().label},
                                    {"n_records", set.traces[i].size()},
                                    {"duration_s", cfg.trace_duration_s},
                                    {"seed", cfg.seed}});
  }
  ordered_json top;
  top["config"] = config_to_json(cfg);
  top["traces"] = std::move(manifest);
  std::ofstream out(fs::path(cfg.out_dir) / "manifest.json");
  if (!out) throw IoError("run_generate: cannot write manifest");
  out << top.dump(2) << '\n';
  return files;
}

std::vector<Window> make_windows(const RunConfig& cfg, const TraceSet& traces,
                                 std::vector<WindowOutcome>* outcomes) {
  std::vector<Window> windows;
  for (std::size_t i = 0; i < traces.traces.size(); ++i) {
    auto cleaned = clean(traces.traces[i], cfg.warmup_s);
    auto sliced = slice_windows(cleaned, cfg.window_len, cfg.zero_tolerance,
                                cfg.stop_speed_eps, traces.ids[i], outcomes);
    for (auto& w : sliced) windows.push_back(std::move(w));
  }
  return windows;
}

std::map<std::string, double> feature_medians(const FeatureTable& table) {
  std::map<std::string, double> medians;
  for (std::size_t f = 0; f < table.feature_names.size(); ++f) {
    auto vals = column(table, f);
    std::sort(vals.begin(), vals.end());
    const std::size_t n = vals.size();
    if (n == 0) continue;
    medians[table.feature_names[f]] =
        n % 2 == 1 ? vals[n / 2] : 0.5 * (vals[n / 2 - 1] + vals[n / 2]);
  }
  return medians;
}

void write_medians_json(const std::map<std::string, double>& medians,
                        const std::string& path) {
  ordered_json j;
  for (const auto& [name, value] : medians) j[name] = value;
  std::ofstream out(path);
  if (!out) throw IoError("write_medians_json: cannot open " + path);
  out << j.dump(2) << '\n';
}

std::map<std::string, double> load_medians_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_medians_json: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("medians: malformed JSON: ") + e.what());
  }
  std::map<std::string, double> medians;
  for (auto it = j.begin(); it != j.end(); ++it)
    medians[it.key()] = it.value().get<double>();
  return medians;
}

PipelineResult run_pipeline(const RunConfig& cfg) {
  run_stage("config", [&] { cfg.validate(); });
  prepare_out_dir(cfg.out_dir, cfg.force);
  const fs::path out(cfg.out_dir);

  // resolved config echo
  {
    std::ofstream f(out / "resolved_config.json");
    if (!f) throw IoError("pipeline: cannot write resolved_config.json");
    f << config_to_json(cfg).dump(2) << '\n';
  }

  TraceSet traces = run_stage("generate", [&] { return generate_traces(cfg); });

  std::vector<WindowOutcome> outcomes;
  std::vector<Window> windows = run_stage(
      "slice", [&] { return make_windows(cfg, traces, &outcomes); });
  run_stage("slice", [&] {
    write_windows_manifest(outcomes, (out / "windows_manifest.json").string());
  });
  if (windows.empty())
    throw SchemaError("stage slice: no windows survived preprocessing");

  FeatureConfig fconfig = feature_config(cfg.feature_config);
  fconfig.overspeed_per_sample = cfg.overspeed_per_sample;
  FeatureTable all = run_stage("featurize", [&] {
    return featurize_all(windows, fconfig);
  });

  // Split is stratified on the three-way labels regardless of task so that
  // binary and three-class runs see identical window partitions.
  SplitIndices idx = run_stage("split", [&] {
    return split(all.labels(), cfg.split_ratio, cfg.seed);
  });

  FeatureTable train, test;
  train.feature_names = test.feature_names = all.feature_names;
  for (auto i : idx.train) train.rows.push_back(all.rows[i]);
  for (auto i : idx.test) test.rows.push_back(all.rows[i]);
  if (cfg.task == "binary") {
    for (auto& r : train.rows) r.label = r.label == kAggressive ? 1 : 0;
    for (auto& r : test.rows) r.label = r.label == kAggressive ? 1 : 0;
  }
  export_features(train, (out / "features_train.csv").string());
  export_features(test, (out / "features_test.csv").string());

  const Matrix X_train = table_matrix(train);
  const Matrix X_test = table_matrix(test);
  const std::vector<int> y_train = train.labels();
  const std::vector<int> y_test = test.labels();

  Model model = run_stage("train", [&]() -> Model {
    if (cfg.model == "rf") {
      ForestFitParams p = cfg.rf;
      p.seed = derive_seed(cfg.seed, 0xF17ULL);
      TreeEnsemble ens = fit_forest(X_train, y_train, p);
      ens.feature_names = all.feature_names;
      return ens;
    }
    if (cfg.model == "gbt") {
      GbtFitParams p = cfg.gbt;
      p.seed = derive_seed(cfg.seed, 0xF17ULL);
      TreeEnsemble ens = fit_gbt(X_train, y_train, p);
      ens.feature_names = all.feature_names;
      return ens;
    }
    SvmFitParams p = cfg.svm;
    p.seed = derive_seed(cfg.seed, 0xF17ULL);
    LinearModel svm = fit_linear_svm(X_train, y_train, p);
    svm.feature_names = all.feature_names;
    return svm;
  });
  save_model(model, (out / "model.json").string());

  // training results file: hyperparameters, seed, train-side metrics
  {
    std::vector<int> pred_train;
    pred_train.reserve(y_train.size());
    for (const auto& row : X_train) pred_train.push_back(predict(model, row));
    auto cm = confusion_matrix(y_train, pred_train, cfg.n_classes());
    ordered_json j;
    j["model"] = cfg.model;
    j["seed"] = cfg.seed;
    j["hyperparameters"] = config_to_json(cfg)[cfg.model == "rf"   ? "rf"
                                               : cfg.model == "gbt" ? "gbt"
                                                                    : "svm"];
    j["train_metrics"] = metrics_to_json(metrics(cm));
    std::ofstream f(out / "train_results.json");
    if (!f) throw IoError("pipeline: cannot write train_results.json");
    f << j.dump(2) << '\n';
  }

  PipelineResult result;
  result.n_windows = static_cast<int>(windows.size());
  result.n_train = static_cast<int>(train.rows.size());
  result.n_test = static_cast<int>(test.rows.size());

  std::vector<int> pred;
  run_stage("eval", [&] {
    pred.reserve(y_test.size());
    for (const auto& row : X_test) pred.push_back(predict(model, row));
    result.confusion = confusion_matrix(y_test, pred, cfg.n_classes());
    result.test_metrics = metrics(result.confusion);
    export_confusion_csv(result.confusion, (out / "confusion.csv").string());
    export_normalized_confusion_csv(
        result.confusion, (out / "confusion_normalized.csv").string());
    std::ofstream f(out / "metrics.json");
    if (!f) throw IoError("pipeline: cannot write metrics.json");
    f << metrics_to_json(result.test_metrics).dump(2) << '\n';
  });

  // Rulebook + medians are written regardless of model type so downstream
  // `recommend` invocations can reuse the bundle.
  Rulebook rulebook = cfg.rulebook_path.empty()
                          ? Rulebook::parse(Rulebook::default_text())
                          : Rulebook::load(cfg.rulebook_path);
  {
    std::ofstream f(out / "rulebook.tsv");
    if (!f) throw IoError("pipeline: cannot write rulebook.tsv");
    if (cfg.rulebook_path.empty()) {
      f << Rulebook::default_text();
    } else {
      std::ifstream src(cfg.rulebook_path);
      f << src.rdbuf();
    }
  }
  auto medians = feature_medians(train);
  write_medians_json(medians, (out / "medians.json").string());

  std::vector<std::string> waterfall_instances;
  const bool tree_model = std::holds_alternative<TreeEnsemble>(model);
  if (tree_model) {
    const auto& ensemble = std::get<TreeEnsemble>(model);
    run_stage("explain", [&] {
      BeeswarmTable table = explain_dataset(ensemble, X_test);
      export_beeswarm_csv(table, (out / "beeswarm.csv").string());
      export_global_importance_csv(table,
                                   (out / "global_importance.csv").string());

      const auto& agg = table.global_importance[cfg.aggressive_class()];
      std::vector<std::size_t> order(agg.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return agg[a] > agg[b]; });
      for (std::size_t i = 0; i < order.size() && i < 4; ++i)
        result.aggressive_top_features.push_back(table.feature_names[order[i]]);
    });

    run_stage("recommend", [&] {
      fs::create_directories(out / "waterfalls");
      fs::create_directories(out / "recommendations");
      int emitted = 0;
      for (std::size_t i = 0; i < X_test.size() && emitted < cfg.n_waterfalls;
           ++i) {
        if (pred[i] != cfg.aggressive_class()) continue;
        Explanation ex = tree_shap(ensemble, X_test[i]);
        ex.instance_ref = std::to_string(i);
        Waterfall wf = waterfall(ex, cfg.aggressive_class());
        export_waterfall_json(
            wf, ex.instance_ref,
            (out / "waterfalls" / ("instance_" + ex.instance_ref + ".json"))
                .string());
        RecommendationReport report =
            recommend(ex, pred[i], cfg.aggressive_class(), rulebook, 4, &medians);
        export_report_json(report,
                           (out / "recommendations" /
                            ("instance_" + ex.instance_ref + ".json"))
                               .string());
        waterfall_instances.push_back(ex.instance_ref);
        ++emitted;
      }
    });
  }

  // machine-readable summary; deliberately free of timestamps so reruns of
  // the same config are byte-identical
  ordered_json summary;
  summary["config"] = config_to_json(cfg);
  summary["dataset"] =
      ordered_json{{"n_traces", traces.traces.size()},
                   {"n_windows", result.n_windows},
                   {"n_candidate_windows", outcomes.size()},
                   {"n_train", result.n_train},
                   {"n_test", result.n_test}};
  summary["metrics"] = metrics_to_json(result.test_metrics);
  ordered_json cm_json = ordered_json::array();
  for (const auto& row : result.confusion.counts) cm_json.push_back(row);
  summary["confusion"] = std::move(cm_json);
  if (tree_model) {
    summary["aggressive_top_features"] = result.aggressive_top_features;
    summary["explained_output"] =
        cfg.model == "rf" ? "class probabilities (tree average)"
                          : "pre-softmax margins";
  } else {
    summary["aggressive_top_features"] = nullptr;
    summary["explained_output"] =
        "not available: SHAP tree explanations apply to tree ensembles only";
  }
  summary["waterfall_instances"] = waterfall_instances;

  const fs::path summary_path = out / "summary.json";
  std::ofstream f(summary_path);
  if (!f) throw IoError("pipeline: cannot write summary.json");
  f << summary.dump(2) << '\n';
  result.summary_path = summary_path.string();
  return result;
}

}  // namespace drivestyle
