// Command-line front end for the driving-style classification toolkit.
//
// Exit codes: 0 success, 2 configuration error, 3 data error,
// 4 numeric/feasibility error.

#include <algorithm>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "drivestyle/pipeline.hpp"

namespace fs = std::filesystem;
using namespace drivestyle;

namespace {

std::vector<std::string> collect_trace_files(const std::string& input) {
  std::vector<std::string> files;
  fs::path p(input);
  if (fs::is_directory(p)) {
    for (const auto& entry : fs::directory_iterator(p))
      if (entry.path().extension() == ".csv")
        files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());
  } else if (fs::exists(p)) {
    files.push_back(input);
  }
  if (files.empty())
    throw NotFoundError("no trace CSV files found under '" + input + "'");
  return files;
}

struct PreprocessFlags {
  double warmup_s = 2.0;
  int window_len = 600;
  double zero_tolerance = 0.9;
  double stop_speed_eps = 0.1;
};

void add_preprocess_flags(CLI::App* cmd, PreprocessFlags& flags) {
  cmd->add_option("--warmup", flags.warmup_s, "Warmup seconds to drop");
  cmd->add_option("--window-len", flags.window_len, "Samples per window");
  cmd->add_option("--zero-tolerance", flags.zero_tolerance,
                  "Max tolerated fraction of stopped samples per window");
  cmd->add_option("--stop-eps", flags.stop_speed_eps,
                  "Speed below which a sample counts as stopped (m/s)");
}

std::vector<Window> windows_from_files(const std::vector<std::string>& files,
                                       const PreprocessFlags& flags,
                                       std::vector<WindowOutcome>* outcomes) {
  std::vector<Window> windows;
  for (const auto& file : files) {
    auto records = load_trace(file);
    auto cleaned = clean(records, flags.warmup_s);
    auto sliced =
        slice_windows(cleaned, flags.window_len, flags.zero_tolerance,
                      flags.stop_speed_eps, fs::path(file).stem().string(),
                      outcomes);
    for (auto& w : sliced) windows.push_back(std::move(w));
  }
  return windows;
}

const TreeEnsemble& require_tree_model(const Model& model, const char* verb) {
  const auto* ens = std::get_if<TreeEnsemble>(&model);
  if (!ens)
    throw std::invalid_argument(std::string(verb) +
                                " requires a tree model (rf or gbt)");
  return *ens;
}

void check_dimensions(const Model& model, const FeatureTable& table) {
  if (model_n_features(model) != static_cast<int>(table.dim()))
    throw SchemaError("model expects " +
                      std::to_string(model_n_features(model)) +
                      " features, feature file has " +
                      std::to_string(table.dim()));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"drivestyle: explainable driving-style classification toolkit"};
  app.require_subcommand(1);

  try {
    // ---- generate ----------------------------------------------------
    {
      auto* cmd = app.add_subcommand(
          "generate", "Generate labeled synthetic driving traces");
      auto config_path = std::make_shared<std::string>();
      auto cfg_flags = std::make_shared<RunConfig>();
      cmd->add_option("--config", *config_path, "Run config JSON");
      auto* seed = cmd->add_option("--seed", cfg_flags->seed, "Base seed");
      auto* out = cmd->add_option("--out", cfg_flags->out_dir, "Output directory");
      auto* force = cmd->add_flag("--force", cfg_flags->force,
                                  "Reuse a non-empty output directory");
      auto* tpc = cmd->add_option("--traces-per-class",
                                  cfg_flags->traces_per_class, "Traces per profile");
      auto* dur = cmd->add_option("--duration", cfg_flags->trace_duration_s,
                                  "Trace duration in seconds");
      cmd->callback([=] {
        RunConfig cfg;
        if (!config_path->empty()) cfg = load_run_config(*config_path);
        if (seed->count()) cfg.seed = cfg_flags->seed;
        if (out->count()) cfg.out_dir = cfg_flags->out_dir;
        if (force->count()) cfg.force = cfg_flags->force;
        if (tpc->count()) cfg.traces_per_class = cfg_flags->traces_per_class;
        if (dur->count()) cfg.trace_duration_s = cfg_flags->trace_duration_s;
        auto files = run_generate(cfg);
        std::cout << "generate: wrote " << files.size() << " traces to "
                  << cfg.out_dir << "\n";
      });
    }

    // ---- slice --------------------------------------------------------
    {
      auto* cmd = app.add_subcommand(
          "slice", "Clean and slice traces; write the windows manifest");
      auto input = std::make_shared<std::string>();
      auto output = std::make_shared<std::string>("windows_manifest.json");
      auto flags = std::make_shared<PreprocessFlags>();
      cmd->add_option("--in", *input, "Trace CSV file or directory")->required();
      cmd->add_option("--out", *output, "Manifest JSON path");
      add_preprocess_flags(cmd, *flags);
      cmd->callback([=] {
        std::vector<WindowOutcome> outcomes;
        auto windows =
            windows_from_files(collect_trace_files(*input), *flags, &outcomes);
        write_windows_manifest(outcomes, *output);
        std::cout << "slice: kept " << windows.size() << " of "
                  << outcomes.size() << " windows; manifest at " << *output
                  << "\n";
      });
    }

    // ---- featurize ----------------------------------------------------
    {
      auto* cmd = app.add_subcommand(
          "featurize", "Extract feature vectors from traces");
      auto input = std::make_shared<std::string>();
      auto output = std::make_shared<std::string>("features.csv");
      auto config_name = std::make_shared<std::string>("config3");
      auto per_sample = std::make_shared<bool>(false);
      auto flags = std::make_shared<PreprocessFlags>();
      cmd->add_option("--in", *input, "Trace CSV file or directory")->required();
      cmd->add_option("--out", *output, "Feature CSV path");
      cmd->add_option("--feature-config", *config_name,
                      "config1 | config2 | config3");
      cmd->add_flag("--overspeed-per-sample", *per_sample,
                    "Count overspeed samples instead of episodes");
      add_preprocess_flags(cmd, *flags);
      cmd->callback([=] {
        auto windows =
            windows_from_files(collect_trace_files(*input), *flags, nullptr);
        FeatureConfig fc = feature_config(*config_name);
        fc.overspeed_per_sample = *per_sample;
        FeatureTable table = featurize_all(windows, fc);
        export_features(table, *output);
        std::cout << "featurize: " << table.rows.size() << " x " << table.dim()
                  << " features (" << *config_name << ") at " << *output << "\n";
      });
    }

    // ---- train ----------------------------------------------------------
    {
      auto* cmd = app.add_subcommand("train", "Fit a classifier on features");
      auto features_path = std::make_shared<std::string>();
      auto model_name = std::make_shared<std::string>("rf");
      auto output = std::make_shared<std::string>("model.json");
      auto results = std::make_shared<std::string>();
      auto config_path = std::make_shared<std::string>();
      auto seed_val = std::make_shared<std::uint64_t>(42);
      cmd->add_option("--features", *features_path, "Feature CSV")->required();
      cmd->add_option("--model", *model_name, "rf | gbt | svm");
      cmd->add_option("--out", *output, "Model JSON path");
      cmd->add_option("--results", *results,
                      "Training results JSON (default: alongside the model)");
      cmd->add_option("--config", *config_path,
                      "Run config JSON supplying hyperparameters");
      auto* seed = cmd->add_option("--seed", *seed_val, "Fit seed");
      cmd->callback([=] {
        RunConfig cfg;
        if (!config_path->empty()) cfg = load_run_config(*config_path);
        if (seed->count()) cfg.seed = *seed_val;
        cfg.model = *model_name;

        FeatureTable table = load_features(*features_path);
        Matrix X;
        for (const auto& r : table.rows) X.push_back(r.values);
        std::vector<int> y = table.labels();

        Model model = [&]() -> Model {
          const std::uint64_t fit_seed = derive_seed(cfg.seed, 0xF17ULL);
          if (cfg.model == "rf") {
            ForestFitParams p = cfg.rf;
            p.seed = fit_seed;
            TreeEnsemble e = fit_forest(X, y, p);
            e.feature_names = table.feature_names;
            return e;
          }
          if (cfg.model == "gbt") {
            GbtFitParams p = cfg.gbt;
            p.seed = fit_seed;
            TreeEnsemble e = fit_gbt(X, y, p);
            e.feature_names = table.feature_names;
            return e;
          }
          if (cfg.model == "svm") {
            SvmFitParams p = cfg.svm;
            p.seed = fit_seed;
            LinearModel m = fit_linear_svm(X, y, p);
            m.feature_names = table.feature_names;
            return m;
          }
          throw std::invalid_argument("train: unknown model '" + cfg.model + "'");
        }();
        save_model(model, *output);

        std::vector<int> pred;
        for (const auto& row : X) pred.push_back(predict(model, row));
        int n_classes = model_n_classes(model);
        auto rep = metrics(confusion_matrix(y, pred, n_classes));
        std::string results_path =
            results->empty()
                ? (fs::path(*output).parent_path() / "train_results.json").string()
                : *results;
        nlohmann::ordered_json j;
        j["model"] = cfg.model;
        j["seed"] = cfg.seed;
        j["train_accuracy"] = rep.accuracy;
        j["train_f1_macro"] = rep.f1;
        std::ofstream f(results_path);
        if (!f) throw IoError("train: cannot write " + results_path);
        f << j.dump(2) << '\n';
        std::cout << "train: " << cfg.model << " train accuracy " << rep.accuracy
                  << "; model at " << *output << "\n";
      });
    }

    // ---- eval ----------------------------------------------------------
    {
      auto* cmd = app.add_subcommand("eval", "Evaluate a model on features");
      auto model_path = std::make_shared<std::string>();
      auto features_path = std::make_shared<std::string>();
      auto out_dir = std::make_shared<std::string>(".");
      cmd->add_option("--model", *model_path, "Model JSON")->required();
      cmd->add_option("--features", *features_path, "Feature CSV")->required();
      cmd->add_option("--out", *out_dir, "Output directory");
      cmd->callback([=] {
        Model model = load_model(*model_path);
        FeatureTable table = load_features(*features_path);
        check_dimensions(model, table);
        std::vector<int> y = table.labels();
        std::vector<int> pred;
        for (const auto& r : table.rows) pred.push_back(predict(model, r.values));
        auto cm = confusion_matrix(y, pred, model_n_classes(model));
        auto rep = metrics(cm);
        fs::create_directories(*out_dir);
        export_confusion_csv(cm, (fs::path(*out_dir) / "confusion.csv").string());
        export_normalized_confusion_csv(
            cm, (fs::path(*out_dir) / "confusion_normalized.csv").string());
        nlohmann::ordered_json j;
        j["accuracy"] = rep.accuracy;
        j["precision"] = rep.precision;
        j["recall"] = rep.recall;
        j["f1"] = rep.f1;
        j["averaging"] = rep.averaging;
        std::ofstream f(fs::path(*out_dir) / "metrics.json");
        if (!f) throw IoError("eval: cannot write metrics.json");
        f << j.dump(2) << '\n';
        std::cout << "eval: accuracy " << rep.accuracy << ", macro F1 " << rep.f1
                  << "\n";
      });
    }

    // ---- explain ---------------------------------------------------------
    {
      auto* cmd = app.add_subcommand(
          "explain", "SHAP attributions for a tree model");
      auto model_path = std::make_shared<std::string>();
      auto features_path = std::make_shared<std::string>();
      auto out_dir = std::make_shared<std::string>(".");
      auto instance = std::make_shared<int>(-1);
      auto class_index = std::make_shared<int>(-1);
      cmd->add_option("--model", *model_path, "Model JSON")->required();
      cmd->add_option("--features", *features_path, "Feature CSV")->required();
      cmd->add_option("--out", *out_dir, "Output directory");
      auto* inst_opt = cmd->add_option("--instance", *instance,
                                       "Row index for a waterfall export");
      cmd->add_option("--class", *class_index,
                      "Class to target (default: last = aggressive)");
      cmd->callback([=] {
        Model model = load_model(*model_path);
        const TreeEnsemble& ensemble = require_tree_model(model, "explain");
        FeatureTable table = load_features(*features_path);
        check_dimensions(model, table);
        Matrix X;
        for (const auto& r : table.rows) X.push_back(r.values);

        fs::create_directories(*out_dir);
        BeeswarmTable bees = explain_dataset(ensemble, X);
        export_beeswarm_csv(bees, (fs::path(*out_dir) / "beeswarm.csv").string());
        export_global_importance_csv(
            bees, (fs::path(*out_dir) / "global_importance.csv").string());
        std::cout << "explain: " << bees.rows.size() << " beeswarm rows\n";

        if (inst_opt->count()) {
          if (*instance < 0 || *instance >= static_cast<int>(X.size()))
            throw NotFoundError("explain: instance " + std::to_string(*instance) +
                                " not in feature file (rows: " +
                                std::to_string(X.size()) + ")");
          int cls = *class_index >= 0 ? *class_index : ensemble.n_classes - 1;
          Explanation ex = tree_shap(ensemble, X[*instance]);
          ex.instance_ref = std::to_string(*instance);
          Waterfall wf = waterfall(ex, cls);
          auto path = fs::path(*out_dir) /
                      ("waterfall_" + std::to_string(*instance) + ".json");
          export_waterfall_json(wf, ex.instance_ref, path.string());
          std::cout << "explain: waterfall at " << path.string() << "\n";
        }
      });
    }

    // ---- recommend ---------------------------------------------------------
    {
      auto* cmd = app.add_subcommand(
          "recommend", "Personalized advice for one instance");
      auto model_path = std::make_shared<std::string>();
      auto features_path = std::make_shared<std::string>();
      auto rulebook_path = std::make_shared<std::string>();
      auto medians_path = std::make_shared<std::string>();
      auto out_path = std::make_shared<std::string>("recommendation.json");
      auto instance = std::make_shared<int>(-1);
      auto top_k = std::make_shared<int>(4);
      cmd->add_option("--model", *model_path, "Model JSON")->required();
      cmd->add_option("--features", *features_path, "Feature CSV")->required();
      cmd->add_option("--instance", *instance, "Row index")->required();
      cmd->add_option("--rulebook", *rulebook_path,
                      "Rulebook TSV (default: embedded)");
      cmd->add_option("--medians", *medians_path,
                      "Training medians JSON for advice variants");
      cmd->add_option("--k", *top_k, "Number of top features considered");
      cmd->add_option("--out", *out_path, "Report JSON path");
      cmd->callback([=] {
        Model model = load_model(*model_path);
        const TreeEnsemble& ensemble = require_tree_model(model, "recommend");
        FeatureTable table = load_features(*features_path);
        check_dimensions(model, table);
        if (*instance < 0 || *instance >= static_cast<int>(table.rows.size()))
          throw NotFoundError("recommend: instance " + std::to_string(*instance) +
                              " not in feature file");

        Rulebook rulebook = rulebook_path->empty()
                                ? Rulebook::parse(Rulebook::default_text())
                                : Rulebook::load(*rulebook_path);
        std::map<std::string, double> medians;
        if (!medians_path->empty()) medians = load_medians_json(*medians_path);

        const auto& x = table.rows[*instance].values;
        Explanation ex = tree_shap(ensemble, x);
        ex.instance_ref = std::to_string(*instance);
        const int aggressive = ensemble.n_classes - 1;
        RecommendationReport report =
            recommend(ex, ensemble.predict(x), aggressive, rulebook, *top_k,
                      medians.empty() ? nullptr : &medians);
        export_report_json(report, *out_path);
        std::cout << "recommend: " << report.advice.size() << " advice item(s) at "
                  << *out_path << "\n";
      });
    }

    // ---- pipeline ---------------------------------------------------------
    {
      auto* cmd = app.add_subcommand(
          "pipeline", "Run the full generate-to-recommend pipeline");
      auto config_path = std::make_shared<std::string>();
      auto cfg_flags = std::make_shared<RunConfig>();
      cmd->add_option("--config", *config_path, "Run config JSON");
      auto* seed = cmd->add_option("--seed", cfg_flags->seed, "Base seed");
      auto* out = cmd->add_option("--out", cfg_flags->out_dir, "Output directory");
      auto* force = cmd->add_flag("--force", cfg_flags->force,
                                  "Reuse a non-empty output directory");
      auto* model = cmd->add_option("--model", cfg_flags->model, "rf | gbt | svm");
      auto* fconf = cmd->add_option("--feature-config", cfg_flags->feature_config,
                                    "config1 | config2 | config3");
      auto* task = cmd->add_option("--task", cfg_flags->task,
                                   "three_class | binary");
      cmd->callback([=] {
        RunConfig cfg;
        if (!config_path->empty()) cfg = load_run_config(*config_path);
        if (seed->count()) cfg.seed = cfg_flags->seed;
        if (out->count()) cfg.out_dir = cfg_flags->out_dir;
        if (force->count()) cfg.force = cfg_flags->force;
        if (model->count()) cfg.model = cfg_flags->model;
        if (fconf->count()) cfg.feature_config = cfg_flags->feature_config;
        if (task->count()) cfg.task = cfg_flags->task;
        PipelineResult result = run_pipeline(cfg);
        std::cout << "pipeline: " << cfg.model << "/" << cfg.feature_config
                  << "/" << cfg.task << " accuracy "
                  << result.test_metrics.accuracy << " (" << result.n_test
                  << " test windows); summary at " << result.summary_path
                  << "\n";
      });
    }

    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const NotFoundError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const FeasibilityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
