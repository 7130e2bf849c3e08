#pragma once

#include <string>
#include <vector>

#include "drivestyle/dataset.hpp"
#include "drivestyle/eval.hpp"
#include "drivestyle/explain.hpp"
#include "drivestyle/features.hpp"
#include "drivestyle/models.hpp"
#include "drivestyle/recommend.hpp"
#include "drivestyle/sim.hpp"

namespace drivestyle {

/// Fully resolved run configuration. Precedence: CLI flags > config file >
/// defaults; the resolved value set is echoed into every output bundle.
struct RunConfig {
  std::uint64_t seed = 42;

  // generation
  int traces_per_class = 24;
  double trace_duration_s = 600.0;
  double road_length_m = 5000.0;
  std::vector<ProfileParams> profiles = default_profiles();

  // preprocessing
  double warmup_s = 2.0;
  int window_len = 600;
  double zero_tolerance = 0.9;
  double stop_speed_eps = 0.1;

  // features
  std::string feature_config = "config3";
  bool overspeed_per_sample = false;

  // task & model
  std::string task = "three_class";  // three_class | binary
  std::string model = "rf";          // rf | gbt | svm
  double split_ratio = 0.8;
  ForestFitParams rf;
  GbtFitParams gbt;
  SvmFitParams svm;

  // explainability
  int n_waterfalls = 2;
  std::string rulebook_path;  // empty = the embedded default rulebook

  std::string out_dir;
  bool force = false;

  void validate() const;
  /// Index of the aggressive class under the configured task.
  int aggressive_class() const { return task == "binary" ? 1 : kAggressive; }
  int n_classes() const { return task == "binary" ? 2 : 3; }
};

/// Reads a JSON config file over the defaults.
RunConfig load_run_config(const std::string& path);
/// Applies a JSON object over an existing config (used for file + flags).
void apply_config_json(RunConfig& cfg, const std::string& json_text);

struct TraceSet {
  std::vector<std::string> ids;
  std::vector<std::vector<SampleRecord>> traces;
};

/// Deterministic per-profile trace generation (in memory).
TraceSet generate_traces(const RunConfig& cfg);

/// `generate` subcommand: writes one CSV per trace plus a manifest.
std::vector<std::string> run_generate(const RunConfig& cfg);

/// clean + slice over a trace set; outcomes collects the manifest entries.
std::vector<Window> make_windows(const RunConfig& cfg, const TraceSet& traces,
                                 std::vector<WindowOutcome>* outcomes = nullptr);

struct PipelineResult {
  MetricsReport test_metrics;
  ConfusionMatrix confusion;
  int n_windows = 0;
  int n_train = 0;
  int n_test = 0;
  std::vector<std::string> aggressive_top_features;  // tree models only
  std::string summary_path;
};

/// Full run: generate -> clean/slice -> featurize -> split -> train ->
/// evaluate -> explain -> recommend. Writes the results bundle into
/// cfg.out_dir; a stage failure aborts with the stage name prefixed to the
/// original error.
PipelineResult run_pipeline(const RunConfig& cfg);

/// Refuses to reuse a non-empty directory unless force is set.
void prepare_out_dir(const std::string& dir, bool force);

/// Median of every feature column; keyed by feature name.
std::map<std::string, double> feature_medians(const FeatureTable& table);

void write_medians_json(const std::map<std::string, double>& medians,
                        const std::string& path);
std::map<std::string, double> load_medians_json(const std::string& path);

}  // namespace drivestyle
