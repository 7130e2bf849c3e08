#pragma once

#include <string>
#include <vector>

#include "drivestyle/dataset.hpp"

namespace drivestyle {

enum class Channel {
  kAccelX,
  kAccelY,
  kAccelZ,
  kGyroX,
  kGyroY,
  kGyroZ,
  kSpeed,
  kObstacleDistance,
  kSpeedLimit,
};

/// Scalar reductions over one channel series. kFirstDerivative is exposed for
/// completeness but used by none of the shipped configurations.
enum class Transform {
  kMean,
  kVariance,   // population variance
  kStdDev,
  kRange,
  kFirst,
  kMeanPositive,  // mean of max(x, 0) over the full series
  kMeanNegative,  // mean of max(-x, 0) over the full series
  kFirstDerivative,
};

struct FeatureEntry {
  std::string name;
  Channel channel;
  Transform transform;
};

/// A named, ordered mapping from channels to transforms. overspeed_count is
/// handled as a dedicated event-based entry (has_overspeed_count) since it
/// reads two channels at once.
struct FeatureConfig {
  std::string name;
  std::vector<FeatureEntry> entries;
  bool has_overspeed_count = false;
  /// When true, overspeed_count counts samples above the limit instead of
  /// rising-edge episodes.
  bool overspeed_per_sample = false;

  std::vector<std::string> feature_names() const;
  std::size_t size() const;
};

struct FeatureVector {
  std::vector<double> values;
  int label = 0;
  std::string source_id;
  int start_index = 0;
};

/// A full feature matrix with its column names; what models consume.
struct FeatureTable {
  std::vector<std::string> feature_names;
  std::vector<FeatureVector> rows;

  std::vector<int> labels() const;
  std::size_t dim() const { return feature_names.size(); }
};

/// Scalar statistical reduction of a non-empty series.
double transform(const std::vector<double>& series, Transform kind);

/// Number of rising-edge overspeed episodes: indices i with
/// speed[i] > limit[i] and (i == 0 or speed[i-1] <= limit[i-1]).
int overspeed_count(const std::vector<double>& speed,
                    const std::vector<double>& limit);

/// Per-sample variant: counts every index with speed[i] > limit[i].
int overspeed_sample_count(const std::vector<double>& speed,
                           const std::vector<double>& limit);

/// Splits a signed axis into non-negative acceleration and braking series.
void split_accel_brake(const std::vector<double>& axis,
                       std::vector<double>& accel_out,
                       std::vector<double>& brake_out);

/// The three shipped configurations (9 / 9 / 12 features).
FeatureConfig feature_config(const std::string& name);
std::vector<std::string> feature_config_names();

/// Extracts the channel series from a window.
std::vector<double> channel_series(const Window& window, Channel channel);

FeatureVector featurize(const Window& window, const FeatureConfig& config);
FeatureTable featurize_all(const std::vector<Window>& windows,
                           const FeatureConfig& config);

/// Feature matrix CSV: header = feature names + "label".
void export_features(const FeatureTable& table, const std::string& path);
FeatureTable load_features(const std::string& path);

}  // namespace drivestyle
