#include "drivestyle/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace drivestyle {

std::vector<std::string> FeatureConfig::feature_names() const {
  std::vector<std::string> names;
  names.reserve(size());
  for (const auto& e : entries) names.push_back(e.name);
  if (has_overspeed_count) names.push_back("overspeed_count");
  return names;
}

std::size_t FeatureConfig::size() const {
  return entries.size() + (has_overspeed_count ? 1 : 0);
}

double transform(const std::vector<double>& series, Transform kind) {
  if (series.empty())
    throw std::invalid_argument("transform: series is empty");
  const double n = static_cast<double>(series.size());
  switch (kind) {
    case Transform::kMean: {
      double sum = 0.0;
      for (double x : series) sum += x;
      return sum / n;
    }
    case Transform::kVariance: {
      double mu = transform(series, Transform::kMean);
      double acc = 0.0;
      for (double x : series) acc += (x - mu) * (x - mu);
      return acc / n;
    }
    case Transform::kStdDev:
      return std::sqrt(transform(series, Transform::kVariance));
    case Transform::kRange: {
      auto [lo, hi] = std::minmax_element(series.begin(), series.end());
      return *hi - *lo;
    }
    case Transform::kFirst:
      return series.front();
    case Transform::kMeanPositive: {
      double sum = 0.0;
      for (double x : series) sum += std::max(x, 0.0);
      return sum / n;
    }
    case Transform::kMeanNegative: {
      double sum = 0.0;
      for (double x : series) sum += std::max(-x, 0.0);
      return sum / n;
    }
    case Transform::kFirstDerivative:
      // Mean of consecutive differences; 0 for a single sample.
      if (series.size() == 1) return 0.0;
      return (series.back() - series.front()) / (n - 1.0);
  }
  throw std::invalid_argument("transform: unknown kind");
}

int overspeed_count(const std::vector<double>& speed,
                    const std::vector<double>& limit) {
  if (speed.size() != limit.size())
    throw std::invalid_argument("overspeed_count: series length mismatch");
  int episodes = 0;
  for (std::size_t i = 0; i < speed.size(); ++i) {
    const bool over = speed[i] > limit[i];
    const bool prev_over = i > 0 && speed[i - 1] > limit[i - 1];
    if (over && !prev_over) ++episodes;
  }
  return episodes;
}

int overspeed_sample_count(const std::vector<double>& speed,
                           const std::vector<double>& limit) {
  if (speed.size() != limit.size())
    throw std::invalid_argument("overspeed_sample_count: series length mismatch");
  int count = 0;
  for (std::size_t i = 0; i < speed.size(); ++i)
    if (speed[i] > limit[i]) ++count;
  return count;
}

void split_accel_brake(const std::vector<double>& axis,
                       std::vector<double>& accel_out,
                       std::vector<double>& brake_out) {
  accel_out.resize(axis.size());
  brake_out.resize(axis.size());
  for (std::size_t i = 0; i < axis.size(); ++i) {
    accel_out[i] = std::max(axis[i], 0.0);
    brake_out[i] = std::max(-axis[i], 0.0);
  }
}

FeatureConfig feature_config(const std::string& name) {
  FeatureConfig cfg;
  cfg.name = name;
  if (name == "config1") {
    cfg.entries = {
        {"distance", Channel::kObstacleDistance, Transform::kMean},
        {"speed", Channel::kSpeed, Transform::kMean},
        {"accel_x", Channel::kAccelX, Transform::kStdDev},
        {"accel_y", Channel::kAccelY, Transform::kStdDev},
        {"accel_z", Channel::kAccelZ, Transform::kStdDev},
        {"gyro_x", Channel::kGyroX, Transform::kStdDev},
        {"gyro_y", Channel::kGyroY, Transform::kStdDev},
        {"gyro_z", Channel::kGyroZ, Transform::kStdDev},
        {"speed_limit", Channel::kSpeedLimit, Transform::kFirst},
    };
  } else if (name == "config2") {
    cfg.entries = {
        {"distance", Channel::kObstacleDistance, Transform::kMean},
        {"speed", Channel::kSpeed, Transform::kMean},
        {"accel_x", Channel::kAccelX, Transform::kVariance},
        {"accel_y", Channel::kAccelY, Transform::kVariance},
        {"accel_z", Channel::kAccelZ, Transform::kVariance},
        {"gyro_x", Channel::kGyroX, Transform::kVariance},
        {"gyro_y", Channel::kGyroY, Transform::kVariance},
        {"gyro_z", Channel::kGyroZ, Transform::kVariance},
    };
    cfg.has_overspeed_count = true;
  } else if (name == "config3") {
    cfg.entries = {
        {"distance", Channel::kObstacleDistance, Transform::kRange},
        {"speed", Channel::kSpeed, Transform::kRange},
        {"accel_x", Channel::kAccelX, Transform::kMeanPositive},
        {"accel_y", Channel::kAccelY, Transform::kMeanPositive},
        {"accel_z", Channel::kAccelZ, Transform::kMeanPositive},
        {"brake_x", Channel::kAccelX, Transform::kMeanNegative},
        {"brake_y", Channel::kAccelY, Transform::kMeanNegative},
        {"brake_z", Channel::kAccelZ, Transform::kMeanNegative},
        {"gyro_x", Channel::kGyroX, Transform::kVariance},
        {"gyro_y", Channel::kGyroY, Transform::kVariance},
        {"gyro_z", Channel::kGyroZ, Transform::kVariance},
    };
    cfg.has_overspeed_count = true;
  } else {
    throw std::invalid_argument("feature_config: unknown config '" + name + "'");
  }
  return cfg;
}

std::vector<std::string> feature_config_names() {
  return {"config1", "config2", "config3"};
}

std::vector<double> channel_series(const Window& window, Channel channel) {
  std::vector<double> s;
  s.reserve(window.records.size());
  for (const auto& r : window.records) {
    switch (channel) {
      case Channel::kAccelX: s.push_back(r.accel_x); break;
      case Channel::kAccelY: s.push_back(r.accel_y); break;
      case Channel::kAccelZ: s.push_back(r.accel_z); break;
      case Channel::kGyroX: s.push_back(r.gyro_x); break;
      case Channel::kGyroY: s.push_back(r.gyro_y); break;
      case Channel::kGyroZ: s.push_back(r.gyro_z); break;
      case Channel::kSpeed: s.push_back(r.speed); break;
      case Channel::kObstacleDistance:
        if (!r.obstacle_distance)
          throw std::invalid_argument(
              "channel_series: missing obstacle distance (window not cleaned)");
        s.push_back(*r.obstacle_distance);
        break;
      case Channel::kSpeedLimit: s.push_back(r.speed_limit); break;
    }
  }
  return s;
}

FeatureVector featurize(const Window& window, const FeatureConfig& config) {
  if (window.records.empty())
    throw std::invalid_argument("featurize: empty window");

  FeatureVector fv;
  fv.label = window.label;
  fv.source_id = window.source_id;
  fv.start_index = window.start_index;
  fv.values.reserve(config.size());
  for (const auto& entry : config.entries) {
    const double v = transform(channel_series(window, entry.channel),
                               entry.transform);
    if (!std::isfinite(v))
      throw FeasibilityError("featurize: non-finite feature " + entry.name);
    fv.values.push_back(v);
  }
  if (config.has_overspeed_count) {
    auto speed = channel_series(window, Channel::kSpeed);
    auto limit = channel_series(window, Channel::kSpeedLimit);
    fv.values.push_back(static_cast<double>(
        config.overspeed_per_sample ? overspeed_sample_count(speed, limit)
                                    : overspeed_count(speed, limit)));
  }
  return fv;
}

FeatureTable featurize_all(const std::vector<Window>& windows,
                           const FeatureConfig& config) {
  FeatureTable table;
  table.feature_names = config.feature_names();
  table.rows.reserve(windows.size());
  for (const auto& w : windows) table.rows.push_back(featurize(w, config));
  return table;
}

std::vector<int> FeatureTable::labels() const {
  std::vector<int> y;
  y.reserve(rows.size());
  for (const auto& r : rows) y.push_back(r.label);
  return y;
}

void export_features(const FeatureTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("export_features: cannot open " + path);
  for (std::size_t i = 0; i < table.feature_names.size(); ++i)
    out << table.feature_names[i] << ',';
  out << "label\n";
  char buf[40];
  for (const auto& row : table.rows) {
    for (double v : row.values) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << buf << ',';
    }
    out << row.label << '\n';
  }
  if (!out) throw IoError("export_features: write failed for " + path);
}

FeatureTable load_features(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_features: cannot open " + path);

  std::string line;
  if (!std::getline(in, line))
    throw SchemaError("load_features: empty file " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  FeatureTable table;
  {
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) table.feature_names.push_back(col);
    if (table.feature_names.empty() || table.feature_names.back() != "label")
      throw SchemaError("load_features: last column must be 'label'");
    table.feature_names.pop_back();
  }

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    FeatureVector row;
    while (std::getline(ss, field, ',')) {
      try {
        row.values.push_back(std::stod(field));
      } catch (const std::exception&) {
        throw ParseError("load_features: line " + std::to_string(line_no) +
                         ": bad value '" + field + "'");
      }
    }
    if (row.values.size() != table.feature_names.size() + 1)
      throw ParseError("load_features: line " + std::to_string(line_no) +
                       ": wrong column count");
    row.label = static_cast<int>(row.values.back());
    row.values.pop_back();
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace drivestyle
