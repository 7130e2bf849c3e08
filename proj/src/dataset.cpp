#include "drivestyle/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace drivestyle {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

double parse_double(const std::string& s, int line_no, const char* col) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line_no) + ": bad value '" + s +
                     "' in column " + col);
  }
}

}  // namespace

std::vector<SampleRecord> load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_trace: cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw SchemaError("load_trace: empty file " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceCsvHeader)
    throw SchemaError("load_trace: unexpected header '" + line + "' in " + path);

  static const char* kCols[] = {"t",      "accel_x", "accel_y", "accel_z",
                                "gyro_x", "gyro_y",  "gyro_z",  "speed",
                                "obstacle_distance", "speed_limit", "label"};
  std::vector<SampleRecord> records;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 11)
      throw ParseError("line " + std::to_string(line_no) + ": expected 11 columns, got " +
                       std::to_string(fields.size()));
    SampleRecord r;
    r.t = parse_double(fields[0], line_no, kCols[0]);
    r.accel_x = parse_double(fields[1], line_no, kCols[1]);
    r.accel_y = parse_double(fields[2], line_no, kCols[2]);
    r.accel_z = parse_double(fields[3], line_no, kCols[3]);
    r.gyro_x = parse_double(fields[4], line_no, kCols[4]);
    r.gyro_y = parse_double(fields[5], line_no, kCols[5]);
    r.gyro_z = parse_double(fields[6], line_no, kCols[6]);
    r.speed = parse_double(fields[7], line_no, kCols[7]);
    if (!fields[8].empty())
      r.obstacle_distance = parse_double(fields[8], line_no, kCols[8]);
    r.speed_limit = parse_double(fields[9], line_no, kCols[9]);
    r.label = static_cast<int>(parse_double(fields[10], line_no, kCols[10]));
    records.push_back(r);
  }
  return records;
}

std::vector<SampleRecord> clean(const std::vector<SampleRecord>& records,
                                double warmup_s, double max_range) {
  const std::size_t drop =
      static_cast<std::size_t>(std::floor(warmup_s / kSampleDt));
  std::vector<SampleRecord> out;
  if (drop >= records.size()) return out;
  out.assign(records.begin() + drop, records.end());
  for (auto& r : out)
    if (!r.obstacle_distance) r.obstacle_distance = max_range;
  return out;
}

std::vector<Window> slice_windows(const std::vector<SampleRecord>& records,
                                  int window_len, double zero_tolerance,
                                  double stop_speed_eps,
                                  const std::string& source_id,
                                  std::vector<WindowOutcome>* outcomes) {
  if (window_len <= 0)
    throw std::invalid_argument("slice_windows: window_len must be positive");
  if (zero_tolerance < 0.0 || zero_tolerance > 1.0)
    throw std::invalid_argument("slice_windows: zero_tolerance must be in [0, 1]");

  std::vector<Window> windows;
  const std::size_t len = static_cast<std::size_t>(window_len);
  for (std::size_t start = 0; start + len <= records.size(); start += len) {
    Window w;
    w.records.assign(records.begin() + start, records.begin() + start + len);
    w.label = w.records.front().label;
    w.source_id = source_id;
    w.start_index = static_cast<int>(start);

    for (const auto& r : w.records)
      if (r.label != w.label)
        throw std::invalid_argument(
            "slice_windows: mixed labels inside one window of " + source_id);

    std::size_t stopped = 0;
    for (const auto& r : w.records)
      if (r.speed < stop_speed_eps) ++stopped;
    const double frac = static_cast<double>(stopped) / static_cast<double>(len);

    WindowOutcome outcome{source_id, w.start_index, w.label, false, ""};
    if (frac > zero_tolerance) {
      outcome.reason = "stoppage";
    } else {
      outcome.kept = true;
      outcome.reason = "kept";
      windows.push_back(std::move(w));
    }
    if (outcomes) outcomes->push_back(outcome);
  }
  return windows;
}

SplitIndices split(const std::vector<int>& labels, double ratio,
                   std::uint64_t seed) {
  if (ratio <= 0.0 || ratio >= 1.0)
    throw std::invalid_argument("split: ratio must be in (0, 1)");

  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i)
    by_class[labels[i]].push_back(i);
  for (const auto& [cls, idx] : by_class)
    if (idx.size() < 2)
      throw std::invalid_argument("split: class " + std::to_string(cls) +
                                  " has fewer than 2 items");

  SplitIndices out;
  out.seed = seed;
  out.ratio = ratio;
  for (auto& [cls, idx] : by_class) {
    Rng rng(derive_seed(seed, 0x59117ULL, static_cast<std::uint64_t>(cls)));
    // Fisher-Yates with our own bounded draws, for cross-platform stability.
    for (std::size_t i = idx.size() - 1; i > 0; --i) {
      std::size_t j = static_cast<std::size_t>(rng.below(i + 1));
      std::swap(idx[i], idx[j]);
    }
    std::size_t n_train = static_cast<std::size_t>(
        std::floor(ratio * static_cast<double>(idx.size()) + 0.5));
    n_train = std::clamp<std::size_t>(n_train, 1, idx.size() - 1);
    out.train.insert(out.train.end(), idx.begin(), idx.begin() + n_train);
    out.test.insert(out.test.end(), idx.begin() + n_train, idx.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

void write_windows_manifest(const std::vector<WindowOutcome>& outcomes,
                            const std::string& path) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& o : outcomes) {
    j.push_back({{"source_id", o.source_id},
                 {"start_index", o.start_index},
                 {"label", o.label},
                 {"kept", o.kept},
                 {"reason", o.reason}});
  }
  std::ofstream out(path);
  if (!out) throw IoError("write_windows_manifest: cannot open " + path);
  out << j.dump(2) << '\n';
}

}  // namespace drivestyle
