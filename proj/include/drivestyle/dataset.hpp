#pragma once

#include <string>
#include <vector>

#include "drivestyle/sim.hpp"

namespace drivestyle {

/// A fixed-length contiguous slice of one trace; the unit of classification.
/// All records share one label and carry no missing obstacle distances
/// (imputation happens in clean()).
struct Window {
  std::vector<SampleRecord> records;
  int label = 0;
  std::string source_id;
  int start_index = 0;
};

/// Why a candidate window was kept or dropped; serialized into the windows
/// manifest.
struct WindowOutcome {
  std::string source_id;
  int start_index = 0;
  int label = 0;
  bool kept = false;
  std::string reason;  // "kept", "stoppage", ...
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
  double ratio = 0.0;
};

/// Reads a trace CSV produced by export_trace. Empty obstacle fields load as
/// missing values. Malformed rows raise ParseError naming the line; a header
/// that does not match the canonical schema raises SchemaError.
std::vector<SampleRecord> load_trace(const std::string& path);

/// Drops the first floor(warmup_s/0.05) records and imputes every missing
/// obstacle distance with max_range.
std::vector<SampleRecord> clean(const std::vector<SampleRecord>& records,
                                double warmup_s = 2.0,
                                double max_range = kObstacleSensorRange);

/// Cuts consecutive non-overlapping windows of window_len records. The
/// trailing partial window is discarded, as is any window where the fraction
/// of near-stopped samples (speed < stop_speed_eps) exceeds zero_tolerance.
/// Outcomes, when given, receive one entry per candidate window.
std::vector<Window> slice_windows(const std::vector<SampleRecord>& records,
                                  int window_len = 600,
                                  double zero_tolerance = 0.9,
                                  double stop_speed_eps = 0.1,
                                  const std::string& source_id = "",
                                  std::vector<WindowOutcome>* outcomes = nullptr);

/// Stratified train/test split over item labels; deterministic per seed.
/// Every class keeps at least one item on each side.
SplitIndices split(const std::vector<int>& labels, double ratio,
                   std::uint64_t seed);

/// Writes the windows manifest JSON.
void write_windows_manifest(const std::vector<WindowOutcome>& outcomes,
                            const std::string& path);

}  // namespace drivestyle
