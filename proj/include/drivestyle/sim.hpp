#pragma once

#include <optional>
#include <string>
#include <vector>

#include "drivestyle/common.hpp"

namespace drivestyle {

/// Behavior parameters of one driving profile. The three shipped profiles
/// (cautious / normal / aggressive) differ in how close they track posted
/// limits, how hard they accelerate and brake, and how tightly they follow
/// a lead vehicle.
struct ProfileParams {
  int label = kNormal;
  double desired_speed_factor = 1.0;  // multiplier on the posted limit
  double max_accel = 2.5;             // m/s^2
  double comfort_decel = 3.0;         // m/s^2
  double min_gap = 2.5;               // m
  double time_headway = 1.4;          // s
  double steer_aggressiveness = 1.0;  // dimensionless >= 0
  double noise_scale = 0.10;          // dimensionless >= 0

  void validate() const;
};

/// The three default profiles, indexed by label.
std::vector<ProfileParams> default_profiles();

struct RoadSegment {
  double length = 0.0;       // m
  double speed_limit = 0.0;  // m/s
  double curvature = 0.0;    // 1/m, signed
};

struct LeadVehicleEvent {
  double start_time = 0.0;  // s
  double duration = 0.0;    // s
  double lead_speed = 0.0;  // m/s
};

/// A randomized 1-D road: ordered segments with posted limits and curvature,
/// plus a schedule of lead-vehicle encounters. The ego loops over the road
/// when a trace outlasts it.
struct RoadLayout {
  std::vector<RoadSegment> segments;
  std::vector<LeadVehicleEvent> lead_vehicle_events;
  double total_length() const;
  const RoadSegment& segment_at(double position) const;
};

/// One synchronous sensor reading. obstacle_distance is missing when no lead
/// vehicle is inside the 10.5 m sensor range.
struct SampleRecord {
  double t = 0.0;
  double accel_x = 0.0, accel_y = 0.0, accel_z = 0.0;  // m/s^2
  double gyro_x = 0.0, gyro_y = 0.0, gyro_z = 0.0;     // rad/s
  double speed = 0.0;                                  // m/s
  std::optional<double> obstacle_distance;             // m, in [0, 10.5]
  double speed_limit = 0.0;                            // m/s
  int label = 0;
};

/// Mutable state advanced by step_dynamics.
struct VehicleState {
  double t = 0.0;
  double position = 0.0;  // m along the road, wraps at total_length
  double speed = 0.0;     // m/s, >= 0
  double accel = 0.0;     // last applied longitudinal accel, m/s^2
  double yaw_rate = 0.0;  // rad/s
  double desired_speed_multiplier = 1.0;  // slow mean-reverting wander

  // Lead vehicle bookkeeping. lead_position is absolute (not wrapped).
  bool lead_active = false;
  double lead_position = 0.0;
  double lead_speed = 0.0;
  double unwrapped_position = 0.0;

  /// Actual gap to the lead vehicle, if one is active.
  std::optional<double> lead_gap() const;
  /// Distance reported by the obstacle sensor: the gap clipped to the sensor
  /// range, or exactly the max range when no lead is present.
  double sensor_distance() const;
};

/// Builds a deterministic road layout for a seed. Segments cover
/// total_length exactly and at least two distinct speed limits are present.
RoadLayout build_road(std::uint64_t seed, double total_length);

/// Advances the state by one 0.05 s step: IDM-style longitudinal control
/// toward the profile's desired speed, lead-vehicle following, curvature
/// induced yaw. Noise draws come from rng.
void step_dynamics(VehicleState& state, const ProfileParams& params,
                   const RoadLayout& road, double dt, Rng& rng);

/// Hard bound on the longitudinal acceleration noise added per step.
double accel_noise_bound(const ProfileParams& params);

/// Runs a full trace: floor(duration/0.05) records, all carrying
/// params.label. Deterministic for a fixed (params, duration, seed).
std::vector<SampleRecord> generate_trace(const ProfileParams& params,
                                         double duration_s,
                                         std::uint64_t seed);

/// Same, but over a caller-supplied road (used to compare profiles on
/// identical layouts).
std::vector<SampleRecord> generate_trace(const ProfileParams& params,
                                         double duration_s, std::uint64_t seed,
                                         const RoadLayout& road);

/// Writes records as CSV with the canonical column schema. Missing obstacle
/// distances become empty fields.
void export_trace(const std::vector<SampleRecord>& records,
                  const std::string& path);

/// The canonical trace CSV header.
extern const char* const kTraceCsvHeader;

}  // namespace drivestyle
