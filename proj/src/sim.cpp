#include "drivestyle/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace drivestyle {

namespace {

// Posted limits: 30 / 50 / 90 km/h in m/s.
constexpr double kLimits[] = {8.33, 13.89, 25.0};
constexpr int kNumLimits = 3;

// Lateral comfort limit used to bound curvature per segment.
constexpr double kMaxLateralAccel = 2.5;  // m/s^2
constexpr double kMaxCurvature = 0.05;    // 1/m

// Lead-vehicle schedule horizon. Traces longer than this reuse the schedule
// modulo the horizon.
constexpr double kEventHorizon = 7200.0;  // s

constexpr double kLeadSpawnGap = 30.0;  // m ahead of the ego on activation

double ou_relaxation_time(const ProfileParams& p) {
  // Impatient profiles re-target their desired speed faster.
  return std::max(4.0, 10.0 * p.time_headway);
}

double hard_brake_limit(const ProfileParams& p) {
  return std::min(2.5 * p.comfort_decel, 9.0);
}

}  // namespace

const char* const kTraceCsvHeader =
    "t,accel_x,accel_y,accel_z,gyro_x,gyro_y,gyro_z,speed,obstacle_distance,"
    "speed_limit,label";

void ProfileParams::validate() const {
  if (max_accel <= 0 || comfort_decel <= 0 || min_gap <= 0 || time_headway <= 0)
    throw std::invalid_argument(
        "profile: max_accel, comfort_decel, min_gap and time_headway must be positive");
  if (desired_speed_factor <= 0)
    throw std::invalid_argument("profile: desired_speed_factor must be positive");
  if (steer_aggressiveness < 0 || noise_scale < 0)
    throw std::invalid_argument(
        "profile: steer_aggressiveness and noise_scale must be non-negative");
}

std::vector<ProfileParams> default_profiles() {
  ProfileParams cautious{kCautious, 0.9, 1.5, 2.0, 4.0, 2.0, 0.5, 0.05};
  ProfileParams normal{kNormal, 1.0, 2.5, 3.0, 2.5, 1.4, 1.0, 0.10};
  ProfileParams aggressive{kAggressive, 1.3, 4.0, 6.0, 1.0, 0.7, 2.0, 0.20};
  return {cautious, normal, aggressive};
}

double RoadLayout::total_length() const {
  double sum = 0.0;
  for (const auto& s : segments) sum += s.length;
  return sum;
}

const RoadSegment& RoadLayout::segment_at(double position) const {
  double pos = std::fmod(position, total_length());
  if (pos < 0) pos += total_length();
  double acc = 0.0;
  for (const auto& s : segments) {
    acc += s.length;
    if (pos < acc) return s;
  }
  return segments.back();
}

RoadLayout build_road(std::uint64_t seed, double total_length) {
  if (total_length <= 0)
    throw std::invalid_argument("build_road: total_length must be positive");

  Rng rng(derive_seed(seed, 0x70ADULL));
  RoadLayout road;

  double covered = 0.0;
  int prev_limit = -1;
  while (covered < total_length) {
    RoadSegment seg;
    seg.length = rng.uniform(150.0, 600.0);
    if (covered + seg.length > total_length) seg.length = total_length - covered;

    // Never repeat the previous limit so window-sized stretches of road see
    // limit changes.
    int pick = static_cast<int>(rng.below(kNumLimits));
    if (pick == prev_limit) pick = (pick + 1) % kNumLimits;
    seg.speed_limit = kLimits[pick];
    prev_limit = pick;

    // Half the segments are straight; the rest curve within the lateral
    // comfort limit for the posted speed.
    double cap = std::min(kMaxCurvature,
                          kMaxLateralAccel / (seg.speed_limit * seg.speed_limit));
    if (rng.uniform() < 0.5) {
      seg.curvature = 0.0;
    } else {
      seg.curvature = rng.uniform(-cap, cap);
    }
    road.segments.push_back(seg);
    covered += seg.length;
  }

  // Guarantee at least two distinct limits even for very short roads.
  bool distinct = false;
  for (const auto& s : road.segments)
    if (s.speed_limit != road.segments.front().speed_limit) distinct = true;
  if (!distinct) {
    RoadSegment& last = road.segments.back();
    if (road.segments.size() == 1) {
      RoadSegment half = last;
      last.length /= 2.0;
      half.length = last.length;
      half.speed_limit = kLimits[(static_cast<int>(rng.below(kNumLimits - 1)) + 1 +
                                  prev_limit) % kNumLimits];
      if (half.speed_limit == last.speed_limit)
        half.speed_limit = kLimits[0] == last.speed_limit ? kLimits[1] : kLimits[0];
      road.segments.push_back(half);
    } else {
      last.speed_limit =
          kLimits[0] == last.speed_limit ? kLimits[1] : kLimits[0];
    }
  }

  // Lead-vehicle schedule: alternating free-flow and following periods.
  double t = rng.uniform(20.0, 60.0);
  while (t < kEventHorizon) {
    LeadVehicleEvent ev;
    ev.start_time = t;
    ev.duration = rng.uniform(20.0, 50.0);
    ev.lead_speed = rng.uniform(5.0, 18.0);
    road.lead_vehicle_events.push_back(ev);
    t += ev.duration + rng.uniform(40.0, 120.0);
  }
  return road;
}

std::optional<double> VehicleState::lead_gap() const {
  if (!lead_active) return std::nullopt;
  return lead_position - unwrapped_position;
}

double VehicleState::sensor_distance() const {
  auto gap = lead_gap();
  if (!gap || *gap > kObstacleSensorRange) return kObstacleSensorRange;
  return std::max(0.0, *gap);
}

double accel_noise_bound(const ProfileParams& params) {
  // Rng::normal() is truncated at 4 sigma, so this bound is hard.
  return 4.0 * 1.2 * params.noise_scale;
}

void step_dynamics(VehicleState& state, const ProfileParams& params,
                   const RoadLayout& road, double dt, Rng& rng) {
  const RoadSegment& seg = road.segment_at(state.position);

  // Desired-speed wander: mean-reverting multiplier with stationary spread
  // noise_scale and relaxation time tied to the profile's impatience.
  const double tau = ou_relaxation_time(params);
  double& m = state.desired_speed_multiplier;
  m += (1.0 - m) * (dt / tau) +
       params.noise_scale * std::sqrt(2.0 * dt / tau) * rng.normal();
  m = std::clamp(m, 0.3, 2.0);

  const double v = state.speed;
  const double v0 =
      std::max(0.5, params.desired_speed_factor * m * seg.speed_limit);

  // Lead-vehicle schedule, folded onto the horizon.
  const double sched_t = std::fmod(state.t, kEventHorizon);
  bool want_lead = false;
  double event_speed = 0.0;
  for (const auto& ev : road.lead_vehicle_events) {
    if (sched_t >= ev.start_time && sched_t < ev.start_time + ev.duration) {
      want_lead = true;
      event_speed = ev.lead_speed;
      break;
    }
  }
  if (want_lead && !state.lead_active) {
    state.lead_active = true;
    state.lead_position = state.unwrapped_position + kLeadSpawnGap;
    state.lead_speed = event_speed;
  } else if (!want_lead) {
    state.lead_active = false;
  }

  // IDM acceleration toward v0, with interaction term when following.
  double accel = params.max_accel * (1.0 - std::pow(v / v0, 4.0));
  if (state.lead_active) {
    const double gap = std::max(0.1, state.lead_position - state.unwrapped_position);
    const double dv = v - state.lead_speed;
    const double s_star =
        params.min_gap + v * params.time_headway +
        v * dv / (2.0 * std::sqrt(params.max_accel * params.comfort_decel));
    accel -= params.max_accel * (std::max(0.0, s_star) / gap) *
             (std::max(0.0, s_star) / gap);
  }
  accel = std::clamp(accel, -hard_brake_limit(params), params.max_accel);
  accel += 1.2 * params.noise_scale * rng.normal();

  double new_speed = std::max(0.0, v + accel * dt);

  // Emergency backstop: never overlap the lead vehicle.
  if (state.lead_active) {
    state.lead_position += state.lead_speed * dt;
    const double gap_after = state.lead_position -
                             (state.unwrapped_position + new_speed * dt);
    if (gap_after < 0.2) new_speed = std::max(0.0, state.lead_speed);
  }

  state.accel = (new_speed - v) / dt;  // effective accel after the >=0 clamp
  state.speed = new_speed;
  state.unwrapped_position += new_speed * dt;
  state.position = std::fmod(state.unwrapped_position, road.total_length());
  state.yaw_rate = seg.curvature * new_speed *
                   (1.0 + params.steer_aggressiveness * params.noise_scale *
                              rng.normal());
  state.t += dt;
}

std::vector<SampleRecord> generate_trace(const ProfileParams& params,
                                         double duration_s,
                                         std::uint64_t seed) {
  RoadLayout road = build_road(derive_seed(seed, 0x0DDULL), 5000.0);
  return generate_trace(params, duration_s, seed, road);
}

std::vector<SampleRecord> generate_trace(const ProfileParams& params,
                                         double duration_s, std::uint64_t seed,
                                         const RoadLayout& road) {
  params.validate();
  if (duration_s < 60.0)
    throw std::invalid_argument("generate_trace: duration must be >= 60 s");

  const std::size_t n = static_cast<std::size_t>(duration_s / kSampleDt);
  Rng rng(derive_seed(seed, 0x5A3DULL, static_cast<std::uint64_t>(params.label)));

  VehicleState state;
  state.desired_speed_multiplier = 1.0;

  std::vector<SampleRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    step_dynamics(state, params, road, kSampleDt, rng);
    const RoadSegment& seg = road.segment_at(state.position);

    SampleRecord rec;
    rec.t = static_cast<double>(i + 1) * kSampleDt;
    rec.accel_x = state.accel;
    rec.accel_y = seg.curvature * state.speed * state.speed +
                  (0.1 + 0.2 * params.noise_scale) * rng.normal();
    rec.accel_z = 0.12 * (1.0 + 0.5 * params.noise_scale) * rng.normal();
    rec.gyro_x = 0.02 * (1.0 + params.noise_scale) * rng.normal();
    rec.gyro_y = 0.02 * (1.0 + params.noise_scale) * rng.normal();
    rec.gyro_z = state.yaw_rate + 0.01 * rng.normal();
    rec.speed = state.speed;
    auto gap = state.lead_gap();
    if (gap && *gap <= kObstacleSensorRange)
      rec.obstacle_distance = std::max(0.0, *gap);
    rec.speed_limit = seg.speed_limit;
    rec.label = params.label;
    out.push_back(rec);
  }
  return out;
}

namespace {

void append_double(std::string& line, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  line += buf;
}

}  // namespace

void export_trace(const std::vector<SampleRecord>& records,
                  const std::string& path) {
  if (records.empty())
    throw std::invalid_argument("export_trace: record list is empty");

  std::ofstream out(path);
  if (!out) throw IoError("export_trace: cannot open " + path);

  out << kTraceCsvHeader << '\n';
  std::string line;
  for (const auto& r : records) {
    line.clear();
    append_double(line, r.t);
    line += ',';
    append_double(line, r.accel_x);
    line += ',';
    append_double(line, r.accel_y);
    line += ',';
    append_double(line, r.accel_z);
    line += ',';
    append_double(line, r.gyro_x);
    line += ',';
    append_double(line, r.gyro_y);
    line += ',';
    append_double(line, r.gyro_z);
    line += ',';
    append_double(line, r.speed);
    line += ',';
    if (r.obstacle_distance) append_double(line, *r.obstacle_distance);
    line += ',';
    append_double(line, r.speed_limit);
    line += ',';
    line += std::to_string(r.label);
    out << line << '\n';
  }
  if (!out) throw IoError("export_trace: write failed for " + path);
}

}  // namespace drivestyle
