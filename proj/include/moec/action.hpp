#pragma once

#include <array>
#include <vector>

#include "moec/common.hpp"

namespace moec::env {
struct VehicleState;
struct RoadSpec;
}  // namespace moec::env

namespace moec::action {

// Discrete option set; lateral endpoint offsets are -w_r / 0 / +w_r.
enum class Option : int { kLeftLaneChange = 0, kLaneKeep = 1, kRightLaneChange = 2 };
constexpr int kNumOptions = 3;

constexpr const char* option_name(Option o) {
  switch (o) {
    case Option::kLeftLaneChange: return "LLC";
    case Option::kLaneKeep: return "LK";
    case Option::kRightLaneChange: return "RLC";
  }
  return "?";
}

// Lateral endpoint offset b for an option, in units of the lane width.
double lateral_offset(Option o, double lane_width);

struct ActionBounds {
  double l_min = 0.0;
  double l_max = 150.0;
  double acc_min = -3.0;
  double acc_max = 3.0;
};

struct HybridAction {
  Option option = Option::kLaneKeep;
  double path_length = 0.0;  // l, m
  double accel = 0.0;        // m/s^2
};

struct BoundsConfig {
  double turn_radius_min = 6.4;  // R0, m
  double brake_max = 3.0;        // acc^-_max, m/s^2
  double l_cap = 150.0;          // clamp on the exponential upper bound, m
  double acc_limit = 3.0;        // |acc| range, m/s^2
};

// Path-length range from the kinematic feasibility / braking-distance bound,
// l in [min(sqrt(4*R0*w - w^2), v^2 / (2*brake)), e^{|v| + w}], with the
// upper end clamped to l_cap and widened if the clamp makes it degenerate.
ActionBounds bounds_for(double speed_x, double lane_width,
                        const BoundsConfig& cfg);

// Quintic guiding path y(x) over x in [x_start, x_start + length]. The
// polynomial is stored in the normalized coordinate xi = (x - x_start) /
// length; coefficients() converts to the plain powers-of-(x - x_start) form.
struct GuidingPath {
  double x_start = 0.0;
  double length = 0.0;
  double y_end = 0.0;
  std::array<double, 6> c{};  // y = sum c_m * xi^m
  std::vector<double> sample_x, sample_y;

  double y_at(double x) const;
  double slope_at(double x) const;      // dy/dx
  double curvature_at(double x) const;  // d2y/dx2
  std::array<double, 6> coefficients() const;
};

struct PathConfig {
  int horizon_points = 30;  // H_p
  double min_length = 2.0;  // executed paths shorter than this are widened
};

// Boundary conditions: position and heading of the start pose, endpoint at
// the current lane center plus the option offset, road-aligned heading and
// zero curvature at both ends.
GuidingPath build_path(const env::VehicleState& ev, Option option, double length,
                       const env::RoadSpec& road, const PathConfig& cfg);

struct StanleyConfig {
  double gain = 1.0;        // k_e
  double speed_soft = 1.0;  // m/s added to v in the denominator
  double wheelbase = 2.7;   // m, front-axle probe distance
  double steer_max = 0.6;   // rad
};

// Front-axle Stanley law: heading error plus atan of the normalized
// cross-track error, clamped to +-steer_max.
double stanley_steer(const env::VehicleState& ev, const GuidingPath& path,
                     const StanleyConfig& cfg);

struct PidConfig {
  double k_p = 0.1;      // 1/m
  double k_d = 0.4;      // s/m
  double k_heading = 1.0;
  double steer_max = 0.6;
};

// Lateral PD + heading hold toward a lane center (DA-Mo fallback).
double pid_steer(const env::VehicleState& ev, double target_lane_center,
                 const PidConfig& cfg);

// Lane changes out of the edge lanes are executed as lane keeping; the chosen
// option is preserved by the caller for learning.
Option legalize(Option o, int lane_id, int lane_count);

// Debug dump: sampled points then one coefficient row.
std::string path_dump_csv(const GuidingPath& path);

}  // namespace moec::action
