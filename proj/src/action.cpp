#include "moec/action.hpp"

#include <algorithm>
#include <cmath>

#include "moec/env.hpp"

namespace moec::action {

double lateral_offset(Option o, double lane_width) {
  switch (o) {
    case Option::kLeftLaneChange: return -lane_width;
    case Option::kLaneKeep: return 0.0;
    case Option::kRightLaneChange: return lane_width;
  }
  return 0.0;
}

ActionBounds bounds_for(double speed_x, double lane_width,
                        const BoundsConfig& cfg) {
  const double w = lane_width;
  const double radicand = 4.0 * cfg.turn_radius_min * w - w * w;
  if (radicand <= 0.0)
    throw ConfigError("bounds_for: turn radius too small for lane width");
  const double curve_term = std::sqrt(radicand);
  const double brake_term = speed_x * speed_x / (2.0 * cfg.brake_max);
  ActionBounds b;
  b.l_min = std::min(curve_term, brake_term);
  const double expo = std::abs(speed_x) + w;
  b.l_max = expo > std::log(cfg.l_cap) ? cfg.l_cap : std::exp(expo);
  if (b.l_max <= b.l_min) b.l_max = b.l_min + 1.0;
  b.acc_min = -cfg.acc_limit;
  b.acc_max = cfg.acc_limit;
  return b;
}

double GuidingPath::y_at(double x) const {
  const double xi = saturate((x - x_start) / length, 0.0, 1.0);
  double y = 0.0;
  for (int m = 5; m >= 0; --m) y = y * xi + c[static_cast<std::size_t>(m)];
  return y;
}

double GuidingPath::slope_at(double x) const {
  const double xi = saturate((x - x_start) / length, 0.0, 1.0);
  double d = 0.0;
  for (int m = 5; m >= 1; --m) d = d * xi + m * c[static_cast<std::size_t>(m)];
  return d / length;
}

double GuidingPath::curvature_at(double x) const {
  const double xi = saturate((x - x_start) / length, 0.0, 1.0);
  double d2 = 0.0;
  for (int m = 5; m >= 2; --m)
    d2 = d2 * xi + m * (m - 1) * c[static_cast<std::size_t>(m)];
  return d2 / (length * length);
}

std::array<double, 6> GuidingPath::coefficients() const {
  std::array<double, 6> g{};
  double scale = 1.0;
  for (int m = 0; m <= 5; ++m) {
    g[static_cast<std::size_t>(m)] = c[static_cast<std::size_t>(m)] * scale;
    scale /= length;
  }
  return g;
}

GuidingPath build_path(const env::VehicleState& ev, Option option, double length,
                       const env::RoadSpec& road, const PathConfig& cfg) {
  double l = length;
  if (l < cfg.min_length) l = cfg.min_length;

  const double y0 = ev.y;
  // Start slope in road coordinates; keep it finite near +-pi/2.
  const double heading = saturate(ev.heading, -1.2, 1.2);
  const double slope0 = std::tan(heading);
  const double y_end =
      road.lane_center(ev.lane_id) + lateral_offset(option, road.lane_width);

  // Quintic in xi = (x - x0)/l with y(0)=y0, y'(0)=slope0*l, y''(0)=0,
  // y(1)=y_end, y'(1)=0, y''(1)=0 (primes w.r.t. xi). The first three pin
  // c0..c2; the remaining 3x3 system has a closed-form solution.
  GuidingPath p;
  p.x_start = ev.x;
  p.length = l;
  p.y_end = y_end;
  const double s = slope0 * l;  // dy/dxi at 0
  const double dy = y_end - y0;
  p.c[0] = y0;
  p.c[1] = s;
  p.c[2] = 0.0;
  p.c[3] = 10.0 * dy - 6.0 * s;
  p.c[4] = -15.0 * dy + 8.0 * s;
  p.c[5] = 6.0 * dy - 3.0 * s;

  const int hp = std::max(1, cfg.horizon_points);
  p.sample_x.resize(static_cast<std::size_t>(hp));
  p.sample_y.resize(static_cast<std::size_t>(hp));
  for (int h = 1; h <= hp; ++h) {
    const double x = ev.x + l * static_cast<double>(h) / hp;
    p.sample_x[static_cast<std::size_t>(h - 1)] = x;
    p.sample_y[static_cast<std::size_t>(h - 1)] = p.y_at(x);
  }
  return p;
}

double stanley_steer(const env::VehicleState& ev, const GuidingPath& path,
                     const StanleyConfig& cfg) {
  if (path.length <= 0.0) return 0.0;
  // Probe at the front axle; with paths rebuilt from the current pose every
  // step the rear axle sits on the path and carries no error signal.
  const double xf = ev.x + cfg.wheelbase * std::cos(ev.heading);
  const double yf = ev.y + cfg.wheelbase * std::sin(ev.heading);
  const double path_heading = std::atan(path.slope_at(xf));
  const double heading_error = path_heading - ev.heading;
  const double cross_track = path.y_at(xf) - yf;
  const double v = std::max(0.0, ev.vx);
  const double steer =
      heading_error + std::atan(cfg.gain * cross_track / (v + cfg.speed_soft));
  return saturate(steer, -cfg.steer_max, cfg.steer_max);
}

double pid_steer(const env::VehicleState& ev, double target_lane_center,
                 const PidConfig& cfg) {
  const double e = ev.y - target_lane_center;
  const double steer = -(cfg.k_p * e + cfg.k_d * ev.vy + cfg.k_heading * ev.heading);
  return saturate(steer, -cfg.steer_max, cfg.steer_max);
}

Option legalize(Option o, int lane_id, int lane_count) {
  if (o == Option::kLeftLaneChange && lane_id <= 0) return Option::kLaneKeep;
  if (o == Option::kRightLaneChange && lane_id >= lane_count - 1)
    return Option::kLaneKeep;
  return o;
}

std::string path_dump_csv(const GuidingPath& path) {
  std::string out = "x,y\n";
  for (std::size_t i = 0; i < path.sample_x.size(); ++i)
    out += fmt_double(path.sample_x[i]) + "," + fmt_double(path.sample_y[i]) + "\n";
  out += "# gamma:";
  for (double g : path.coefficients()) out += " " + fmt_double(g);
  out += "\n";
  return out;
}

}  // namespace moec::action
