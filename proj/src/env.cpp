#include "moec/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace moec::env {

namespace {
constexpr double kNearWindow = 12.0;  // m, SAT prefilter in x
}

int RoadSpec::lane_at(double y) const {
  const int lane = static_cast<int>(std::floor(y / lane_width));
  return std::clamp(lane, 0, lane_count - 1);
}

void RoadSpec::validate() const {
  if (lane_count < 2) throw ConfigError("road: lane_count must be >= 2");
  if (!(lane_width > 0.0)) throw ConfigError("road: lane_width must be > 0");
  if (!(length > 0.0)) throw ConfigError("road: length must be > 0");
}

void EnvConfig::validate() const {
  road.validate();
  if (!(dt > 0.0)) throw ConfigError("env: dt must be > 0");
  if (density < 0.0 || density >= 1.0)
    throw ConfigError("env: density must be in [0,1)");
  if (!(episode_cap_s > 0.0)) throw ConfigError("env: episode cap must be > 0");
}

double longitudinal_diff(double a, double b, const RoadSpec& road) {
  double d = a - b;
  if (road.ring) {
    const double l = road.length;
    d = std::fmod(d, l);
    if (d < -l / 2.0) d += l;
    if (d >= l / 2.0) d -= l;
  }
  return d;
}

namespace {

double wrap_x(double x, const RoadSpec& road) {
  if (!road.ring) return x;
  double w = std::fmod(x, road.length);
  if (w < 0.0) w += road.length;
  return w;
}

// Projection radius of an oriented rectangle onto a unit axis.
double proj_radius(double hl, double hw, double heading, double ux, double uy) {
  const double c = std::cos(heading), s = std::sin(heading);
  return hl * std::abs(ux * c + uy * s) + hw * std::abs(-ux * s + uy * c);
}

}  // namespace

bool rectangles_collide(const VehicleState& a, const VehicleState& b,
                        const RoadSpec& road) {
  const double dx = longitudinal_diff(b.x, a.x, road);
  const double dy = b.y - a.y;
  const double axes[4][2] = {
      {std::cos(a.heading), std::sin(a.heading)},
      {-std::sin(a.heading), std::cos(a.heading)},
      {std::cos(b.heading), std::sin(b.heading)},
      {-std::sin(b.heading), std::cos(b.heading)},
  };
  for (const auto& ax : axes) {
    const double ra = proj_radius(a.length / 2, a.width / 2, a.heading, ax[0], ax[1]);
    const double rb = proj_radius(b.length / 2, b.width / 2, b.heading, ax[0], ax[1]);
    const double dist = std::abs(dx * ax[0] + dy * ax[1]);
    if (dist > ra + rb) return false;
  }
  return true;
}

EgoObservation extract_observation(const VehicleState& ego,
                                   std::span<const VehicleState> svs,
                                   std::span<const double> sv_accels,
                                   const RoadSpec& road, double obs_back,
                                   double obs_fwd,
                                   std::array<double, 6>* slot_accels) {
  EgoObservation obs;
  obs.v[0] = ego.lane_id;
  obs.v[1] = ego.x;
  obs.v[2] = ego.y;
  obs.v[3] = ego.heading;
  obs.v[4] = ego.vx;
  obs.v[5] = ego.vy;
  if (slot_accels) slot_accels->fill(0.0);

  // Slot order: current lead/follow, left lead/follow, right lead/follow.
  const int lanes[3] = {ego.lane_id, ego.lane_id - 1, ego.lane_id + 1};
  for (int li = 0; li < 3; ++li) {
    const int lane = lanes[li];
    if (lane < 0 || lane >= road.lane_count) continue;
    int best_lead = -1, best_follow = -1;
    double lead_dx = std::numeric_limits<double>::max();
    double follow_dx = -std::numeric_limits<double>::max();
    for (std::size_t k = 0; k < svs.size(); ++k) {
      if (svs[k].lane_id != lane) continue;
      const double dx = longitudinal_diff(svs[k].x, ego.x, road);
      if (dx < -obs_back || dx > obs_fwd) continue;
      if (dx > 0.0 && dx < lead_dx) {
        lead_dx = dx;
        best_lead = static_cast<int>(k);
      } else if (dx <= 0.0 && dx > follow_dx) {
        follow_dx = dx;
        best_follow = static_cast<int>(k);
      }
    }
    const int pairs[2] = {best_lead, best_follow};
    for (int p = 0; p < 2; ++p) {
      const int slot = 2 * li + p;
      const int k = pairs[p];
      if (k < 0) continue;
      double* blk = obs.v.data() + 6 + 6 * slot;
      blk[0] = 1.0;
      blk[1] = longitudinal_diff(svs[static_cast<std::size_t>(k)].x, ego.x, road);
      blk[2] = svs[static_cast<std::size_t>(k)].y - ego.y;
      blk[3] = svs[static_cast<std::size_t>(k)].heading;
      blk[4] = svs[static_cast<std::size_t>(k)].vx - ego.vx;
      blk[5] = svs[static_cast<std::size_t>(k)].vy - ego.vy;
      if (slot_accels && static_cast<std::size_t>(k) < sv_accels.size())
        (*slot_accels)[static_cast<std::size_t>(slot)] = sv_accels[static_cast<std::size_t>(k)];
    }
  }
  return obs;
}

double ttc_same_lane_leader(const VehicleState& ego,
                            std::span<const VehicleState> svs,
                            const RoadSpec& road, double t_max) {
  int best = -1;
  double best_dx = std::numeric_limits<double>::max();
  for (std::size_t k = 0; k < svs.size(); ++k) {
    if (svs[k].lane_id != ego.lane_id) continue;
    const double dx = longitudinal_diff(svs[k].x, ego.x, road);
    if (dx > 0.0 && dx < best_dx) {
      best_dx = dx;
      best = static_cast<int>(k);
    }
  }
  if (best < 0) return t_max;
  const VehicleState& lead = svs[static_cast<std::size_t>(best)];
  const double gap = best_dx - (lead.length + ego.length) / 2.0;
  if (gap <= 0.0) return 0.0;
  const double closing = ego.vx - lead.vx;
  if (closing <= 0.0) return t_max;
  return saturate(gap / closing, 0.0, t_max);
}

HighwayEnv::HighwayEnv(EnvConfig cfg) : cfg_(std::move(cfg)), rng_(0) {
  cfg_.validate();
}

EgoObservation HighwayEnv::reset(std::uint64_t seed) {
  return reset(seed, cfg_.density);
}

EgoObservation HighwayEnv::reset(std::uint64_t seed, double density) {
  if (density < 0.0 || density >= 1.0)
    throw ConfigError("reset: density must be in [0,1)");
  rng_ = Rng(seed);
  elapsed_ = 0.0;
  sv_collision_seen_ = false;
  last_controls_ = {};
  svs_.clear();

  ego_ = VehicleState{};
  ego_.length = cfg_.vehicle.length;
  ego_.width = cfg_.vehicle.width;
  if (cfg_.ego_enabled) {
    ego_.lane_id = static_cast<int>(rng_.uniform_int(static_cast<std::uint64_t>(cfg_.road.lane_count)));
    ego_.x = 0.0;
    ego_.y = cfg_.road.lane_center(ego_.lane_id);
    ego_speed_ = rng_.uniform(cfg_.idm.v0_min, cfg_.idm.v0_max);
    ego_.vx = ego_speed_;
  } else {
    ego_speed_ = 0.0;
  }
  place_traffic(density);
  return observe();
}

void HighwayEnv::place_traffic(double density) {
  // V/C maps to a vehicle count scaled so 0.5 puts ~25 vehicles on a
  // three-lane kilometre.
  const int count = static_cast<int>(std::lround(
      density * cfg_.road.lane_count * (cfg_.road.length / 1000.0) * (50.0 / 3.0)));
  const double margin =
      cfg_.idm.min_gap + 0.5 * cfg_.idm.headway * cfg_.idm.v0_max;
  for (int n = 0; n < count; ++n) {
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      const int lane = static_cast<int>(rng_.uniform_int(static_cast<std::uint64_t>(cfg_.road.lane_count)));
      const double x = rng_.uniform(0.0, cfg_.road.length);
      const double v0 = rng_.uniform(cfg_.idm.v0_min, cfg_.idm.v0_max);
      bool ok = true;
      if (cfg_.ego_enabled && lane == ego_.lane_id) {
        const double gap = std::abs(longitudinal_diff(x, ego_.x, cfg_.road)) -
                           (cfg_.vehicle.length + ego_.length) / 2.0;
        if (gap < margin) ok = false;
      }
      for (const Sv& other : svs_) {
        if (other.st.lane_id != lane) continue;
        const double gap = std::abs(longitudinal_diff(x, other.st.x, cfg_.road)) -
                           (cfg_.vehicle.length + other.st.length) / 2.0;
        if (gap < margin) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      Sv sv;
      sv.st.lane_id = lane;
      sv.st.x = x;
      sv.st.y = cfg_.road.lane_center(lane);
      sv.st.length = cfg_.vehicle.length;
      sv.st.width = cfg_.vehicle.width;
      sv.desired_speed = v0;
      sv.speed = v0;
      sv.st.vx = v0;
      svs_.push_back(sv);
      placed = true;
    }
    if (!placed)
      throw ConfigError("traffic placement failed; density too high");
  }
}

void HighwayEnv::place_ego(int lane, double x, double speed) {
  if (!cfg_.ego_enabled) throw ConfigError("place_ego: ego disabled");
  ego_.lane_id = std::clamp(lane, 0, cfg_.road.lane_count - 1);
  ego_.x = wrap_x(x, cfg_.road);
  ego_.y = cfg_.road.lane_center(ego_.lane_id);
  ego_.heading = 0.0;
  ego_speed_ = std::max(0.0, speed);
  ego_.vx = ego_speed_;
  ego_.vy = 0.0;
}

void HighwayEnv::spawn_sv(int lane, double x, double speed, double desired_speed) {
  Sv sv;
  sv.st.lane_id = std::clamp(lane, 0, cfg_.road.lane_count - 1);
  sv.st.x = wrap_x(x, cfg_.road);
  sv.st.y = cfg_.road.lane_center(sv.st.lane_id);
  sv.st.length = cfg_.vehicle.length;
  sv.st.width = cfg_.vehicle.width;
  sv.speed = std::max(0.0, speed);
  sv.st.vx = sv.speed;
  sv.desired_speed = desired_speed;
  svs_.push_back(sv);
}

double HighwayEnv::idm_accel(double v, double v0, double gap, double dv) const {
  const IdmConfig& p = cfg_.idm;
  double a = p.accel * (1.0 - std::pow(std::max(v, 0.0) / v0, p.exponent));
  if (gap < std::numeric_limits<double>::max()) {
    const double s_star =
        p.min_gap +
        std::max(0.0, v * p.headway + v * dv / (2.0 * std::sqrt(p.accel * p.brake)));
    const double s = std::max(gap, 0.01);
    a -= p.accel * (s_star / s) * (s_star / s);
  }
  return std::clamp(a, -p.hard_brake, p.accel);
}

HighwayEnv::Neighbor HighwayEnv::leader_in_lane(int lane, double x,
                                                int self_idx) const {
  // Index 0 is the ego; SV k is index k+1. A changing SV occupies both its
  // source and target lane for neighbor searches.
  Neighbor best;
  double best_fwd = std::numeric_limits<double>::max();
  const int n = static_cast<int>(svs_.size());
  for (int idx = cfg_.ego_enabled ? 0 : 1; idx <= n; ++idx) {
    if (idx == self_idx) continue;
    double ox, ov, olen;
    bool in_lane;
    if (idx == 0) {
      ox = ego_.x;
      ov = ego_speed_;
      olen = ego_.length;
      in_lane = (ego_.lane_id == lane);
    } else {
      const Sv& sv = svs_[static_cast<std::size_t>(idx - 1)];
      ox = sv.st.x;
      ov = sv.speed;
      olen = sv.st.length;
      in_lane = (sv.st.lane_id == lane) || (sv.lc_target == lane) ||
                (sv.lc_target >= 0 && cfg_.road.lane_at(sv.lc_from_y) == lane);
    }
    if (!in_lane) continue;
    double fwd = longitudinal_diff(ox, x, cfg_.road);
    if (cfg_.road.ring && fwd < 0.0) fwd += cfg_.road.length;
    if (fwd <= 0.0) continue;
    if (fwd < best_fwd) {
      best_fwd = fwd;
      best.idx = idx;
      best.speed = ov;
      best.length = olen;
    }
  }
  if (best.idx >= 0) best.gap = best_fwd;  // center distance; caller subtracts
  return best;
}

HighwayEnv::Neighbor HighwayEnv::follower_in_lane(int lane, double x,
                                                  int self_idx) const {
  Neighbor best;
  double best_back = std::numeric_limits<double>::max();
  const int n = static_cast<int>(svs_.size());
  for (int idx = cfg_.ego_enabled ? 0 : 1; idx <= n; ++idx) {
    if (idx == self_idx) continue;
    double ox, ov, olen;
    bool in_lane;
    if (idx == 0) {
      ox = ego_.x;
      ov = ego_speed_;
      olen = ego_.length;
      in_lane = (ego_.lane_id == lane);
    } else {
      const Sv& sv = svs_[static_cast<std::size_t>(idx - 1)];
      ox = sv.st.x;
      ov = sv.speed;
      olen = sv.st.length;
      in_lane = (sv.st.lane_id == lane) || (sv.lc_target == lane) ||
                (sv.lc_target >= 0 && cfg_.road.lane_at(sv.lc_from_y) == lane);
    }
    if (!in_lane) continue;
    double back = longitudinal_diff(x, ox, cfg_.road);
    if (cfg_.road.ring && back < 0.0) back += cfg_.road.length;
    if (back <= 0.0) continue;
    if (back < best_back) {
      best_back = back;
      best.idx = idx;
      best.speed = ov;
      best.length = olen;
    }
  }
  if (best.idx >= 0) best.gap = best_back;
  return best;
}

bool HighwayEnv::mobil_wants_change(int sv_idx, int target_lane) const {
  const Sv& sv = svs_[static_cast<std::size_t>(sv_idx)];
  const int self = sv_idx + 1;
  const int lane = sv.st.lane_id;
  const MobilConfig& mb = cfg_.mobil;

  const auto bumper = [&](const Neighbor& nb, double own_len) {
    return nb.gap - (nb.length + own_len) / 2.0;
  };

  // Current acceleration.
  const Neighbor cur_lead = leader_in_lane(lane, sv.st.x, self);
  const double a_self_old = idm_accel(
      sv.speed, sv.desired_speed,
      cur_lead.idx >= 0 ? bumper(cur_lead, sv.st.length) : std::numeric_limits<double>::max(),
      cur_lead.idx >= 0 ? sv.speed - cur_lead.speed : 0.0);

  // Own acceleration after the change.
  const Neighbor new_lead = leader_in_lane(target_lane, sv.st.x, self);
  const double new_lead_gap =
      new_lead.idx >= 0 ? bumper(new_lead, sv.st.length) : std::numeric_limits<double>::max();
  if (new_lead.idx >= 0 && new_lead_gap < cfg_.idm.min_gap) return false;
  const double a_self_new =
      idm_accel(sv.speed, sv.desired_speed, new_lead_gap,
                new_lead.idx >= 0 ? sv.speed - new_lead.speed : 0.0);
  if (a_self_new < -mb.b_safe) return false;

  // New follower must stay comfortable.
  const Neighbor new_follow = follower_in_lane(target_lane, sv.st.x, self);
  double a_nf_old = 0.0, a_nf_new = 0.0;
  if (new_follow.idx >= 0) {
    const double nf_gap = bumper(new_follow, sv.st.length);
    if (nf_gap < cfg_.idm.min_gap) return false;
    const double nf_speed = new_follow.speed;
    const double nf_desired =
        new_follow.idx == 0 ? cfg_.idm.v0_max
                            : svs_[static_cast<std::size_t>(new_follow.idx - 1)].desired_speed;
    const Neighbor nf_lead_old = leader_in_lane(
        target_lane, new_follow.idx == 0 ? ego_.x : svs_[static_cast<std::size_t>(new_follow.idx - 1)].st.x,
        new_follow.idx);
    a_nf_old = idm_accel(
        nf_speed, nf_desired,
        nf_lead_old.idx >= 0 ? bumper(nf_lead_old, new_follow.length) : std::numeric_limits<double>::max(),
        nf_lead_old.idx >= 0 ? nf_speed - nf_lead_old.speed : 0.0);
    a_nf_new = idm_accel(nf_speed, nf_desired, nf_gap, nf_speed - sv.speed);
    if (a_nf_new < -mb.b_safe) return false;
  }

  // Old follower gains room.
  const Neighbor old_follow = follower_in_lane(lane, sv.st.x, self);
  double a_of_old = 0.0, a_of_new = 0.0;
  if (old_follow.idx > 0) {  // ego's accel is not IDM-driven; skip politeness
    const Sv& of = svs_[static_cast<std::size_t>(old_follow.idx - 1)];
    const double of_gap_old = bumper(old_follow, sv.st.length);
    a_of_old = idm_accel(of.speed, of.desired_speed, of_gap_old, of.speed - sv.speed);
    const Neighbor of_lead_new = cur_lead;
    double gap_new = std::numeric_limits<double>::max();
    double dv_new = 0.0;
    if (of_lead_new.idx >= 0) {
      gap_new = longitudinal_diff(
          of_lead_new.idx == 0 ? ego_.x : svs_[static_cast<std::size_t>(of_lead_new.idx - 1)].st.x,
          of.st.x, cfg_.road);
      if (cfg_.road.ring && gap_new < 0.0) gap_new += cfg_.road.length;
      gap_new -= (of_lead_new.length + of.st.length) / 2.0;
      dv_new = of.speed - of_lead_new.speed;
    }
    a_of_new = idm_accel(of.speed, of.desired_speed, gap_new, dv_new);
  }

  const double incentive = (a_self_new - a_self_old) +
                           mb.politeness * ((a_nf_new - a_nf_old) + (a_of_new - a_of_old));
  return incentive > mb.threshold;
}

void HighwayEnv::advance_svs() {
  const double dt = cfg_.dt;
  const int n = static_cast<int>(svs_.size());

  // Longitudinal accelerations and lane-change starts, from the pre-step state.
  std::vector<double> accels(static_cast<std::size_t>(n), 0.0);
  std::vector<int> lc_start(static_cast<std::size_t>(n), -1);
  for (int k = 0; k < n; ++k) {
    Sv& sv = svs_[static_cast<std::size_t>(k)];
    const int self = k + 1;
    const auto accel_against = [&](int lane) {
      const Neighbor lead = leader_in_lane(lane, sv.st.x, self);
      const double gap = lead.idx >= 0
                             ? lead.gap - (lead.length + sv.st.length) / 2.0
                             : std::numeric_limits<double>::max();
      return idm_accel(sv.speed, sv.desired_speed, gap,
                       lead.idx >= 0 ? sv.speed - lead.speed : 0.0);
    };
    if (sv.lc_target >= 0) {
      accels[static_cast<std::size_t>(k)] = std::min(
          accel_against(cfg_.road.lane_at(sv.lc_from_y)), accel_against(sv.lc_target));
    } else {
      accels[static_cast<std::size_t>(k)] = accel_against(sv.st.lane_id);
      if (sv.cooldown <= 0.0) {
        const int lane = sv.st.lane_id;
        double best_gain = 0.0;
        for (int target : {lane - 1, lane + 1}) {
          if (target < 0 || target >= cfg_.road.lane_count) continue;
          if (mobil_wants_change(k, target)) {
            // Prefer the target that IDM likes more; first hit wins ties.
            const Neighbor lead = leader_in_lane(target, sv.st.x, self);
            const double gap = lead.idx >= 0
                                   ? lead.gap - (lead.length + sv.st.length) / 2.0
                                   : std::numeric_limits<double>::max();
            const double gain = idm_accel(sv.speed, sv.desired_speed, gap,
                                          lead.idx >= 0 ? sv.speed - lead.speed : 0.0);
            if (lc_start[static_cast<std::size_t>(k)] < 0 || gain > best_gain) {
              lc_start[static_cast<std::size_t>(k)] = target;
              best_gain = gain;
            }
          }
        }
      }
    }
  }

  for (int k = 0; k < n; ++k) {
    Sv& sv = svs_[static_cast<std::size_t>(k)];
    sv.accel = accels[static_cast<std::size_t>(k)];
    sv.speed = std::max(0.0, sv.speed + sv.accel * dt);
    sv.st.x = wrap_x(sv.st.x + sv.speed * dt, cfg_.road);
    if (sv.cooldown > 0.0) sv.cooldown -= dt;

    if (lc_start[static_cast<std::size_t>(k)] >= 0) {
      sv.lc_target = lc_start[static_cast<std::size_t>(k)];
      sv.lc_from_y = sv.st.y;
      sv.lc_progress = 0.0;
    }
    if (sv.lc_target >= 0) {
      sv.lc_progress += dt / cfg_.mobil.duration_s;
      const double target_y = cfg_.road.lane_center(sv.lc_target);
      if (sv.lc_progress >= 1.0) {
        sv.st.y = target_y;
        sv.st.vy = 0.0;
        sv.lc_target = -1;
        sv.cooldown = cfg_.mobil.cooldown_s;
      } else {
        sv.st.y = sv.lc_from_y + (target_y - sv.lc_from_y) * sv.lc_progress;
        sv.st.vy = (target_y - sv.lc_from_y) / cfg_.mobil.duration_s;
      }
    } else {
      sv.st.vy = 0.0;
    }
    sv.st.heading = sv.speed > 0.01 ? std::atan2(sv.st.vy, sv.speed) : 0.0;
    sv.st.vx = sv.speed * std::cos(sv.st.heading);
    sv.st.lane_id = cfg_.road.lane_at(sv.st.y);
  }
}

StepOutcome HighwayEnv::step(EgoControls controls) {
  if (!std::isfinite(controls.steer) || !std::isfinite(controls.accel)) {
    std::string dump = "non-finite ego controls; state:";
    for (const auto& s : snapshot())
      dump += " [id " + std::to_string(s.id) + " x " + fmt_double(s.state.x) +
              " y " + fmt_double(s.state.y) + " v " + fmt_double(s.state.vx) + "]";
    throw std::runtime_error(dump);
  }
  controls.steer = saturate(controls.steer, -cfg_.vehicle.steer_max, cfg_.vehicle.steer_max);
  controls.accel = saturate(controls.accel, -cfg_.accel_limit, cfg_.accel_limit);
  last_controls_ = controls;

  advance_svs();

  if (cfg_.ego_enabled) {
    const double dt = cfg_.dt;
    ego_speed_ = std::max(0.0, ego_speed_ + controls.accel * dt);
    ego_.heading += ego_speed_ / cfg_.vehicle.wheelbase * std::tan(controls.steer) * dt;
    ego_.x = wrap_x(ego_.x + ego_speed_ * std::cos(ego_.heading) * dt, cfg_.road);
    ego_.y += ego_speed_ * std::sin(ego_.heading) * dt;
    ego_.vx = ego_speed_ * std::cos(ego_.heading);
    ego_.vy = ego_speed_ * std::sin(ego_.heading);
    ego_.lane_id = cfg_.road.lane_at(ego_.y);
  }

  elapsed_ += cfg_.dt;

  StepOutcome out;
  out.elapsed_s = elapsed_;
  out.time_exceeded = elapsed_ >= cfg_.episode_cap_s - 1e-9;

  if (cfg_.ego_enabled) {
    out.off_road = ego_.y < 0.0 || ego_.y > cfg_.road.width_total();
    for (const Sv& sv : svs_) {
      if (std::abs(longitudinal_diff(sv.st.x, ego_.x, cfg_.road)) > kNearWindow)
        continue;
      if (rectangles_collide(ego_, sv.st, cfg_.road)) {
        out.collision = true;
        break;
      }
    }
    out.f_unsafe = out.collision || out.off_road;
  }

  if (cfg_.track_sv_collisions) {
    const int n = static_cast<int>(svs_.size());
    for (int i = 0; i < n && !out.sv_collision; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const VehicleState& a = svs_[static_cast<std::size_t>(i)].st;
        const VehicleState& b = svs_[static_cast<std::size_t>(j)].st;
        if (std::abs(longitudinal_diff(a.x, b.x, cfg_.road)) > kNearWindow) continue;
        if (std::abs(a.y - b.y) > 2.0 * cfg_.road.lane_width) continue;
        if (rectangles_collide(a, b, cfg_.road)) {
          out.sv_collision = true;
          break;
        }
      }
    }
    if (out.sv_collision) sv_collision_seen_ = true;
  }

  out.obs = observe();
  return out;
}

std::vector<VehicleState> HighwayEnv::sv_states() const {
  std::vector<VehicleState> v;
  v.reserve(svs_.size());
  for (const Sv& sv : svs_) v.push_back(sv.st);
  return v;
}

std::vector<double> HighwayEnv::sv_accels() const {
  std::vector<double> v;
  v.reserve(svs_.size());
  for (const Sv& sv : svs_) v.push_back(sv.accel);
  return v;
}

EgoObservation HighwayEnv::observe() const {
  if (!cfg_.ego_enabled) return EgoObservation{};
  const auto states = sv_states();
  const auto accels = sv_accels();
  return extract_observation(ego_, states, accels, cfg_.road, cfg_.obs_back,
                             cfg_.obs_fwd, nullptr);
}

std::array<double, 6> HighwayEnv::observed_sv_accels() const {
  std::array<double, 6> slot{};
  if (!cfg_.ego_enabled) return slot;
  const auto states = sv_states();
  const auto accels = sv_accels();
  extract_observation(ego_, states, accels, cfg_.road, cfg_.obs_back,
                      cfg_.obs_fwd, &slot);
  return slot;
}

double HighwayEnv::ttc_to_leader(double t_max) const {
  if (!(t_max > 0.0)) throw ConfigError("ttc_to_leader: t_max must be > 0");
  if (!cfg_.ego_enabled) return t_max;
  const auto states = sv_states();
  return ttc_same_lane_leader(ego_, states, cfg_.road, t_max);
}

std::vector<VehicleSnapshot> HighwayEnv::snapshot() const {
  std::vector<VehicleSnapshot> rows;
  rows.reserve(svs_.size() + 1);
  if (cfg_.ego_enabled)
    rows.push_back({0, ego_, last_controls_.steer, last_controls_.accel});
  int id = 1;
  for (const Sv& sv : svs_) rows.push_back({id++, sv.st, 0.0, sv.accel});
  return rows;
}

std::string trajectory_csv_header() {
  return "step,id,lane_id,x,y,heading,vx,vy,steer,accel,f_unsafe\n";
}

std::string trajectory_csv_row(int step, const VehicleSnapshot& s, bool f_unsafe) {
  std::string row = std::to_string(step) + "," + std::to_string(s.id) + "," +
                    std::to_string(s.state.lane_id);
  for (double v : {s.state.x, s.state.y, s.state.heading, s.state.vx,
                   s.state.vy, s.steer, s.accel})
    row += "," + fmt_double(v);
  row += f_unsafe ? ",1\n" : ",0\n";
  return row;
}

}  // namespace moec::env
