#pragma once

#include <array>
#include <span>
#include <vector>

#include "moec/common.hpp"

namespace moec::env {

struct RoadSpec {
  int lane_count = 3;
  double lane_width = 4.0;  // w_r, m
  double length = 1000.0;   // m; ring circumference when ring is set
  bool ring = true;

  double width_total() const { return lane_count * lane_width; }
  double lane_center(int lane) const { return (lane + 0.5) * lane_width; }
  // Lane index nearest to a lateral position, clamped to valid lanes.
  int lane_at(double y) const;
  void validate() const;
};

// Signed longitudinal difference a - b; wrapped to [-length/2, length/2)
// on ring roads.
double longitudinal_diff(double a, double b, const RoadSpec& road);

// Road frame: x forward, y toward the right edge (lane 0 is leftmost, a left
// lane change decreases y). Heading is the angle from +x toward +y.
struct VehicleState {
  int lane_id = 0;
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // rad
  double vx = 0.0;       // m/s
  double vy = 0.0;       // m/s
  double length = 5.0;
  double width = 2.0;
};

// 42 values: EV block [lane_id, x, y, heading, vx, vy] then six SV blocks
// [present, dx, dy, heading, dvx, dvy] in slot order current-lead,
// current-follow, left-lead, left-follow, right-lead, right-follow.
struct EgoObservation {
  static constexpr int kSize = 42;
  static constexpr int kSvSlots = 6;
  std::array<double, kSize> v{};

  std::span<const double> ego() const { return {v.data(), 6}; }
  std::span<const double> sv_block(int n) const { return {v.data() + 6 + 6 * n, 6}; }
  double lane_id() const { return v[0]; }
  double speed_x() const { return v[4]; }
};

struct EgoControls {
  double steer = 0.0;  // rad
  double accel = 0.0;  // m/s^2
};

struct StepOutcome {
  EgoObservation obs;
  bool f_unsafe = false;
  bool collision = false;
  bool off_road = false;
  bool sv_collision = false;  // tracked only when cfg.track_sv_collisions
  bool time_exceeded = false;
  double elapsed_s = 0.0;
};

struct IdmConfig {
  double v0_min = 8.0;   // desired-speed draw range, m/s
  double v0_max = 14.0;
  double headway = 1.5;  // T, s
  double min_gap = 2.0;  // s0, m
  double accel = 1.5;    // a, m/s^2
  double brake = 2.0;    // b, m/s^2
  int exponent = 4;
  double hard_brake = 8.0;  // physical braking limit, m/s^2
};

struct MobilConfig {
  double politeness = 0.3;
  double threshold = 0.2;   // m/s^2
  double b_safe = 3.0;      // m/s^2
  double cooldown_s = 4.0;  // between lane changes of one SV
  double duration_s = 3.0;  // lateral transition time
};

struct VehicleSpec {
  double length = 5.0;
  double width = 2.0;
  double wheelbase = 2.7;
  double steer_max = 0.6;  // rad
};

struct EnvConfig {
  RoadSpec road;
  IdmConfig idm;
  MobilConfig mobil;
  VehicleSpec vehicle;
  double dt = 0.1;
  double density = 0.5;      // V/C ratio in (0,1); 0 spawns no SVs
  double episode_cap_s = 200.0;
  double obs_back = 80.0;    // m
  double obs_fwd = 160.0;    // m
  double accel_limit = 3.0;  // ego command clamp, m/s^2
  bool ego_enabled = true;
  bool track_sv_collisions = false;

  void validate() const;
};

// Per-vehicle row for trajectory logging; id 0 is the ego.
struct VehicleSnapshot {
  int id = 0;
  VehicleState state;
  double steer = 0.0;
  double accel = 0.0;
};

// Observation extraction shared by the simulator and the replay harness.
// sv_accels runs parallel to svs; slot_accels, when non-null, receives the
// occupant accelerations of the six observation slots.
EgoObservation extract_observation(const VehicleState& ego,
                                   std::span<const VehicleState> svs,
                                   std::span<const double> sv_accels,
                                   const RoadSpec& road, double obs_back,
                                   double obs_fwd,
                                   std::array<double, 6>* slot_accels);

// TTC against the nearest same-lane leader under constant speeds, clamped to
// [0, t_max]; t_max when there is no leader or the gap is opening.
double ttc_same_lane_leader(const VehicleState& ego,
                            std::span<const VehicleState> svs,
                            const RoadSpec& road, double t_max);

// Oriented-rectangle overlap (separating axes), ring-aware in x.
bool rectangles_collide(const VehicleState& a, const VehicleState& b,
                        const RoadSpec& road);

class HighwayEnv {
 public:
  explicit HighwayEnv(EnvConfig cfg);

  EgoObservation reset(std::uint64_t seed);
  EgoObservation reset(std::uint64_t seed, double density);
  StepOutcome step(EgoControls controls);

  // Scenario construction: place vehicles explicitly (after a reset with
  // density 0 for a clean road). Used by fixtures and tests.
  void place_ego(int lane, double x, double speed);
  void spawn_sv(int lane, double x, double speed, double desired_speed);
  EgoObservation observe() const;
  double ttc_to_leader(double t_max) const;
  // Finite-differenced longitudinal accelerations of the six observed slots.
  std::array<double, 6> observed_sv_accels() const;

  const EnvConfig& config() const { return cfg_; }
  const VehicleState& ego() const { return ego_; }
  double ego_speed() const { return ego_speed_; }
  double elapsed_s() const { return elapsed_; }
  bool sv_collision_seen() const { return sv_collision_seen_; }
  std::vector<VehicleSnapshot> snapshot() const;
  int sv_count() const { return static_cast<int>(svs_.size()); }

 private:
  struct Sv {
    VehicleState st;
    double speed = 0.0;          // longitudinal
    double desired_speed = 10.0;
    double accel = 0.0;          // last applied
    int lc_target = -1;          // lane index while changing, -1 otherwise
    double lc_from_y = 0.0;
    double lc_progress = 0.0;    // 0..1
    double cooldown = 0.0;       // s until the next change is allowed
  };

  void place_traffic(double density);
  void advance_svs();
  double idm_accel(double v, double v0, double gap, double dv) const;
  // Leader/follower of a longitudinal position in one lane; indices into a
  // combined list where entry 0 is the ego (when enabled).
  struct Neighbor { int idx = -1; double gap = 0.0; double speed = 0.0; double length = 0.0; };
  Neighbor leader_in_lane(int lane, double x, int self_idx) const;
  Neighbor follower_in_lane(int lane, double x, int self_idx) const;
  bool mobil_wants_change(int sv_idx, int target_lane) const;
  std::vector<VehicleState> sv_states() const;
  std::vector<double> sv_accels() const;

  EnvConfig cfg_;
  Rng rng_;
  VehicleState ego_;
  double ego_speed_ = 0.0;
  EgoControls last_controls_;
  std::vector<Sv> svs_;
  double elapsed_ = 0.0;
  bool sv_collision_seen_ = false;
};

// Header of the trajectory CSV interface.
std::string trajectory_csv_header();
std::string trajectory_csv_row(int step, const VehicleSnapshot& s, bool f_unsafe);

}  // namespace moec::env
