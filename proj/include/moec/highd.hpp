#pragma once

#include <functional>
#include <istream>
#include <ostream>

#include "moec/trainer.hpp"

namespace moec::highd {

// Recording metadata: text key-value file. Lane markings are lateral offsets
// in the recording frame, semicolon separated; the upper set drives opposite
// to the canonical +x direction and is mirrored on ingest.
struct RecordingMeta {
  double frame_rate = 25.0;
  std::vector<double> lower_lane_markings;
  std::vector<double> upper_lane_markings;
};

struct TrackSample {
  double x = 0, y = 0, vx = 0, vy = 0;
};

struct VehicleTrack {
  int id = 0;
  int region = 0;  // 0 lower (canonical), 1 upper (mirrored on ingest)
  double t0 = 0.0; // time of samples[0] on the simulation grid
  std::vector<TrackSample> samples;  // one per simulation step
  double length = 5.0, width = 2.0;
  int recorded_lane0 = 0;  // laneId of the first record, for round-trips

  bool active_at(int step_index, double dt) const;
  const TrackSample& at(int step_index, double dt) const;
};

struct Recording {
  env::RoadSpec road;  // canonical frame of the replayed region(s)
  double dt = 0.1;
  double duration = 0.0;  // end of the global grid, s
  std::vector<VehicleTrack> tracks;

  const VehicleTrack* find(int id) const;
};

RecordingMeta parse_meta(std::istream& in);

// Parses the track CSV (required columns: frame, id, x, y, width, height,
// xVelocity, yVelocity, laneId; extras ignored), maps into the canonical
// road frame via the lane markings and resamples to sim_dt by linear
// interpolation. Missing columns and non-monotone frames raise DataError.
Recording parse_tracks(std::istream& tracks_csv, const RecordingMeta& meta,
                       double sim_dt);

// Emits the recording back out in the canonical frame at rate 1/dt.
void serialize_recording(const Recording& rec, std::ostream& tracks,
                         std::ostream& meta);

struct FixtureSpec {
  enum class Kind { kEmpty, kConstVel, kPlatoon, kCutIn, kFreeFlow, kTrap };
  Kind kind = Kind::kConstVel;
  int vehicles = 3;
  double duration_s = 20.0;
  double frame_rate = 25.0;
  int lanes = 3;
  double lane_width = 4.0;
  std::uint64_t seed = 1;
  bool opposite_direction = false;  // emit into the mirrored upper region
};

FixtureSpec::Kind fixture_kind_from_string(const std::string& name);
void make_fixture(const FixtureSpec& spec, std::ostream& tracks,
                  std::ostream& meta);
void write_fixture_files(const FixtureSpec& spec,
                         const std::filesystem::path& dir);

// Controller driving the substituted ego: observation + ego state -> controls.
using ControlFn = std::function<env::EgoControls(
    const env::EgoObservation&, const env::VehicleState&, double speed, int step)>;

struct ReplayResult {
  trainer::EpisodeMetrics metrics;
  trainer::EpisodeTrace trace;
  // Per-step ego states, for deviation checks against the recording.
  std::vector<env::VehicleState> ego_states;
  std::string trajectory_csv;     // ego + replayed SVs
  std::string sv_trajectory_csv;  // replayed SVs only; agent-independent
  std::string reward_csv;
};

struct ReplayConfig {
  reward::RewardConfig reward;
  double episode_cap_s = 200.0;
  double wheelbase = 2.7;
  double steer_max = 0.6;
  double accel_limit = 3.0;
  double obs_back = 80.0;
  double obs_fwd = 160.0;
};

// Replays the recording with vehicle ego_id removed and agent-controlled
// from its recorded initial state. SVs follow their samples open loop and
// despawn when their track ends.
ReplayResult replay_episode(const Recording& rec, int ego_id,
                            const ControlFn& controller,
                            const ReplayConfig& cfg);

// Greedy-agent adapter through the hybrid action pipeline.
ControlFn agent_controller(const agent::MoecAgent& ag,
                           const trainer::Actuation& actuation, int lane_count);

// Re-derives the recorded control sequence of a track (round-trip checks).
ControlFn copy_controller(const VehicleTrack& track, double dt, double wheelbase);

// Uniformly picks a replayable ego among tracks alive for at least
// min_span_s; returns its id.
int pick_ego(const Recording& rec, double min_span_s, Rng& rng);

}  // namespace moec::highd
