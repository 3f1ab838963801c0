#include "moec/highd.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace moec::highd {

namespace {

std::vector<double> parse_marking_list(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ';'))
    if (!tok.empty()) v.push_back(std::stod(tok));
  std::sort(v.begin(), v.end());
  return v;
}

std::string markings_to_string(std::span<const double> v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ';';
    s += fmt_double(v[i]);
  }
  return s;
}

}  // namespace

bool VehicleTrack::active_at(int step_index, double dt) const {
  const int start = static_cast<int>(std::llround(t0 / dt));
  return step_index >= start &&
         step_index < start + static_cast<int>(samples.size());
}

const TrackSample& VehicleTrack::at(int step_index, double dt) const {
  const int start = static_cast<int>(std::llround(t0 / dt));
  return samples[static_cast<std::size_t>(step_index - start)];
}

const VehicleTrack* Recording::find(int id) const {
  for (const auto& t : tracks)
    if (t.id == id) return &t;
  return nullptr;
}

RecordingMeta parse_meta(std::istream& in) {
  RecordingMeta meta;
  std::string line;
  bool have_rate = false;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    if (key == "frameRate") {
      meta.frame_rate = std::stod(val);
      have_rate = true;
    } else if (key == "lowerLaneMarkings") {
      meta.lower_lane_markings = parse_marking_list(val);
    } else if (key == "upperLaneMarkings") {
      meta.upper_lane_markings = parse_marking_list(val);
    }
  }
  if (!have_rate || meta.frame_rate <= 0.0)
    throw DataError("recording meta: frameRate missing or not positive");
  if (meta.lower_lane_markings.size() < 2 && meta.upper_lane_markings.size() < 2)
    throw DataError("recording meta: need lane markings for at least one region");
  return meta;
}

namespace {

struct RawRecord {
  int frame, id;
  double x, y, width, height, vx, vy;
  int lane_id;
};

struct RegionFrame {
  // canonical mapping of one marking set
  double w = 4.0;
  int lanes = 1;
  double y0 = 0.0;      // marking offset of the canonical edge
  bool mirrored = false;
};

RegionFrame region_frame(std::span<const double> markings, bool mirrored) {
  RegionFrame rf;
  rf.mirrored = mirrored;
  rf.lanes = static_cast<int>(markings.size()) - 1;
  rf.w = (markings.back() - markings.front()) / rf.lanes;
  rf.y0 = mirrored ? markings.back() : markings.front();
  return rf;
}

}  // namespace

Recording parse_tracks(std::istream& tracks_csv, const RecordingMeta& meta,
                       double sim_dt) {
  if (sim_dt <= 0.0) throw ConfigError("parse_tracks: sim_dt must be > 0");
  std::string line;
  if (!std::getline(tracks_csv, line))
    throw DataError("tracks csv: empty stream, header expected");
  const auto header = split_csv_line(line);
  const char* required[] = {"frame", "id",        "x",         "y",     "width",
                            "height", "xVelocity", "yVelocity", "laneId"};
  std::map<std::string, int> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = static_cast<int>(i);
  for (const char* name : required)
    if (!col.count(name))
      throw DataError(std::string("tracks csv: missing column: ") + name);

  std::vector<RawRecord> rows;
  int line_no = 1;
  while (std::getline(tracks_csv, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() < header.size())
      throw DataError("tracks csv: short row at line " + std::to_string(line_no));
    RawRecord r;
    try {
      r.frame = std::stoi(cells[(std::size_t)col["frame"]]);
      r.id = std::stoi(cells[(std::size_t)col["id"]]);
      r.x = std::stod(cells[(std::size_t)col["x"]]);
      r.y = std::stod(cells[(std::size_t)col["y"]]);
      r.width = std::stod(cells[(std::size_t)col["width"]]);
      r.height = std::stod(cells[(std::size_t)col["height"]]);
      r.vx = std::stod(cells[(std::size_t)col["xVelocity"]]);
      r.vy = std::stod(cells[(std::size_t)col["yVelocity"]]);
      r.lane_id = std::stoi(cells[(std::size_t)col["laneId"]]);
    } catch (const std::exception&) {
      throw DataError("tracks csv: unparsable value at line " + std::to_string(line_no));
    }
    rows.push_back(r);
  }

  const bool have_lower = meta.lower_lane_markings.size() >= 2;
  const bool have_upper = meta.upper_lane_markings.size() >= 2;
  const RegionFrame lower = have_lower
                                ? region_frame(meta.lower_lane_markings, false)
                                : RegionFrame{};
  const RegionFrame upper = have_upper
                                ? region_frame(meta.upper_lane_markings, true)
                                : RegionFrame{};

  const auto classify = [&](double y) {
    if (!have_upper) return 0;
    if (!have_lower) return 1;
    const double dl = std::min(std::abs(y - meta.lower_lane_markings.front()),
                               std::abs(y - meta.lower_lane_markings.back()));
    const double du = std::min(std::abs(y - meta.upper_lane_markings.front()),
                               std::abs(y - meta.upper_lane_markings.back()));
    return du < dl ? 1 : 0;
  };

  // group rows by vehicle, checking frame monotonicity
  std::map<int, std::vector<RawRecord>> per_vehicle;
  std::map<int, int> last_frame;
  int row_idx = 0;
  for (const auto& r : rows) {
    ++row_idx;
    auto it = last_frame.find(r.id);
    if (it != last_frame.end() && r.frame <= it->second)
      throw DataError("tracks csv: non-monotone frames for vehicle " +
                      std::to_string(r.id) + " at data row " +
                      std::to_string(row_idx));
    last_frame[r.id] = r.frame;
    per_vehicle[r.id].push_back(r);
  }

  Recording rec;
  rec.dt = sim_dt;
  const RegionFrame& main_region = have_lower ? lower : upper;
  rec.road.lane_count = std::max(2, main_region.lanes);
  rec.road.lane_width = main_region.w;
  rec.road.ring = false;
  rec.road.length = 1e7;

  for (auto& [id, recs] : per_vehicle) {
    const int region = classify(recs.front().y);
    const RegionFrame& rf = region == 1 ? upper : lower;
    // map into the canonical frame
    struct P { double t, x, y, vx, vy; };
    std::vector<P> pts;
    pts.reserve(recs.size());
    for (const auto& r : recs) {
      P p;
      p.t = r.frame / meta.frame_rate;
      if (rf.mirrored) {
        p.x = -r.x;
        p.y = rf.y0 - r.y;
        p.vx = -r.vx;
        p.vy = -r.vy;
      } else {
        p.x = r.x;
        p.y = r.y - rf.y0;
        p.vx = r.vx;
        p.vy = r.vy;
      }
      pts.push_back(p);
    }
    VehicleTrack track;
    track.id = id;
    track.region = region;
    track.length = recs.front().width;
    track.width = recs.front().height;
    track.recorded_lane0 = recs.front().lane_id;

    const double t_first = pts.front().t;
    const double t_last = pts.back().t;
    int k0 = static_cast<int>(std::ceil(t_first / sim_dt - 1e-9));
    const int k1 = static_cast<int>(std::floor(t_last / sim_dt + 1e-9));
    if (k1 < k0) continue;  // too short to land on the grid
    track.t0 = k0 * sim_dt;
    std::size_t seg = 0;
    for (int k = k0; k <= k1; ++k) {
      const double t = k * sim_dt;
      while (seg + 1 < pts.size() && pts[seg + 1].t < t - 1e-12) ++seg;
      const P& a = pts[seg];
      const P& b = pts[std::min(seg + 1, pts.size() - 1)];
      const double span = b.t - a.t;
      const double u = span > 1e-12 ? saturate((t - a.t) / span, 0.0, 1.0) : 0.0;
      TrackSample s;
      s.x = a.x + (b.x - a.x) * u;
      s.y = a.y + (b.y - a.y) * u;
      s.vx = a.vx + (b.vx - a.vx) * u;
      s.vy = a.vy + (b.vy - a.vy) * u;
      track.samples.push_back(s);
    }
    rec.duration = std::max(rec.duration, track.t0 + (track.samples.size() - 1) * sim_dt);
    rec.tracks.push_back(std::move(track));
  }
  return rec;
}

void serialize_recording(const Recording& rec, std::ostream& tracks,
                         std::ostream& meta) {
  meta << "frameRate=" << fmt_double(1.0 / rec.dt) << "\n";
  std::vector<double> markings;
  for (int k = 0; k <= rec.road.lane_count; ++k)
    markings.push_back(k * rec.road.lane_width);
  meta << "lowerLaneMarkings=" << markings_to_string(markings) << "\n";
  meta << "upperLaneMarkings=\n";

  tracks << "frame,id,x,y,width,height,xVelocity,yVelocity,laneId\n";
  for (const auto& t : rec.tracks) {
    const int k0 = static_cast<int>(std::llround(t.t0 / rec.dt));
    for (std::size_t s = 0; s < t.samples.size(); ++s) {
      const auto& p = t.samples[s];
      tracks << (k0 + static_cast<int>(s)) << "," << t.id << ","
             << fmt_double(p.x) << "," << fmt_double(p.y) << ","
             << fmt_double(t.length) << "," << fmt_double(t.width) << ","
             << fmt_double(p.vx) << "," << fmt_double(p.vy) << ","
             << rec.road.lane_at(p.y) << "\n";
    }
  }
}

FixtureSpec::Kind fixture_kind_from_string(const std::string& name) {
  if (name == "empty") return FixtureSpec::Kind::kEmpty;
  if (name == "const_vel") return FixtureSpec::Kind::kConstVel;
  if (name == "platoon") return FixtureSpec::Kind::kPlatoon;
  if (name == "cut_in") return FixtureSpec::Kind::kCutIn;
  if (name == "free_flow") return FixtureSpec::Kind::kFreeFlow;
  if (name == "trap") return FixtureSpec::Kind::kTrap;
  throw ConfigError("unknown fixture kind: " + name);
}

void make_fixture(const FixtureSpec& spec, std::ostream& tracks,
                  std::ostream& meta) {
  const double w = spec.lane_width;
  std::vector<double> markings;
  for (int k = 0; k <= spec.lanes; ++k) markings.push_back(k * w);

  meta << "frameRate=" << fmt_double(spec.frame_rate) << "\n";
  if (spec.opposite_direction) {
    meta << "lowerLaneMarkings=\n";
    meta << "upperLaneMarkings=" << markings_to_string(markings) << "\n";
  } else {
    meta << "lowerLaneMarkings=" << markings_to_string(markings) << "\n";
    meta << "upperLaneMarkings=\n";
  }

  tracks << "frame,id,x,y,width,height,xVelocity,yVelocity,laneId\n";
  if (spec.kind == FixtureSpec::Kind::kEmpty) return;

  const int frames = static_cast<int>(spec.duration_s * spec.frame_rate);
  const double dtf = 1.0 / spec.frame_rate;
  Rng rng(spec.seed);

  struct Veh {
    int id, lane;
    double x0, v;
    double cut_time = -1.0;  // cut-in start, s
    int cut_to = -1;
  };
  std::vector<Veh> vehicles;
  switch (spec.kind) {
    case FixtureSpec::Kind::kConstVel: {
      for (int n = 0; n < spec.vehicles; ++n)
        vehicles.push_back({n + 1, n % spec.lanes, 40.0 * n, 8.0 + n, -1.0, -1});
      break;
    }
    case FixtureSpec::Kind::kPlatoon: {
      for (int n = 0; n < spec.vehicles; ++n)
        vehicles.push_back({n + 1, 1 % spec.lanes, 30.0 * n, 10.0, -1.0, -1});
      break;
    }
    case FixtureSpec::Kind::kCutIn: {
      vehicles.push_back({1, 1, 0.0, 10.0, -1.0, -1});    // ego candidate
      vehicles.push_back({2, 1, 80.0, 10.0, -1.0, -1});   // distant leader
      vehicles.push_back({3, 0, 18.0, 9.5, 5.0, 1});      // cuts in at t = 5 s
      break;
    }
    case FixtureSpec::Kind::kFreeFlow: {
      for (int n = 0; n < spec.vehicles; ++n) {
        const int lane = static_cast<int>(rng.uniform_int((std::uint64_t)spec.lanes));
        vehicles.push_back({n + 1, lane, rng.uniform(0.0, 300.0),
                            rng.uniform(8.0, 14.0), -1.0, -1});
      }
      break;
    }
    case FixtureSpec::Kind::kTrap: {
      // stopped leader 25 m ahead of a 14 m/s ego: braking distance at the
      // -3 m/s^2 command limit exceeds the gap, so a collision is forced
      vehicles.push_back({1, 1, 0.0, 14.0, -1.0, -1});
      vehicles.push_back({2, 1, 30.0, 0.0, -1.0, -1});
      break;
    }
    case FixtureSpec::Kind::kEmpty:
      break;
  }

  for (int f = 0; f < frames; ++f) {
    const double t = f * dtf;
    for (const auto& v : vehicles) {
      double y_lane = (v.lane + 0.5) * w;
      double vy = 0.0;
      if (v.cut_time >= 0.0 && v.cut_to >= 0) {
        const double ramp = 3.0;  // s
        const double target = (v.cut_to + 0.5) * w;
        if (t >= v.cut_time && t < v.cut_time + ramp) {
          const double u = (t - v.cut_time) / ramp;
          vy = (target - y_lane) / ramp;
          y_lane = y_lane + (target - y_lane) * u;
        } else if (t >= v.cut_time + ramp) {
          y_lane = target;
        }
      }
      double x = v.x0 + v.v * t;
      double y = y_lane;
      double vx = v.v, vyo = vy;
      if (spec.opposite_direction) {
        x = -x;
        y = markings.back() - y;
        vx = -vx;
        vyo = -vyo;
      }
      const int lane_id = std::clamp(static_cast<int>(std::floor(
                                        (spec.opposite_direction
                                             ? markings.back() - y
                                             : y) / w)),
                                     0, spec.lanes - 1);
      tracks << f << "," << v.id << "," << fmt_double(x) << "," << fmt_double(y)
             << ",5,2," << fmt_double(vx) << "," << fmt_double(vyo) << ","
             << lane_id << "\n";
    }
  }
}

void write_fixture_files(const FixtureSpec& spec,
                         const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream tf(dir / "tracks.csv");
  std::ofstream mf(dir / "recordingMeta.txt");
  if (!tf || !mf) throw DataError("cannot write fixture files in " + dir.string());
  make_fixture(spec, tf, mf);
}

ControlFn agent_controller(const agent::MoecAgent& ag,
                           const trainer::Actuation& actuation, int lane_count) {
  const auto policy = trainer::greedy_policy(ag, lane_count);
  return [policy, actuation](const env::EgoObservation& obs,
                             const env::VehicleState& ego, double speed,
                             int) -> env::EgoControls {
    return actuation.controls_for(ego, speed, policy(obs));
  };
}

ControlFn copy_controller(const VehicleTrack& track, double dt, double wheelbase) {
  return [&track, dt, wheelbase](const env::EgoObservation&,
                                 const env::VehicleState&, double speed,
                                 int step) -> env::EgoControls {
    const int k0 = static_cast<int>(std::llround(track.t0 / dt));
    const int idx = step - k0;
    const int last = static_cast<int>(track.samples.size()) - 1;
    if (idx < 0 || idx >= last) return {0.0, 0.0};
    const auto& a = track.samples[static_cast<std::size_t>(idx)];
    const auto& b = track.samples[static_cast<std::size_t>(idx + 1)];
    const double va = std::hypot(a.vx, a.vy);
    const double vb = std::hypot(b.vx, b.vy);
    env::EgoControls c;
    c.accel = (vb - va) / dt;
    const double ha = std::atan2(a.vy, std::max(a.vx, 0.1));
    const double hb = std::atan2(b.vy, std::max(b.vx, 0.1));
    const double rate = (hb - ha) / dt;
    c.steer = speed > 0.1 ? std::atan(rate * wheelbase / speed) : 0.0;
    return c;
  };
}

int pick_ego(const Recording& rec, double min_span_s, Rng& rng) {
  std::vector<int> candidates;
  for (const auto& t : rec.tracks)
    if ((t.samples.size() - 1) * rec.dt >= min_span_s) candidates.push_back(t.id);
  if (candidates.empty())
    throw DataError("no track persists long enough to substitute the agent");
  return candidates[rng.uniform_int(candidates.size())];
}

ReplayResult replay_episode(const Recording& rec, int ego_id,
                            const ControlFn& controller,
                            const ReplayConfig& cfg) {
  const VehicleTrack* ego_track = rec.find(ego_id);
  if (!ego_track) throw DataError("ego id not present in recording: " +
                                  std::to_string(ego_id));
  const double dt = rec.dt;
  const int k_start = static_cast<int>(std::llround(ego_track->t0 / dt));
  const int k_end = static_cast<int>(std::floor(rec.duration / dt + 1e-9));

  env::VehicleState ego;
  const auto& s0 = ego_track->samples.front();
  ego.x = s0.x;
  ego.y = s0.y;
  ego.heading = std::atan2(s0.vy, std::max(s0.vx, 0.1));
  double speed = std::hypot(s0.vx, s0.vy);
  ego.vx = s0.vx;
  ego.vy = s0.vy;
  ego.length = ego_track->length;
  ego.width = ego_track->width;
  ego.lane_id = rec.road.lane_at(ego.y);

  ReplayResult res;
  res.trace.dt = dt;
  res.trajectory_csv = env::trajectory_csv_header();
  res.sv_trajectory_csv = env::trajectory_csv_header();
  res.reward_csv = "step,r_safe,r_eff,r_comf,r_int,r_gen,r_all\n";

  bool collided = false, off_road = false;
  const int cap_steps = static_cast<int>(cfg.episode_cap_s / dt);

  for (int k = k_start; k < k_end && (k - k_start) < cap_steps; ++k) {
    // replayed SVs present at this step (same roadway as the ego)
    std::vector<env::VehicleState> svs;
    std::vector<double> accels;
    for (const auto& t : rec.tracks) {
      if (t.id == ego_id || t.region != ego_track->region) continue;
      if (!t.active_at(k, dt)) continue;
      const auto& p = t.at(k, dt);
      env::VehicleState sv;
      sv.x = p.x;
      sv.y = p.y;
      sv.vx = p.vx;
      sv.vy = p.vy;
      sv.heading = std::atan2(p.vy, std::max(std::abs(p.vx), 0.1));
      sv.length = t.length;
      sv.width = t.width;
      sv.lane_id = rec.road.lane_at(p.y);
      svs.push_back(sv);
      const bool has_prev = t.active_at(k - 1, dt);
      accels.push_back(has_prev ? (p.vx - t.at(k - 1, dt).vx) / dt : 0.0);
    }

    std::array<double, 6> slot_accels{};
    const auto obs = env::extract_observation(ego, svs, accels, rec.road,
                                              cfg.obs_back, cfg.obs_fwd,
                                              &slot_accels);

    auto controls = controller(obs, ego, speed, k);
    controls.steer = saturate(controls.steer, -cfg.steer_max, cfg.steer_max);
    controls.accel = saturate(controls.accel, -cfg.accel_limit, cfg.accel_limit);

    // same kinematic bicycle update as the simulator
    speed = std::max(0.0, speed + controls.accel * dt);
    ego.heading += speed / cfg.wheelbase * std::tan(controls.steer) * dt;
    ego.x += speed * std::cos(ego.heading) * dt;
    ego.y += speed * std::sin(ego.heading) * dt;
    ego.vx = speed * std::cos(ego.heading);
    ego.vy = speed * std::sin(ego.heading);
    ego.lane_id = rec.road.lane_at(ego.y);

    off_road = ego.y < 0.0 || ego.y > rec.road.width_total();
    collided = false;
    for (const auto& sv : svs) {
      if (std::abs(sv.x - ego.x) > 12.0) continue;
      if (env::rectangles_collide(ego, sv, rec.road)) {
        collided = true;
        break;
      }
    }
    const bool f_unsafe = collided || off_road;

    const double ttc = env::ttc_same_lane_leader(ego, svs, rec.road, cfg.reward.ttc_max);
    const auto rv = reward::compute(f_unsafe, ttc, speed, controls.steer,
                                    controls.accel, slot_accels, cfg.reward);
    const double r = reward::r_all(rv, cfg.reward.omega);

    res.trace.r_all.push_back(r);
    res.trace.speed.push_back(speed);
    res.trace.steer.push_back(controls.steer);
    res.trace.accel.push_back(controls.accel);
    res.trace.lane.push_back(ego.lane_id);
    res.ego_states.push_back(ego);

    const int step = k - k_start;
    res.trajectory_csv += env::trajectory_csv_row(
        step, {0, ego, controls.steer, controls.accel}, f_unsafe);
    int sv_row_id = 1;
    for (const auto& sv : svs) {
      const auto row = env::trajectory_csv_row(step, {sv_row_id++, sv, 0.0, 0.0}, false);
      res.trajectory_csv += row;
      res.sv_trajectory_csv += row;
    }
    res.reward_csv += std::to_string(step);
    for (double v : {rv.r_safe, rv.r_eff, rv.r_comf, rv.r_int, rv.r_gen, r})
      res.reward_csv += "," + fmt_double(v);
    res.reward_csv += "\n";

    if (f_unsafe) break;
  }

  res.metrics = trainer::finalize_metrics(res.trace, collided, off_road);
  return res;
}

}  // namespace moec::highd
