#include "moec/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace moec::trainer {

AblationMode ablation_mode_from_string(const std::string& name) {
  if (name == "full") return AblationMode::kFull;
  if (name == "hpa_mo") return AblationMode::kHpaMo;
  if (name == "hpa") return AblationMode::kHpa;
  if (name == "da_mo") return AblationMode::kDaMo;
  throw ConfigError("unknown ablation mode: " + name);
}

std::string ablation_mode_name(AblationMode mode) {
  switch (mode) {
    case AblationMode::kFull: return "full";
    case AblationMode::kHpaMo: return "hpa_mo";
    case AblationMode::kHpa: return "hpa";
    case AblationMode::kDaMo: return "da_mo";
  }
  return "?";
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw ConfigError("replay buffer capacity must be > 0");
  ring_.reserve(std::min<std::size_t>(capacity_, 1 << 16));
}

void ReplayBuffer::push(agent::Transition tr) {
  if (ring_.size() < capacity_) {
    ring_.push_back(std::move(tr));
  } else {
    ring_[head_] = std::move(tr);
    head_ = (head_ + 1) % capacity_;
  }
  ++inserted_;
}

agent::Batch ReplayBuffer::sample(std::size_t batch_size, Rng& rng) const {
  if (batch_size > ring_.size())
    throw ConfigError("replay sample larger than buffer contents");
  // partial Fisher-Yates over an index array
  std::vector<std::size_t> idx(ring_.size());
  std::iota(idx.begin(), idx.end(), 0);
  agent::Batch batch;
  batch.reserve(batch_size);
  for (std::size_t k = 0; k < batch_size; ++k) {
    const std::size_t pick = k + rng.uniform_int(idx.size() - k);
    std::swap(idx[k], idx[pick]);
    batch.push_back(&ring_[idx[k]]);
  }
  return batch;
}

void TrainConfig::validate() const {
  if (total_steps < 0) throw ConfigError("trainer: total_steps must be >= 0");
  if (batch_size < 1) throw ConfigError("trainer: batch_size must be >= 1");
  if (buffer_capacity < batch_size)
    throw ConfigError("trainer: buffer must hold at least one batch");
  if (warmup != 0 && warmup < batch_size)
    throw ConfigError("trainer: warmup must be >= batch_size");
  if (update_every < 1) throw ConfigError("trainer: update_every must be >= 1");
}

void RunSettings::validate() const {
  env.validate();
  reward.validate();
  agent.validate();
  explore.validate();
  train.validate();
  if (agent.n_objectives == 2) {
    if (std::abs(agent.omega[0] - reward.omega[0]) > 1e-12 ||
        std::abs(agent.omega[1] - reward.omega[1]) > 1e-12)
      throw ConfigError("agent omega and reward omega must agree");
  }
  if (std::abs(agent.lane_width - env.road.lane_width) > 1e-12)
    throw ConfigError("agent lane_width must match the road");
}

RunSettings ablation_settings(RunSettings base, AblationMode mode) {
  base.train.mode = mode;
  switch (mode) {
    case AblationMode::kFull:
      break;
    case AblationMode::kHpaMo:
      base.agent.m_critics = 1;
      break;
    case AblationMode::kHpa:
      base.agent.m_critics = 1;
      base.agent.n_objectives = 1;
      base.agent.omega = {1.0};
      break;
    case AblationMode::kDaMo:
      base.agent.m_critics = 1;
      break;
  }
  return base;
}

// ---------------------------------------------------------------- metrics

int lane_change_count(std::span<const int> lane_ids, double dt,
                      double debounce_s) {
  if (lane_ids.empty()) return 0;
  const int need = std::max(1, static_cast<int>(std::ceil(debounce_s / dt)));
  // stable segments: held for the debounce window or reaching the end
  std::vector<int> stable;
  int cur = lane_ids[0];
  int run = 1;
  for (std::size_t k = 1; k <= lane_ids.size(); ++k) {
    const bool end = (k == lane_ids.size());
    if (!end && lane_ids[k] == cur) {
      ++run;
      continue;
    }
    if (run >= need || end) {
      if (stable.empty() || stable.back() != cur) stable.push_back(cur);
    }
    if (!end) {
      cur = lane_ids[k];
      run = 1;
    }
  }
  int changes = 0;
  for (std::size_t k = 1; k < stable.size(); ++k)
    if (stable[k] != stable[k - 1]) ++changes;
  return changes;
}

EpisodeMetrics finalize_metrics(const EpisodeTrace& trace, bool collided,
                                bool off_road, double debounce_s) {
  EpisodeMetrics m;
  m.steps = static_cast<int>(trace.r_all.size());
  m.ar = mean_of(trace.r_all);
  m.avg_speed = mean_of(trace.speed);
  m.vs = population_variance(trace.steer);
  m.va = population_variance(trace.accel);
  m.nl = lane_change_count(trace.lane, trace.dt, debounce_s);
  m.collided = collided;
  m.off_road = off_road;
  return m;
}

Quartiles quartiles_of(std::vector<double> xs) {
  Quartiles q;
  if (xs.empty()) return q;
  std::sort(xs.begin(), xs.end());
  const auto at = [&](double p) {
    const double pos = p * (static_cast<double>(xs.size()) - 1.0);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, xs.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return xs[lo] * (1.0 - frac) + xs[hi] * frac;
  };
  q.min = xs.front();
  q.q1 = at(0.25);
  q.median = at(0.5);
  q.q3 = at(0.75);
  q.max = xs.back();
  return q;
}

MetricsAggregate aggregate_metrics(std::span<const EpisodeMetrics> eps) {
  MetricsAggregate agg;
  agg.episodes = static_cast<int>(eps.size());
  if (eps.empty()) return agg;
  std::vector<double> ar, as, vs, va;
  int collisions = 0;
  double nl = 0;
  for (const auto& m : eps) {
    ar.push_back(m.ar);
    as.push_back(m.avg_speed);
    vs.push_back(m.vs);
    va.push_back(m.va);
    nl += m.nl;
    if (m.collided) ++collisions;
  }
  agg.ar_mean = mean_of(ar);
  agg.as_mean = mean_of(as);
  agg.vs_mean = mean_of(vs);
  agg.va_mean = mean_of(va);
  agg.nl_mean = nl / static_cast<double>(eps.size());
  agg.cr_percent = 100.0 * collisions / static_cast<double>(eps.size());
  agg.ar_q = quartiles_of(ar);
  agg.as_q = quartiles_of(as);
  agg.vs_q = quartiles_of(vs);
  agg.va_q = quartiles_of(va);
  return agg;
}

std::string metrics_summary_table(const std::string& label,
                                  const MetricsAggregate& agg) {
  if (agg.episodes == 0)
    return label + ": no episodes evaluated (empty aggregate)\n";
  char buf[256];
  std::string out = "method        AR        AS        NL        VS        VA        CR\n";
  std::snprintf(buf, sizeof(buf),
                "%-10s %9.4f %9.3f %9.3f %9.5f %9.4f %8.2f%%\n", label.c_str(),
                agg.ar_mean, agg.as_mean, agg.nl_mean, agg.vs_mean, agg.va_mean,
                agg.cr_percent);
  out += buf;
  return out;
}

std::string metrics_csv_header() {
  return "episode,ar,as,nl,vs,va,collided,off_road,steps\n";
}

std::string metrics_csv_row(int episode, const EpisodeMetrics& m) {
  std::string row = std::to_string(episode);
  row += "," + fmt_double(m.ar) + "," + fmt_double(m.avg_speed) + "," +
         std::to_string(m.nl) + "," + fmt_double(m.vs) + "," + fmt_double(m.va) +
         "," + (m.collided ? std::string("1") : std::string("0")) + "," +
         (m.off_road ? std::string("1") : std::string("0")) + "," +
         std::to_string(m.steps) + "\n";
  return row;
}

// ------------------------------------------------------------- actuation

env::EgoControls Actuation::controls_for(const env::VehicleState& ego,
                                         double speed,
                                         const action::HybridAction& act) const {
  const auto exec =
      action::legalize(act.option, ego.lane_id, road.lane_count);
  env::EgoControls c;
  if (discrete_only) {
    const double target = road.lane_center(ego.lane_id) +
                          action::lateral_offset(exec, road.lane_width);
    c.steer = action::pid_steer(ego, target, pid);
    c.accel = saturate(v_target - speed, -accel_limit, accel_limit);
  } else {
    const auto path_cfg = path;
    const auto gp = action::build_path(ego, exec, act.path_length, road, path_cfg);
    c.steer = action::stanley_steer(ego, gp, stanley);
    c.accel = saturate(act.accel, -accel_limit, accel_limit);
  }
  return c;
}

PolicyFn greedy_policy(const agent::MoecAgent& ag, int lane_count) {
  return [&ag, lane_count](const env::EgoObservation& obs) {
    explore::ExploreConfig ecfg;
    Rng rng(0);  // greedy path never draws
    const auto res = explore::act(ag, obs.v, ecfg, 0.0, lane_count, rng,
                                  explore::Mode::kGreedy);
    return res.act;
  };
}

// --------------------------------------------------------------- training

namespace {

struct RewardSplit {
  reward::RewardVector rv;
  double all = 0.0;
  std::array<double, 2> per_objective{};
};

RewardSplit compute_rewards(const env::HighwayEnv& env,
                            const env::StepOutcome& out,
                            const env::EgoControls& controls,
                            const reward::RewardConfig& rcfg, int n_objectives) {
  RewardSplit rs;
  const double ttc = env.ttc_to_leader(rcfg.ttc_max);
  const auto accels = env.observed_sv_accels();
  rs.rv = reward::compute(out.f_unsafe, ttc, env.ego_speed(), controls.steer,
                          controls.accel, accels, rcfg);
  rs.all = reward::r_all(rs.rv, rcfg.omega);
  if (n_objectives == 2) {
    rs.per_objective = {rs.rv.r_safe, rs.rv.r_gen};
  } else {
    rs.per_objective = {rs.all, 0.0};
  }
  return rs;
}

// Random exploration used by the ablation baselines: Gaussian noise on the
// continuous parameters, epsilon-greedy on the option, both decaying on the
// uncertainty schedule. `forced_continuous` (DA-Mo) replaces the actor
// output entirely so selection, execution, and training see the same vector.
explore::ActResult random_explore_act(
    const agent::MoecAgent& ag, std::span<const double> obs, double varsigma,
    int lane_count, Rng& rng,
    const std::array<double, agent::kContDim>* forced_continuous) {
  explore::ActResult res;
  std::array<double, agent::kContDim> a;
  const auto b = ag.bounds_for_obs(obs);
  if (forced_continuous) {
    a = *forced_continuous;
  } else {
    a = ag.actor_forward(obs);
    for (int o = 0; o < agent::kNumOptions; ++o) {
      const double l_std = 0.5 * varsigma * (b.l_max - b.l_min) * 0.5;
      const double a_std = 0.5 * varsigma * (b.acc_max - b.acc_min) * 0.5;
      a[static_cast<std::size_t>(2 * o)] = saturate(
          a[static_cast<std::size_t>(2 * o)] + l_std * rng.normal(), b.l_min, b.l_max);
      a[static_cast<std::size_t>(2 * o + 1)] =
          saturate(a[static_cast<std::size_t>(2 * o + 1)] + a_std * rng.normal(),
                   b.acc_min, b.acc_max);
    }
  }
  int opt;
  if (rng.uniform01() < varsigma) {
    opt = static_cast<int>(rng.uniform_int(agent::kNumOptions));
    res.explored_branch = true;
  } else {
    const auto q = ag.q_all(obs, a);
    int best = -1;
    const int lane_id = static_cast<int>(obs[0]);
    for (int o = 0; o < agent::kNumOptions; ++o) {
      if (action::legalize(static_cast<action::Option>(o), lane_id, lane_count) !=
          static_cast<action::Option>(o))
        continue;
      if (best < 0 || q[static_cast<std::size_t>(o)] > q[static_cast<std::size_t>(best)])
        best = o;
    }
    opt = best < 0 ? 1 : best;
  }
  res.a_all = a;
  res.act = {static_cast<action::Option>(opt), a[static_cast<std::size_t>(2 * opt)],
             a[static_cast<std::size_t>(2 * opt + 1)]};
  return res;
}

// DA-Mo continuous parameters: fixed mid-range path length and a plain
// speed-tracking acceleration, for every option.
std::array<double, agent::kContDim> fixed_continuous(const agent::MoecAgent& ag,
                                                     std::span<const double> obs,
                                                     double v_target,
                                                     double accel_limit) {
  const auto b = ag.bounds_for_obs(obs);
  std::array<double, agent::kContDim> a{};
  const double l_mid = 0.5 * (b.l_min + b.l_max);
  const double acc = saturate(v_target - obs[4], -accel_limit, accel_limit);
  for (int o = 0; o < agent::kNumOptions; ++o) {
    a[static_cast<std::size_t>(2 * o)] = l_mid;
    a[static_cast<std::size_t>(2 * o + 1)] = acc;
  }
  return a;
}

}  // namespace

Trainer::Trainer(RunSettings settings)
    : cfg_(std::move(settings)), agent_(cfg_.agent, cfg_.seed) {
  cfg_.validate();
}

TrainResult Trainer::train() {
  TrainResult result;
  const TrainConfig& tc = cfg_.train;
  const bool da_mo = tc.mode == AblationMode::kDaMo;
  const bool random_explore = tc.mode != AblationMode::kFull;

  env::HighwayEnv env(cfg_.env);
  ReplayBuffer buffer(static_cast<std::size_t>(tc.buffer_capacity));
  Rng explore_rng(cfg_.seed ^ 0xA5A5A5A5ULL);
  Rng sample_rng(cfg_.seed ^ 0x5A5A5A5AULL);
  Rng env_seeder(cfg_.seed ^ 0xE1E1E1E1ULL);

  Actuation actuation{cfg_.env.road, cfg_.path, cfg_.stanley, cfg_.pid,
                      da_mo, cfg_.reward.v_target, cfg_.env.accel_limit};

  std::string uncertainty_trace = explore::uncertainty_trace_header();
  std::string reward_trace =
      "step,r_safe,r_eff,r_comf,r_int,r_gen,r_all\n";

  double varsigma = cfg_.explore.weight_start;
  const double decay = cfg_.explore.decay_multiplier();
  int episode = 0;
  int nonfinite_streak = 0;

  env::EgoObservation obs = env.reset(env_seeder.next_u64(), cfg_.env.density);
  result.log.reserve(static_cast<std::size_t>(tc.total_steps));

  for (int step = 0; step < tc.total_steps; ++step) {
    // --- select hybrid action (Algorithm 1 lines 4-6)
    explore::ActResult sel;
    if (da_mo) {
      const auto fixed = fixed_continuous(agent_, obs.v, cfg_.reward.v_target,
                                          cfg_.env.accel_limit);
      sel = random_explore_act(agent_, obs.v, varsigma,
                               cfg_.env.road.lane_count, explore_rng, &fixed);
    } else if (random_explore) {
      sel = random_explore_act(agent_, obs.v, varsigma,
                               cfg_.env.road.lane_count, explore_rng, nullptr);
    } else {
      sel = explore::act(agent_, obs.v, cfg_.explore, varsigma,
                         cfg_.env.road.lane_count, explore_rng,
                         explore::Mode::kExplore);
    }

    // --- abstract guidance -> concrete controls (lines 7-8)
    const auto controls = actuation.controls_for(env.ego(), env.ego_speed(), sel.act);
    const auto out = env.step(controls);
    const auto rs = compute_rewards(env, out, controls, cfg_.reward,
                                    cfg_.agent.n_objectives);

    agent::Transition tr;
    tr.s = obs;
    tr.s_next = out.obs;
    tr.option = static_cast<int>(sel.act.option);
    tr.a_all = sel.a_all;
    tr.rewards = rs.per_objective;
    tr.done = out.f_unsafe;
    buffer.push(std::move(tr));

    // --- learning (lines 11-21)
    StepLog log;
    log.step = step;
    log.episode = episode;
    log.reward_all = rs.all;
    log.r_safe = rs.rv.r_safe;
    log.r_gen = rs.rv.r_gen;
    log.sigma_state = sel.state_uncertainty;
    log.varsigma = varsigma;
    if (static_cast<int>(buffer.size()) >= tc.effective_warmup() &&
        step % tc.update_every == 0) {
      const auto batch = buffer.sample(static_cast<std::size_t>(tc.batch_size),
                                       sample_rng);
      const auto diag = agent_.update(batch, /*update_actor=*/!da_mo);
      log.critic_loss = diag.critic_loss_mean;
      log.actor_loss = diag.actor_loss;
      if (!diag.finite || !std::isfinite(diag.critic_loss_mean) ||
          !std::isfinite(diag.actor_loss)) {
        if (++nonfinite_streak > tc.nonfinite_limit)
          throw std::runtime_error(
              "training aborted: non-finite losses for " +
              std::to_string(nonfinite_streak) + " consecutive updates at step " +
              std::to_string(step));
      } else {
        nonfinite_streak = 0;
      }
    }

    if (tc.write_uncertainty_trace)
      uncertainty_trace += explore::uncertainty_trace_row(step, sel);
    if (tc.write_reward_trace) {
      reward_trace += std::to_string(step);
      for (double v : {rs.rv.r_safe, rs.rv.r_eff, rs.rv.r_comf, rs.rv.r_int,
                       rs.rv.r_gen, rs.all})
        reward_trace += "," + fmt_double(v);
      reward_trace += "\n";
    }

    // --- decay and episode bookkeeping (lines 22-25)
    varsigma = std::max(varsigma * decay, cfg_.explore.weight_floor);
    const bool truncated = out.elapsed_s >= cfg_.env.episode_cap_s - 1e-9;
    if (out.f_unsafe || truncated) {
      result.episode_end_step.push_back(step);
      result.episode_collision.push_back(out.collision);
      ++result.episodes;
      if (out.f_unsafe) ++result.unsafe_episodes;
      if (out.collision) ++result.collision_episodes;
      if (out.off_road) ++result.offroad_episodes;
      ++episode;
      obs = env.reset(env_seeder.next_u64(), cfg_.env.density);
    } else {
      obs = out.obs;
    }
    log.cr_running = result.episodes > 0
                         ? 100.0 * result.collision_episodes / result.episodes
                         : 0.0;
    result.log.push_back(log);

    if (!cfg_.out_dir.empty() && tc.checkpoint_every > 0 &&
        (step + 1) % tc.checkpoint_every == 0) {
      char name[64];
      std::snprintf(name, sizeof(name), "checkpoint_step%08d", step + 1);
      agent_.save(std::filesystem::path(cfg_.out_dir) / name, step + 1);
    }
  }

  if (!cfg_.out_dir.empty()) {
    const std::filesystem::path out(cfg_.out_dir);
    std::filesystem::create_directories(out);
    result.checkpoint_dir = out / "checkpoint_final";
    agent_.save(result.checkpoint_dir, tc.total_steps);

    std::ofstream lf(out / "train_log.csv");
    lf << train_log_csv_header();
    for (const auto& l : result.log) lf << train_log_csv_row(l);
    lf.close();

    if (tc.write_uncertainty_trace) {
      std::ofstream uf(out / "uncertainty_trace.csv");
      uf << uncertainty_trace;
    }
    if (tc.write_reward_trace) {
      std::ofstream rf(out / "reward_trace.csv");
      rf << reward_trace;
    }
  }
  return result;
}

std::string train_log_csv_header() {
  return "step,episode,total_reward,r_safe,r_gen,cr_running,sigma2_state,"
         "critic_loss,actor_loss,varsigma\n";
}

std::string train_log_csv_row(const StepLog& l) {
  std::string row = std::to_string(l.step) + "," + std::to_string(l.episode);
  for (double v : {l.reward_all, l.r_safe, l.r_gen, l.cr_running, l.sigma_state,
                   l.critic_loss, l.actor_loss, l.varsigma})
    row += "," + fmt_double(v);
  row += "\n";
  return row;
}

// ------------------------------------------------------------- evaluation

EpisodeMetrics run_sim_episode(env::HighwayEnv& env, std::uint64_t seed,
                               const PolicyFn& policy, const Actuation& act,
                               const reward::RewardConfig& rcfg,
                               EpisodeTrace* trace_out,
                               EpisodeArtifacts* artifacts) {
  EpisodeTrace trace;
  trace.dt = env.config().dt;
  env::EgoObservation obs = env.reset(seed);
  if (artifacts) {
    artifacts->trajectory_csv = env::trajectory_csv_header();
    artifacts->reward_csv = "step,r_safe,r_eff,r_comf,r_int,r_gen,r_all\n";
  }
  bool collided = false, off_road = false;
  for (int step = 0;; ++step) {
    const auto hybrid = policy(obs);
    const auto controls = act.controls_for(env.ego(), env.ego_speed(), hybrid);
    const auto out = env.step(controls);
    const double ttc = env.ttc_to_leader(rcfg.ttc_max);
    const auto accels = env.observed_sv_accels();
    const auto rv = reward::compute(out.f_unsafe, ttc, env.ego_speed(),
                                    controls.steer, controls.accel, accels, rcfg);
    const double r = reward::r_all(rv, rcfg.omega);

    trace.r_all.push_back(r);
    trace.speed.push_back(env.ego_speed());
    trace.steer.push_back(controls.steer);
    trace.accel.push_back(controls.accel);
    trace.lane.push_back(env.ego().lane_id);

    if (artifacts) {
      for (const auto& row : env.snapshot())
        artifacts->trajectory_csv +=
            env::trajectory_csv_row(step, row, row.id == 0 && out.f_unsafe);
      artifacts->reward_csv += std::to_string(step);
      for (double v : {rv.r_safe, rv.r_eff, rv.r_comf, rv.r_int, rv.r_gen, r})
        artifacts->reward_csv += "," + fmt_double(v);
      artifacts->reward_csv += "\n";
    }

    obs = out.obs;
    if (out.f_unsafe) {
      collided = out.collision;
      off_road = out.off_road;
      break;
    }
    if (out.elapsed_s >= env.config().episode_cap_s - 1e-9) break;
  }
  const auto metrics = finalize_metrics(trace, collided, off_road);
  if (trace_out) *trace_out = std::move(trace);
  return metrics;
}

MetricsAggregate evaluate_simulator(const agent::MoecAgent& ag,
                                    const RunSettings& settings, int episodes,
                                    std::uint64_t seed,
                                    const std::string& out_dir,
                                    bool write_traces,
                                    std::vector<EpisodeMetrics>* per_episode) {
  std::vector<EpisodeMetrics> eps;
  const auto policy = greedy_policy(ag, settings.env.road.lane_count);
  Actuation actuation{settings.env.road, settings.path, settings.stanley,
                      settings.pid,
                      settings.train.mode == AblationMode::kDaMo,
                      settings.reward.v_target, settings.env.accel_limit};
  std::filesystem::path out(out_dir);
  if (!out_dir.empty()) std::filesystem::create_directories(out);
  for (int ep = 0; ep < episodes; ++ep) {
    env::HighwayEnv env(settings.env);
    EpisodeArtifacts art;
    const auto m =
        run_sim_episode(env, seed + static_cast<std::uint64_t>(ep), policy,
                        actuation, settings.reward, nullptr,
                        write_traces ? &art : nullptr);
    if (write_traces && !out_dir.empty()) {
      char name[64];
      std::snprintf(name, sizeof(name), "ep%04d", ep);
      std::ofstream tf(out / (std::string(name) + "_trajectory.csv"));
      tf << art.trajectory_csv;
      std::ofstream rf(out / (std::string(name) + "_rewards.csv"));
      rf << art.reward_csv;
    }
    eps.push_back(m);
  }
  const auto agg = aggregate_metrics(eps);
  if (!out_dir.empty()) {
    std::ofstream mf(out / "metrics.csv");
    mf << metrics_csv_header();
    for (std::size_t i = 0; i < eps.size(); ++i)
      mf << metrics_csv_row(static_cast<int>(i), eps[i]);
    mf.close();
    std::ofstream sf(out / "summary.txt");
    sf << metrics_summary_table("agent", agg);
    std::ofstream bf(out / "metrics_box.csv");
    bf << "metric,min,q1,median,q3,max\n";
    const auto box = [&](const char* name, const Quartiles& q) {
      bf << name << "," << fmt_double(q.min) << "," << fmt_double(q.q1) << ","
         << fmt_double(q.median) << "," << fmt_double(q.q3) << ","
         << fmt_double(q.max) << "\n";
    };
    box("ar", agg.ar_q);
    box("as", agg.as_q);
    box("vs", agg.vs_q);
    box("va", agg.va_q);
  }
  if (per_episode) *per_episode = std::move(eps);
  return agg;
}

}  // namespace moec::trainer
