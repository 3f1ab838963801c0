#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "moec/agent.hpp"
#include "moec/explore.hpp"
#include "moec/reward.hpp"

namespace moec::trainer {

enum class AblationMode { kFull, kHpaMo, kHpa, kDaMo };
AblationMode ablation_mode_from_string(const std::string& name);
std::string ablation_mode_name(AblationMode mode);

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);
  void push(agent::Transition tr);
  std::size_t size() const { return ring_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t inserted() const { return inserted_; }
  // Uniform sample without replacement within the batch.
  agent::Batch sample(std::size_t batch_size, Rng& rng) const;
  const agent::Transition& slot(std::size_t i) const { return ring_[i]; }

 private:
  std::vector<agent::Transition> ring_;
  std::size_t capacity_;
  std::size_t head_ = 0;
  std::uint64_t inserted_ = 0;
};

struct TrainConfig {
  int total_steps = 200000;
  int batch_size = 256;
  int buffer_capacity = 40000;
  int warmup = 0;  // 0 -> 4 * batch_size
  int update_every = 1;
  int checkpoint_every = 0;  // 0 -> final checkpoint only
  int nonfinite_limit = 10;
  bool write_uncertainty_trace = false;
  bool write_reward_trace = false;
  AblationMode mode = AblationMode::kFull;

  int effective_warmup() const { return warmup > 0 ? warmup : 4 * batch_size; }
  void validate() const;
};

struct RunSettings {
  env::EnvConfig env;
  reward::RewardConfig reward;
  agent::AgentConfig agent;
  explore::ExploreConfig explore;
  action::PathConfig path;
  action::StanleyConfig stanley;
  action::PidConfig pid;
  TrainConfig train;
  std::uint64_t seed = 1;
  std::string out_dir;  // empty: keep everything in memory

  void validate() const;
};

// Configuration deltas of the ablation baselines.
RunSettings ablation_settings(RunSettings base, AblationMode mode);

struct StepLog {
  int step = 0;
  int episode = 0;
  double reward_all = 0.0;
  double r_safe = 0.0;
  double r_gen = 0.0;
  double cr_running = 0.0;  // percent
  double sigma_state = 0.0;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double varsigma = 0.0;
};

struct TrainResult {
  std::vector<StepLog> log;
  int episodes = 0;
  int unsafe_episodes = 0;
  int collision_episodes = 0;
  int offroad_episodes = 0;
  std::vector<int> episode_end_step;
  std::vector<bool> episode_collision;
  std::filesystem::path checkpoint_dir;
};

class Trainer {
 public:
  explicit Trainer(RunSettings settings);
  TrainResult train();
  const agent::MoecAgent& trained_agent() const { return agent_; }
  agent::MoecAgent& mutable_agent() { return agent_; }

 private:
  RunSettings cfg_;
  agent::MoecAgent agent_;
};

// ---------------------------------------------------------------- metrics

struct EpisodeMetrics {
  double ar = 0.0;        // mean per-step total reward
  double avg_speed = 0.0; // m/s
  int nl = 0;             // debounced lane changes
  double vs = 0.0;        // variance of steering commands, rad^2
  double va = 0.0;        // variance of acceleration commands, m^2/s^4
  bool collided = false;
  bool off_road = false;
  int steps = 0;
};

struct Quartiles {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
};

struct MetricsAggregate {
  int episodes = 0;
  double ar_mean = 0, as_mean = 0, nl_mean = 0, vs_mean = 0, va_mean = 0;
  double cr_percent = 0;
  Quartiles ar_q, as_q, vs_q, va_q;
};

// Lane-change transitions that persist for the debounce window (or to the
// end of the trajectory).
int lane_change_count(std::span<const int> lane_ids, double dt,
                      double debounce_s = 1.0);

struct EpisodeTrace {
  double dt = 0.1;
  std::vector<double> r_all, speed, steer, accel;
  std::vector<int> lane;
};

EpisodeMetrics finalize_metrics(const EpisodeTrace& trace, bool collided,
                                bool off_road, double debounce_s = 1.0);

MetricsAggregate aggregate_metrics(std::span<const EpisodeMetrics> eps);
Quartiles quartiles_of(std::vector<double> xs);

// Table-shaped summary: AR, AS, NL, VS, VA, CR.
std::string metrics_summary_table(const std::string& label,
                                  const MetricsAggregate& agg);
std::string metrics_csv_header();
std::string metrics_csv_row(int episode, const EpisodeMetrics& m);

// ------------------------------------------------------------- evaluation

using PolicyFn = std::function<action::HybridAction(const env::EgoObservation&)>;

PolicyFn greedy_policy(const agent::MoecAgent& ag, int lane_count);

// Hybrid action -> low-level controls. discrete_only switches to the PID
// lateral controller with a fixed-length path ignored (DA-Mo).
struct Actuation {
  env::RoadSpec road;
  action::PathConfig path;
  action::StanleyConfig stanley;
  action::PidConfig pid;
  bool discrete_only = false;
  double v_target = 12.0;  // speed-tracking accel rule, DA-Mo
  double accel_limit = 3.0;

  env::EgoControls controls_for(const env::VehicleState& ego, double speed,
                                const action::HybridAction& act) const;
};

struct EpisodeArtifacts {
  std::string trajectory_csv;
  std::string reward_csv;
};

EpisodeMetrics run_sim_episode(env::HighwayEnv& env, std::uint64_t seed,
                               const PolicyFn& policy, const Actuation& act,
                               const reward::RewardConfig& rcfg,
                               EpisodeTrace* trace_out,
                               EpisodeArtifacts* artifacts);

MetricsAggregate evaluate_simulator(const agent::MoecAgent& ag,
                                    const RunSettings& settings, int episodes,
                                    std::uint64_t seed,
                                    const std::string& out_dir,
                                    bool write_traces,
                                    std::vector<EpisodeMetrics>* per_episode);

std::string train_log_csv_header();
std::string train_log_csv_row(const StepLog& l);

}  // namespace moec::trainer
