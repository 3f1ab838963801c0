#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <vector>

#include "moec/action.hpp"
#include "moec/env.hpp"
#include "moec/nn.hpp"

namespace moec::agent {

constexpr int kNumOptions = action::kNumOptions;
constexpr int kObsDim = env::EgoObservation::kSize;
constexpr int kContDim = 2 * kNumOptions;  // (l, acc) per option

struct AgentConfig {
  int n_objectives = 2;  // N
  int m_critics = 6;     // M
  std::vector<double> omega{0.4, 0.6};
  std::array<double, 4> lambda{0.5, 0.2, 0.2, 0.1};
  double gamma = 0.9;
  double alpha = 0.01;   // critic step size
  double beta = 0.001;   // actor step size
  double tau = 0.005;
  std::vector<int> hidden{256, 256, 256};
  action::BoundsConfig bounds;
  double lane_width = 4.0;

  void validate() const;
};

// One replayed interaction. The action is kept as the stored option index
// plus the executed continuous-parameter vector for all options.
struct Transition {
  env::EgoObservation s;
  env::EgoObservation s_next;
  int option = 1;
  std::array<double, kContDim> a_all{};
  std::array<double, 2> rewards{};  // r_1..r_N
  bool done = false;
};

using Batch = std::vector<const Transition*>;

struct TdTargets {
  // y_ij indexed [t * N * M + i * M + j]; y_i indexed [t * N + i].
  std::vector<double> y_ij;
  std::vector<double> y_i;
  std::vector<double> y_all;
};

struct CriticLossResult {
  std::array<double, 4> terms{};  // L_ij, L_i, L_all, L_conv (batch means)
  double combined = 0.0;
  std::vector<double> param_grad;
};

struct ActorLossResult {
  double loss = 0.0;
  std::vector<double> param_grad;
};

struct UpdateDiagnostics {
  double critic_loss_mean = 0.0;
  std::array<double, 4> critic_terms{};
  double actor_loss = 0.0;
  double critic_grad_norm = 0.0;
  double actor_grad_norm = 0.0;
  bool finite = true;
};

class MoecAgent {
 public:
  MoecAgent(AgentConfig cfg, std::uint64_t seed);

  // Continuous parameters for every option, squashed into the state's
  // bounds: [l_LLC, acc_LLC, l_LK, acc_LK, l_RLC, acc_RLC].
  std::array<double, kContDim> actor_forward(std::span<const double> obs) const;
  std::array<double, kContDim> actor_target_forward(std::span<const double> obs) const;

  // Per-option value, the plain MLP over the concatenated (s, a_all) input.
  std::array<double, kNumOptions> critic_forward(int i, int j,
                                                 std::span<const double> obs,
                                                 std::span<const double> a_all) const;
  std::array<double, kNumOptions> critic_target_forward(int i, int j,
                                                        std::span<const double> obs,
                                                        std::span<const double> a_all) const;

  // Ensemble mean per option for objective i.
  std::array<double, kNumOptions> q_bar(int i, std::span<const double> obs,
                                        std::span<const double> a_all) const;
  // Weighted sum over objectives of the ensemble means.
  std::array<double, kNumOptions> q_all(std::span<const double> obs,
                                        std::span<const double> a_all) const;

  // All online critic outputs at once: out[i * M + j][o]. Cheaper than
  // separate critic_forward calls in the selection/uncertainty loops.
  void critic_values(std::span<const double> obs, std::span<const double> a_all,
                     std::vector<std::array<double, kNumOptions>>& out) const;

  TdTargets td_targets(const Batch& batch) const;
  CriticLossResult critic_loss(int i, int j, const Batch& batch,
                               const TdTargets& targets) const;
  ActorLossResult actor_loss(const Batch& batch) const;
  // DA-Mo trains critics only; update_actor=false skips the actor pass.
  UpdateDiagnostics update(const Batch& batch, bool update_actor = true);

  action::ActionBounds bounds_for_obs(std::span<const double> obs) const;

  void save(const std::filesystem::path& dir, std::int64_t train_step) const;
  static MoecAgent load(const std::filesystem::path& dir);
  std::int64_t train_step() const { return train_step_; }

  const AgentConfig& config() const { return cfg_; }
  const nn::MlpParams& critic_params(int i, int j) const;
  const nn::MlpParams& critic_target_params(int i, int j) const;
  // Fixture access for tests and surgery; targets are separate copies.
  nn::MlpParams& mutable_critic_params(int i, int j);
  nn::MlpParams& mutable_critic_target_params(int i, int j);
  nn::MlpParams& mutable_actor_params() { return actor_.params; }
  nn::MlpParams& mutable_actor_target_params() { return actor_target_; }

  // Gradient of a scalar with output-side gradient og w.r.t. the critic's
  // action-slice input, accumulated into grad (length kContDim).
  void critic_action_grad(int i, int j, std::span<const double> obs,
                          std::span<const double> a_all,
                          std::span<const double> og,
                          std::span<double> grad) const;

 private:
  struct Net {
    nn::MlpParams params;
    nn::AdamState adam;
  };

  int critic_index(int i, int j) const { return i * cfg_.m_critics + j; }
  std::array<double, kContDim> map_actor_output(std::span<const double> raw,
                                                std::span<const double> obs) const;

  AgentConfig cfg_;
  std::uint64_t seed_ = 0;
  std::int64_t train_step_ = 0;
  Net actor_;
  nn::MlpParams actor_target_;
  std::vector<Net> critics_;
  std::vector<nn::MlpParams> critic_targets_;
};

// Typical magnitudes of the observation features (and the action dims);
// used to balance first-layer weights for raw, unnormalized inputs.
std::array<double, kObsDim> obs_feature_scales(const env::RoadSpec& road);
std::array<double, kContDim> action_feature_scales(const action::BoundsConfig& b);

}  // namespace moec::agent
