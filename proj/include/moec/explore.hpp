#pragma once

#include <array>
#include <vector>

#include "moec/agent.hpp"

namespace moec::explore {

struct ExploreConfig {
  int candidate_count = 10;     // K
  double weight_start = 1.0;    // varsigma schedule endpoints
  double weight_floor = 0.001;
  double threshold = 0.05;      // sigma^2_{e,th}
  int schedule_steps = 200000;  // steps over which the weight reaches the floor

  // Per-step multiplier of the exponential decay from start to floor.
  double decay_multiplier() const;
  void validate() const;
};

struct UncertaintyReport {
  // Population variance over the ensemble, per objective and option.
  std::vector<std::array<double, agent::kNumOptions>> per_objective;
  // Objective-weighted variance per option.
  std::array<double, agent::kNumOptions> per_option{};
  // Mean over options: the state-level uncertainty.
  double state_level = 0.0;
  // Gradient of the weighted variance w.r.t. the continuous-parameter
  // vector, summed over the option heads.
  std::array<double, agent::kContDim> grad{};
};

UncertaintyReport uncertainty(const agent::MoecAgent& agent,
                              std::span<const double> obs,
                              std::span<const double> a_all,
                              bool with_grad = true);

// Probabilities proportional to exp(x); stable under shifting.
std::vector<double> softmax(std::span<const double> x);

// Candidate actions mu + (k * varsigma / K) * grad for k = 0..K, each
// saturated into [lo, hi] per dimension. Generic over dimension.
std::vector<std::vector<double>> candidate_set(std::span<const double> mu,
                                               std::span<const double> grad,
                                               std::span<const double> lo,
                                               std::span<const double> hi,
                                               int k_count, double varsigma);

// Per-dimension bounds of the 6-dim parameter vector.
void bounds_arrays(const action::ActionBounds& b,
                   std::array<double, agent::kContDim>& lo,
                   std::array<double, agent::kContDim>& hi);

// For each option independently, adopt the parameters of the candidate that
// maximizes that option's weighted variance (ties toward the lowest index,
// i.e. toward the actor output).
std::array<double, agent::kContDim> select_continuous(
    const agent::MoecAgent& agent, std::span<const double> obs,
    const std::vector<std::vector<double>>& candidates);

// Thresholded softmax selection of the discrete option; greedy branch masks
// lane changes that would leave the road.
int select_discrete(const agent::MoecAgent& agent, std::span<const double> obs,
                    std::span<const double> a_sel,
                    const UncertaintyReport& report_at_sel, double varsigma,
                    double threshold, int lane_count, Rng& rng,
                    bool* explored_branch);

enum class Mode { kExplore, kGreedy };

struct ActResult {
  action::HybridAction act;
  std::array<double, agent::kContDim> a_all{};
  double state_uncertainty = 0.0;
  std::array<double, agent::kNumOptions> option_uncertainty{};
  bool explored_branch = false;
};

ActResult act(const agent::MoecAgent& agent, std::span<const double> obs,
              const ExploreConfig& cfg, double varsigma, int lane_count,
              Rng& rng, Mode mode);

// Uncertainty trace CSV interface.
std::string uncertainty_trace_header();
std::string uncertainty_trace_row(int step, const ActResult& r);

}  // namespace moec::explore
