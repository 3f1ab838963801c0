#include "moec/explore.hpp"

#include <algorithm>
#include <cmath>

namespace moec::explore {

using agent::kContDim;
using agent::kNumOptions;
using agent::kObsDim;

double ExploreConfig::decay_multiplier() const {
  if (schedule_steps <= 0) return 1.0;
  return std::pow(weight_floor / weight_start, 1.0 / schedule_steps);
}

void ExploreConfig::validate() const {
  if (candidate_count < 1) throw ConfigError("explore: K must be >= 1");
  if (!(weight_start > 0.0 && weight_start <= 1.0))
    throw ConfigError("explore: weight_start must be in (0,1]");
  if (!(weight_floor > 0.0 && weight_floor <= weight_start))
    throw ConfigError("explore: weight_floor must be in (0, weight_start]");
  if (threshold < 0.0) throw ConfigError("explore: threshold must be >= 0");
}

UncertaintyReport uncertainty(const agent::MoecAgent& ag,
                              std::span<const double> obs,
                              std::span<const double> a_all, bool with_grad) {
  const auto& cfg = ag.config();
  const int n = cfg.n_objectives, m = cfg.m_critics;
  UncertaintyReport rep;
  rep.per_objective.assign(static_cast<std::size_t>(n), {});

  std::vector<std::array<double, kNumOptions>> q;
  ag.critic_values(obs, a_all, q);

  std::vector<std::array<double, kNumOptions>> means(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::array<double, kNumOptions> mean{};
    for (int j = 0; j < m; ++j)
      for (int o = 0; o < kNumOptions; ++o)
        mean[(std::size_t)o] += q[(std::size_t)(i * m + j)][(std::size_t)o];
    for (auto& v : mean) v /= m;
    means[(std::size_t)i] = mean;
    std::array<double, kNumOptions> var{};
    for (int j = 0; j < m; ++j) {
      for (int o = 0; o < kNumOptions; ++o) {
        const double d = q[(std::size_t)(i * m + j)][(std::size_t)o] - mean[(std::size_t)o];
        var[(std::size_t)o] += d * d;
      }
    }
    for (auto& v : var) v /= m;  // population variance over the ensemble
    rep.per_objective[(std::size_t)i] = var;
    for (int o = 0; o < kNumOptions; ++o)
      rep.per_option[(std::size_t)o] += cfg.omega[(std::size_t)i] * var[(std::size_t)o];
  }
  for (int o = 0; o < kNumOptions; ++o) rep.state_level += rep.per_option[(std::size_t)o];
  rep.state_level /= kNumOptions;

  if (with_grad) {
    // d/d a of sum_o sum_i w_i Var_j Q_ij(o); the mean's own gradient terms
    // cancel within each ensemble.
    std::array<double, kNumOptions> og{};
    std::array<double, kContDim> acc{};
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < m; ++j) {
        for (int o = 0; o < kNumOptions; ++o) {
          const double d = q[(std::size_t)(i * m + j)][(std::size_t)o] -
                           means[(std::size_t)i][(std::size_t)o];
          og[(std::size_t)o] = 2.0 * cfg.omega[(std::size_t)i] * d / m;
        }
        ag.critic_action_grad(i, j, obs, a_all, og, acc);
      }
    }
    rep.grad = acc;
  }
  return rep;
}

std::vector<double> softmax(std::span<const double> x) {
  double mx = x[0];
  for (double v : x) mx = std::max(mx, v);
  std::vector<double> p(x.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    p[i] = std::exp(x[i] - mx);
    sum += p[i];
  }
  for (auto& v : p) v /= sum;
  return p;
}

std::vector<std::vector<double>> candidate_set(std::span<const double> mu,
                                               std::span<const double> grad,
                                               std::span<const double> lo,
                                               std::span<const double> hi,
                                               int k_count, double varsigma) {
  if (k_count < 1) throw ConfigError("candidate_set: K must be >= 1");
  std::vector<std::vector<double>> cands;
  cands.reserve(static_cast<std::size_t>(k_count) + 1);
  for (int k = 0; k <= k_count; ++k) {
    std::vector<double> c(mu.size());
    const double scale = varsigma * static_cast<double>(k) / k_count;
    for (std::size_t d = 0; d < mu.size(); ++d)
      c[d] = saturate(mu[d] + scale * grad[d], lo[d], hi[d]);
    cands.push_back(std::move(c));
  }
  return cands;
}

void bounds_arrays(const action::ActionBounds& b,
                   std::array<double, kContDim>& lo,
                   std::array<double, kContDim>& hi) {
  for (int o = 0; o < kNumOptions; ++o) {
    lo[(std::size_t)(2 * o)] = b.l_min;
    hi[(std::size_t)(2 * o)] = b.l_max;
    lo[(std::size_t)(2 * o + 1)] = b.acc_min;
    hi[(std::size_t)(2 * o + 1)] = b.acc_max;
  }
}

std::array<double, kContDim> select_continuous(
    const agent::MoecAgent& ag, std::span<const double> obs,
    const std::vector<std::vector<double>>& candidates) {
  if (candidates.empty()) throw ConfigError("select_continuous: no candidates");
  std::array<double, kNumOptions> best_var;
  best_var.fill(-1.0);
  std::array<int, kNumOptions> best_k{};
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const auto rep = uncertainty(ag, obs, candidates[k], /*with_grad=*/false);
    for (int o = 0; o < kNumOptions; ++o) {
      // a later candidate must beat the incumbent by more than fp noise, so
      // ties resolve toward the actor output (k = 0)
      const double margin = 1e-12 * (1.0 + std::abs(best_var[(std::size_t)o]));
      if (rep.per_option[(std::size_t)o] > best_var[(std::size_t)o] + margin) {
        best_var[(std::size_t)o] = rep.per_option[(std::size_t)o];
        best_k[(std::size_t)o] = static_cast<int>(k);
      }
    }
  }
  std::array<double, kContDim> sel{};
  for (int o = 0; o < kNumOptions; ++o) {
    const auto& c = candidates[(std::size_t)best_k[(std::size_t)o]];
    sel[(std::size_t)(2 * o)] = c[(std::size_t)(2 * o)];
    sel[(std::size_t)(2 * o + 1)] = c[(std::size_t)(2 * o + 1)];
  }
  return sel;
}

namespace {

int masked_argmax(const std::array<double, kNumOptions>& q, int lane_id,
                  int lane_count) {
  int best = -1;
  for (int o = 0; o < kNumOptions; ++o) {
    if (action::legalize(static_cast<action::Option>(o), lane_id, lane_count) !=
            static_cast<action::Option>(o))
      continue;
    if (best < 0 || q[(std::size_t)o] > q[(std::size_t)best]) best = o;
  }
  return best < 0 ? static_cast<int>(action::Option::kLaneKeep) : best;
}

}  // namespace

int select_discrete(const agent::MoecAgent& ag, std::span<const double> obs,
                    std::span<const double> a_sel,
                    const UncertaintyReport& report_at_sel, double varsigma,
                    double threshold, int lane_count, Rng& rng,
                    bool* explored_branch) {
  const int lane_id = static_cast<int>(obs[0]);
  if (varsigma * report_at_sel.state_level > threshold) {
    if (explored_branch) *explored_branch = true;
    const auto p = softmax(report_at_sel.per_option);
    const double u = rng.uniform01();
    double acc = 0.0;
    for (int o = 0; o < kNumOptions; ++o) {
      acc += p[(std::size_t)o];
      if (u < acc) return o;
    }
    return kNumOptions - 1;
  }
  if (explored_branch) *explored_branch = false;
  return masked_argmax(ag.q_all(obs, a_sel), lane_id, lane_count);
}

ActResult act(const agent::MoecAgent& ag, std::span<const double> obs,
              const ExploreConfig& cfg, double varsigma, int lane_count,
              Rng& rng, Mode mode) {
  ActResult res;
  const auto a_mu = ag.actor_forward(obs);

  if (mode == Mode::kGreedy) {
    res.a_all = a_mu;
    const auto rep = uncertainty(ag, obs, a_mu, /*with_grad=*/false);
    res.state_uncertainty = rep.state_level;
    res.option_uncertainty = rep.per_option;
    const int o = masked_argmax(ag.q_all(obs, a_mu), static_cast<int>(obs[0]), lane_count);
    res.act = {static_cast<action::Option>(o), a_mu[(std::size_t)(2 * o)],
               a_mu[(std::size_t)(2 * o + 1)]};
    return res;
  }

  const auto rep_mu = uncertainty(ag, obs, a_mu, /*with_grad=*/true);
  const auto b = ag.bounds_for_obs(obs);
  std::array<double, kContDim> lo{}, hi{};
  bounds_arrays(b, lo, hi);
  const auto cands = candidate_set(a_mu, rep_mu.grad, lo, hi,
                                   cfg.candidate_count, varsigma);
  const auto a_sel = select_continuous(ag, obs, cands);
  const auto rep_sel = uncertainty(ag, obs, a_sel, /*with_grad=*/false);
  bool explored = false;
  const int o = select_discrete(ag, obs, a_sel, rep_sel, varsigma,
                                cfg.threshold, lane_count, rng, &explored);
  res.a_all = a_sel;
  res.state_uncertainty = rep_sel.state_level;
  res.option_uncertainty = rep_sel.per_option;
  res.explored_branch = explored;
  res.act = {static_cast<action::Option>(o), a_sel[(std::size_t)(2 * o)],
             a_sel[(std::size_t)(2 * o + 1)]};
  return res;
}

std::string uncertainty_trace_header() {
  return "step,sigma2_llc,sigma2_lk,sigma2_rlc,sigma2_state,branch\n";
}

std::string uncertainty_trace_row(int step, const ActResult& r) {
  std::string row = std::to_string(step);
  for (int o = 0; o < kNumOptions; ++o)
    row += "," + fmt_double(r.option_uncertainty[(std::size_t)o]);
  row += "," + fmt_double(r.state_uncertainty);
  row += r.explored_branch ? ",explore\n" : ",greedy\n";
  return row;
}

}  // namespace moec::explore
