#include "moec/agent.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace moec::agent {

namespace {

thread_local nn::Workspace tl_ws;

double max_over_options(std::span<const double> q) {
  double m = q[0];
  for (std::size_t i = 1; i < q.size(); ++i) m = std::max(m, q[i]);
  return m;
}

// Per-parameter scales implementing input-column normalization inside the
// optimizer (see nn::AdamState::param_scale).
std::vector<double> param_scales_for(const nn::MlpSpec& spec,
                                     std::span<const double> input_scales) {
  std::vector<double> s(spec.param_count(), 1.0);
  const int out0 = spec.hidden_dims.empty() ? spec.output_dim : spec.hidden_dims[0];
  for (int i = 0; i < out0; ++i)
    for (int j = 0; j < spec.input_dim; ++j)
      s[static_cast<std::size_t>(i) * spec.input_dim + j] = input_scales[static_cast<std::size_t>(j)];
  return s;
}

}  // namespace

std::array<double, kObsDim> obs_feature_scales(const env::RoadSpec& road) {
  std::array<double, kObsDim> s{};
  // ego block: lane, x, y, heading, vx, vy
  s[0] = std::max(1.0, road.lane_count - 1.0);
  s[1] = road.length / 2.0;
  s[2] = road.width_total() / 2.0;
  s[3] = 0.3;
  s[4] = 15.0;
  s[5] = 3.0;
  for (int n = 0; n < 6; ++n) {
    double* b = s.data() + 6 + 6 * n;
    b[0] = 1.0;    // presence
    b[1] = 80.0;   // dx
    b[2] = 8.0;    // dy
    b[3] = 0.3;    // heading
    b[4] = 10.0;   // dvx
    b[5] = 3.0;    // dvy
  }
  return s;
}

std::array<double, kContDim> action_feature_scales(const action::BoundsConfig& b) {
  std::array<double, kContDim> s{};
  for (int o = 0; o < kNumOptions; ++o) {
    s[static_cast<std::size_t>(2 * o)] = b.l_cap / 2.0;
    s[static_cast<std::size_t>(2 * o + 1)] = b.acc_limit;
  }
  return s;
}

void AgentConfig::validate() const {
  if (n_objectives < 1 || n_objectives > 2)
    throw ConfigError("agent: n_objectives must be 1 or 2");
  if (m_critics < 1) throw ConfigError("agent: m_critics must be >= 1");
  if (static_cast<int>(omega.size()) != n_objectives)
    throw ConfigError("agent: omega length must equal n_objectives");
  double sum = 0.0;
  for (double w : omega) sum += w;
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("agent: omega must sum to 1");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("agent: gamma must be in (0,1)");
  if (!(tau >= 0.0 && tau <= 1.0))
    throw ConfigError("agent: tau must be in [0,1]");  // 0 freezes targets
  if (!(alpha > beta))
    throw ConfigError("agent: two-timescale rule requires alpha > beta");
  for (int h : hidden)
    if (h < 1) throw ConfigError("agent: hidden sizes must be >= 1");
}

MoecAgent::MoecAgent(AgentConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)), seed_(seed) {
  cfg_.validate();
  Rng rng(seed);

  env::RoadSpec road;
  road.lane_width = cfg_.lane_width;
  const auto obs_scales = obs_feature_scales(road);
  const auto act_scales = action_feature_scales(cfg_.bounds);

  nn::MlpSpec actor_spec{kObsDim, cfg_.hidden, kContDim};
  std::vector<double> actor_in(obs_scales.begin(), obs_scales.end());
  actor_.params = nn::init_params(actor_spec, rng, actor_in);
  // Small output layer so the initial policy sits at the bound midpoints
  // instead of commanding near-saturated actions.
  {
    const std::size_t n_out = static_cast<std::size_t>(kContDim);
    const std::size_t last_in = cfg_.hidden.empty()
                                    ? static_cast<std::size_t>(kObsDim)
                                    : static_cast<std::size_t>(cfg_.hidden.back());
    const std::size_t tail = n_out * last_in + n_out;
    for (std::size_t i = actor_.params.values.size() - tail;
         i < actor_.params.values.size(); ++i)
      actor_.params.values[i] *= 0.03;
  }
  actor_.adam = nn::make_adam_state(actor_.params.values.size(), cfg_.beta);
  actor_.adam.param_scale = param_scales_for(actor_spec, actor_in);
  actor_target_ = actor_.params;

  nn::MlpSpec critic_spec{kObsDim + kContDim, cfg_.hidden, kNumOptions};
  std::vector<double> critic_in = actor_in;
  critic_in.insert(critic_in.end(), act_scales.begin(), act_scales.end());
  const int total = cfg_.n_objectives * cfg_.m_critics;
  critics_.reserve(static_cast<std::size_t>(total));
  for (int k = 0; k < total; ++k) {
    Net net;
    net.params = nn::init_params(critic_spec, rng, critic_in);
    net.adam = nn::make_adam_state(net.params.values.size(), cfg_.alpha);
    net.adam.param_scale = param_scales_for(critic_spec, critic_in);
    critic_targets_.push_back(net.params);
    critics_.push_back(std::move(net));
  }
}

const nn::MlpParams& MoecAgent::critic_params(int i, int j) const {
  return critics_[static_cast<std::size_t>(critic_index(i, j))].params;
}

nn::MlpParams& MoecAgent::mutable_critic_params(int i, int j) {
  return critics_[static_cast<std::size_t>(critic_index(i, j))].params;
}

const nn::MlpParams& MoecAgent::critic_target_params(int i, int j) const {
  return critic_targets_[static_cast<std::size_t>(critic_index(i, j))];
}

nn::MlpParams& MoecAgent::mutable_critic_target_params(int i, int j) {
  return critic_targets_[static_cast<std::size_t>(critic_index(i, j))];
}

action::ActionBounds MoecAgent::bounds_for_obs(std::span<const double> obs) const {
  return action::bounds_for(obs[4], cfg_.lane_width, cfg_.bounds);
}

std::array<double, kContDim> MoecAgent::map_actor_output(
    std::span<const double> raw, std::span<const double> obs) const {
  const auto b = bounds_for_obs(obs);
  std::array<double, kContDim> a{};
  for (int o = 0; o < kNumOptions; ++o) {
    const double l_mid = 0.5 * (b.l_min + b.l_max);
    const double l_half = 0.5 * (b.l_max - b.l_min);
    a[static_cast<std::size_t>(2 * o)] =
        l_mid + l_half * std::tanh(raw[static_cast<std::size_t>(2 * o)]);
    const double a_mid = 0.5 * (b.acc_min + b.acc_max);
    const double a_half = 0.5 * (b.acc_max - b.acc_min);
    a[static_cast<std::size_t>(2 * o + 1)] =
        a_mid + a_half * std::tanh(raw[static_cast<std::size_t>(2 * o + 1)]);
  }
  return a;
}

std::array<double, kContDim> MoecAgent::actor_forward(std::span<const double> obs) const {
  std::vector<double> raw;
  nn::forward(actor_.params, obs, raw, tl_ws);
  return map_actor_output(raw, obs);
}

std::array<double, kContDim> MoecAgent::actor_target_forward(std::span<const double> obs) const {
  std::vector<double> raw;
  nn::forward(actor_target_, obs, raw, tl_ws);
  return map_actor_output(raw, obs);
}

namespace {

std::array<double, kNumOptions> forward3(const nn::MlpParams& p,
                                         std::span<const double> obs,
                                         std::span<const double> a_all) {
  std::vector<double> in(obs.begin(), obs.end());
  in.insert(in.end(), a_all.begin(), a_all.end());
  std::vector<double> out;
  nn::forward(p, in, out, tl_ws);
  return {out[0], out[1], out[2]};
}

}  // namespace

std::array<double, kNumOptions> MoecAgent::critic_forward(
    int i, int j, std::span<const double> obs, std::span<const double> a_all) const {
  return forward3(critic_params(i, j), obs, a_all);
}

std::array<double, kNumOptions> MoecAgent::critic_target_forward(
    int i, int j, std::span<const double> obs, std::span<const double> a_all) const {
  return forward3(critic_targets_[static_cast<std::size_t>(critic_index(i, j))], obs, a_all);
}

std::array<double, kNumOptions> MoecAgent::q_bar(int i, std::span<const double> obs,
                                                 std::span<const double> a_all) const {
  std::array<double, kNumOptions> acc{};
  for (int j = 0; j < cfg_.m_critics; ++j) {
    const auto q = critic_forward(i, j, obs, a_all);
    for (int o = 0; o < kNumOptions; ++o)
      acc[static_cast<std::size_t>(o)] += q[static_cast<std::size_t>(o)];
  }
  for (auto& v : acc) v /= cfg_.m_critics;
  return acc;
}

std::array<double, kNumOptions> MoecAgent::q_all(std::span<const double> obs,
                                                 std::span<const double> a_all) const {
  std::array<double, kNumOptions> acc{};
  for (int i = 0; i < cfg_.n_objectives; ++i) {
    const auto qb = q_bar(i, obs, a_all);
    for (int o = 0; o < kNumOptions; ++o)
      acc[static_cast<std::size_t>(o)] +=
          cfg_.omega[static_cast<std::size_t>(i)] * qb[static_cast<std::size_t>(o)];
  }
  return acc;
}

void MoecAgent::critic_values(std::span<const double> obs,
                              std::span<const double> a_all,
                              std::vector<std::array<double, kNumOptions>>& out) const {
  const int total = cfg_.n_objectives * cfg_.m_critics;
  out.resize(static_cast<std::size_t>(total));
  std::vector<double> in(obs.begin(), obs.end());
  in.insert(in.end(), a_all.begin(), a_all.end());
  std::vector<double> o3;
  for (int k = 0; k < total; ++k) {
    nn::forward(critics_[static_cast<std::size_t>(k)].params, in, o3, tl_ws);
    out[static_cast<std::size_t>(k)] = {o3[0], o3[1], o3[2]};
  }
}

void MoecAgent::critic_action_grad(int i, int j, std::span<const double> obs,
                                   std::span<const double> a_all,
                                   std::span<const double> og,
                                   std::span<double> grad) const {
  std::vector<double> in(obs.begin(), obs.end());
  in.insert(in.end(), a_all.begin(), a_all.end());
  std::vector<double> in_grad(in.size(), 0.0);
  nn::backward(critic_params(i, j), in, og, {}, in_grad, tl_ws);
  for (int d = 0; d < kContDim; ++d)
    grad[static_cast<std::size_t>(d)] += in_grad[static_cast<std::size_t>(kObsDim + d)];
}

TdTargets MoecAgent::td_targets(const Batch& batch) const {
  const int n = cfg_.n_objectives, m = cfg_.m_critics;
  const std::size_t bsz = batch.size();
  TdTargets t;
  t.y_ij.assign(bsz * static_cast<std::size_t>(n * m), 0.0);
  t.y_i.assign(bsz * static_cast<std::size_t>(n), 0.0);
  t.y_all.assign(bsz, 0.0);

  std::vector<double> in, o3, raw;
  for (std::size_t bt = 0; bt < bsz; ++bt) {
    const Transition& tr = *batch[bt];
    nn::forward(actor_target_, tr.s_next.v, raw, tl_ws);
    const auto a_next = map_actor_output(raw, tr.s_next.v);

    in.assign(tr.s_next.v.begin(), tr.s_next.v.end());
    in.insert(in.end(), a_next.begin(), a_next.end());

    double r_all = 0.0;
    std::array<double, kNumOptions> q_all_next{};
    for (int i = 0; i < n; ++i) {
      const double r_i = tr.rewards[static_cast<std::size_t>(i)];
      r_all += cfg_.omega[static_cast<std::size_t>(i)] * r_i;
      std::array<double, kNumOptions> q_bar_next{};
      for (int j = 0; j < m; ++j) {
        nn::forward(critic_targets_[static_cast<std::size_t>(critic_index(i, j))], in, o3, tl_ws);
        const double boot = tr.done ? 0.0 : max_over_options(o3);
        t.y_ij[bt * static_cast<std::size_t>(n * m) +
               static_cast<std::size_t>(critic_index(i, j))] = r_i + cfg_.gamma * boot;
        for (int o = 0; o < kNumOptions; ++o)
          q_bar_next[static_cast<std::size_t>(o)] += o3[static_cast<std::size_t>(o)];
      }
      for (auto& v : q_bar_next) v /= m;
      t.y_i[bt * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)] =
          r_i + cfg_.gamma * (tr.done ? 0.0 : max_over_options(q_bar_next));
      for (int o = 0; o < kNumOptions; ++o)
        q_all_next[static_cast<std::size_t>(o)] +=
            cfg_.omega[static_cast<std::size_t>(i)] * q_bar_next[static_cast<std::size_t>(o)];
    }
    t.y_all[bt] = r_all + cfg_.gamma * (tr.done ? 0.0 : max_over_options(q_all_next));
  }
  return t;
}

CriticLossResult MoecAgent::critic_loss(int i, int j, const Batch& batch,
                                        const TdTargets& targets) const {
  const int n = cfg_.n_objectives, m = cfg_.m_critics;
  const std::size_t bsz = batch.size();
  if (bsz == 0) throw ConfigError("critic_loss: empty batch");
  CriticLossResult res;
  res.param_grad.assign(critic_params(i, j).values.size(), 0.0);

  std::vector<double> in, o3;
  std::array<double, kNumOptions> og{};
  for (std::size_t bt = 0; bt < bsz; ++bt) {
    const Transition& tr = *batch[bt];
    const int o = tr.option;

    in.assign(tr.s.v.begin(), tr.s.v.end());
    in.insert(in.end(), tr.a_all.begin(), tr.a_all.end());
    double q_ij = 0.0, q_bar_i = 0.0, q_all_v = 0.0;
    for (int ii = 0; ii < n; ++ii) {
      double bar = 0.0;
      for (int jj = 0; jj < m; ++jj) {
        nn::forward(critics_[static_cast<std::size_t>(critic_index(ii, jj))].params, in, o3, tl_ws);
        bar += o3[static_cast<std::size_t>(o)];
        if (ii == i && jj == j) q_ij = o3[static_cast<std::size_t>(o)];
      }
      bar /= m;
      if (ii == i) q_bar_i = bar;
      q_all_v += cfg_.omega[static_cast<std::size_t>(ii)] * bar;
    }

    const double y_ij = targets.y_ij[bt * static_cast<std::size_t>(n * m) +
                                     static_cast<std::size_t>(critic_index(i, j))];
    const double y_i = targets.y_i[bt * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)];
    const double y_all = targets.y_all[bt];

    const double e_ij = q_ij - y_ij;
    const double e_i = q_bar_i - y_i;
    const double e_all = q_all_v - y_all;
    const double e_conv = q_ij - q_bar_i;
    res.terms[0] += 0.5 * e_ij * e_ij;
    res.terms[1] += 0.5 * e_i * e_i;
    res.terms[2] += 0.5 * e_all * e_all;
    res.terms[3] += 0.5 * e_conv * e_conv;

    // d(combined)/d(Q_ij at the stored option); ensemble means over the
    // sibling critics are constants for this critic's update.
    const double g = cfg_.lambda[0] * e_ij + cfg_.lambda[1] * e_i / m +
                     cfg_.lambda[2] * cfg_.omega[static_cast<std::size_t>(i)] * e_all / m +
                     cfg_.lambda[3] * (1.0 - 1.0 / m) * e_conv;
    og.fill(0.0);
    og[static_cast<std::size_t>(o)] = g / static_cast<double>(bsz);
    nn::backward(critic_params(i, j), in, og, res.param_grad, {}, tl_ws);
  }
  for (auto& v : res.terms) v /= static_cast<double>(bsz);
  for (int k = 0; k < 4; ++k)
    res.combined += cfg_.lambda[static_cast<std::size_t>(k)] * res.terms[static_cast<std::size_t>(k)];
  return res;
}

ActorLossResult MoecAgent::actor_loss(const Batch& batch) const {
  const int n = cfg_.n_objectives, m = cfg_.m_critics;
  const std::size_t bsz = batch.size();
  if (bsz == 0) throw ConfigError("actor_loss: empty batch");
  ActorLossResult res;
  res.param_grad.assign(actor_.params.values.size(), 0.0);

  std::vector<double> raw, in, o3, in_grad;
  std::array<double, kNumOptions> og{};
  std::vector<double> z_grad(kContDim, 0.0);
  for (std::size_t bt = 0; bt < bsz; ++bt) {
    const Transition& tr = *batch[bt];
    nn::forward(actor_.params, tr.s.v, raw, tl_ws);
    const auto a = map_actor_output(raw, tr.s.v);

    in.assign(tr.s.v.begin(), tr.s.v.end());
    in.insert(in.end(), a.begin(), a.end());

    std::array<double, kContDim> da{};  // dL/da
    for (int i = 0; i < n; ++i) {
      const double w = -cfg_.omega[static_cast<std::size_t>(i)] / (m * static_cast<double>(bsz));
      og.fill(w);
      for (int j = 0; j < m; ++j) {
        const auto& params = critic_params(i, j);
        in_grad.assign(in.size(), 0.0);
        nn::backward(params, in, og, {}, in_grad, tl_ws);
        for (int d = 0; d < kContDim; ++d)
          da[static_cast<std::size_t>(d)] += in_grad[static_cast<std::size_t>(kObsDim + d)];
        nn::forward(params, in, o3, tl_ws);
        for (int o = 0; o < kNumOptions; ++o) res.loss += w * o3[static_cast<std::size_t>(o)];
      }
    }

    // chain through the bounds mapping a = mid + half * tanh(z)
    const auto b = bounds_for_obs(tr.s.v);
    for (int o = 0; o < kNumOptions; ++o) {
      const double th_l = std::tanh(raw[static_cast<std::size_t>(2 * o)]);
      const double th_a = std::tanh(raw[static_cast<std::size_t>(2 * o + 1)]);
      z_grad[static_cast<std::size_t>(2 * o)] =
          da[static_cast<std::size_t>(2 * o)] * 0.5 * (b.l_max - b.l_min) * (1.0 - th_l * th_l);
      z_grad[static_cast<std::size_t>(2 * o + 1)] =
          da[static_cast<std::size_t>(2 * o + 1)] * 0.5 * (b.acc_max - b.acc_min) * (1.0 - th_a * th_a);
    }
    nn::backward(actor_.params, tr.s.v, z_grad, res.param_grad, {}, tl_ws);
  }
  return res;
}

UpdateDiagnostics MoecAgent::update(const Batch& batch, bool update_actor) {
  UpdateDiagnostics diag;
  const int n = cfg_.n_objectives, m = cfg_.m_critics;
  const int total = n * m;
  const std::size_t bsz = batch.size();
  if (bsz == 0) throw ConfigError("update: empty batch");
  const auto targets = td_targets(batch);

  // Fused pass: every critic's online values are computed once per sample
  // and shared by all four loss terms; critic_loss/actor_loss compute the
  // same quantities standalone.
  std::vector<std::vector<double>> critic_grads(static_cast<std::size_t>(total));
  for (int k = 0; k < total; ++k)
    critic_grads[static_cast<std::size_t>(k)].assign(
        critics_[static_cast<std::size_t>(k)].params.values.size(), 0.0);
  std::vector<double> actor_grad(actor_.params.values.size(), 0.0);

  std::vector<double> in, o3, raw, in_grad;
  std::vector<std::array<double, kNumOptions>> q(static_cast<std::size_t>(total));
  std::array<double, kNumOptions> og{};
  std::vector<double> z_grad(kContDim, 0.0);
  std::array<double, 4> term_sums{};
  double actor_loss_val = 0.0;

  for (std::size_t bt = 0; bt < bsz; ++bt) {
    const Transition& tr = *batch[bt];
    const int o = tr.option;

    in.assign(tr.s.v.begin(), tr.s.v.end());
    in.insert(in.end(), tr.a_all.begin(), tr.a_all.end());
    for (int k = 0; k < total; ++k) {
      nn::forward(critics_[static_cast<std::size_t>(k)].params, in, o3, tl_ws);
      q[static_cast<std::size_t>(k)] = {o3[0], o3[1], o3[2]};
    }

    double q_all_v = 0.0;
    std::array<double, 2> q_bar{};
    for (int i = 0; i < n; ++i) {
      double bar = 0.0;
      for (int j = 0; j < m; ++j)
        bar += q[static_cast<std::size_t>(critic_index(i, j))][static_cast<std::size_t>(o)];
      bar /= m;
      q_bar[static_cast<std::size_t>(i)] = bar;
      q_all_v += cfg_.omega[static_cast<std::size_t>(i)] * bar;
    }

    const double y_all = targets.y_all[bt];
    for (int i = 0; i < n; ++i) {
      const double y_i = targets.y_i[bt * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)];
      const double e_i = q_bar[static_cast<std::size_t>(i)] - y_i;
      const double e_all = q_all_v - y_all;
      for (int j = 0; j < m; ++j) {
        const int k = critic_index(i, j);
        const double q_ij = q[static_cast<std::size_t>(k)][static_cast<std::size_t>(o)];
        const double y_ij = targets.y_ij[bt * static_cast<std::size_t>(total) + static_cast<std::size_t>(k)];
        const double e_ij = q_ij - y_ij;
        const double e_conv = q_ij - q_bar[static_cast<std::size_t>(i)];
        term_sums[0] += 0.5 * e_ij * e_ij;
        term_sums[1] += 0.5 * e_i * e_i;
        term_sums[2] += 0.5 * e_all * e_all;
        term_sums[3] += 0.5 * e_conv * e_conv;
        const double g = cfg_.lambda[0] * e_ij + cfg_.lambda[1] * e_i / m +
                         cfg_.lambda[2] * cfg_.omega[static_cast<std::size_t>(i)] * e_all / m +
                         cfg_.lambda[3] * (1.0 - 1.0 / m) * e_conv;
        og.fill(0.0);
        og[static_cast<std::size_t>(o)] = g / static_cast<double>(bsz);
        nn::backward(critics_[static_cast<std::size_t>(k)].params, in, og,
                     critic_grads[static_cast<std::size_t>(k)], {}, tl_ws);
      }
    }

    if (!update_actor) continue;

    // actor pass at a = mu(s)
    nn::forward(actor_.params, tr.s.v, raw, tl_ws);
    const auto a = map_actor_output(raw, tr.s.v);
    in.assign(tr.s.v.begin(), tr.s.v.end());
    in.insert(in.end(), a.begin(), a.end());
    std::array<double, kContDim> da{};
    for (int i = 0; i < n; ++i) {
      const double w = -cfg_.omega[static_cast<std::size_t>(i)] / (m * static_cast<double>(bsz));
      og.fill(w);
      for (int j = 0; j < m; ++j) {
        in_grad.assign(in.size(), 0.0);
        nn::backward(critic_params(i, j), in, og, {}, in_grad, o3, tl_ws);
        for (int d = 0; d < kContDim; ++d)
          da[static_cast<std::size_t>(d)] += in_grad[static_cast<std::size_t>(kObsDim + d)];
        for (int oo = 0; oo < kNumOptions; ++oo)
          actor_loss_val += w * o3[static_cast<std::size_t>(oo)];
      }
    }
    const auto b = bounds_for_obs(tr.s.v);
    for (int oo = 0; oo < kNumOptions; ++oo) {
      const double th_l = std::tanh(raw[static_cast<std::size_t>(2 * oo)]);
      const double th_a = std::tanh(raw[static_cast<std::size_t>(2 * oo + 1)]);
      z_grad[static_cast<std::size_t>(2 * oo)] =
          da[static_cast<std::size_t>(2 * oo)] * 0.5 * (b.l_max - b.l_min) * (1.0 - th_l * th_l);
      z_grad[static_cast<std::size_t>(2 * oo + 1)] =
          da[static_cast<std::size_t>(2 * oo + 1)] * 0.5 * (b.acc_max - b.acc_min) * (1.0 - th_a * th_a);
    }
    nn::backward(actor_.params, tr.s.v, z_grad, actor_grad, {}, tl_ws);
  }

  // apply updates after every gradient is computed from pre-update params
  double grad_norm_sq = 0.0;
  for (int k = 0; k < total; ++k) {
    auto& net = critics_[static_cast<std::size_t>(k)];
    for (double g : critic_grads[static_cast<std::size_t>(k)]) grad_norm_sq += g * g;
    if (!nn::adam_step(net.params, critic_grads[static_cast<std::size_t>(k)], net.adam))
      diag.finite = false;
  }
  const double denom = static_cast<double>(total) * static_cast<double>(bsz);
  for (int t = 0; t < 4; ++t)
    diag.critic_terms[static_cast<std::size_t>(t)] = term_sums[static_cast<std::size_t>(t)] / denom;
  for (int t = 0; t < 4; ++t)
    diag.critic_loss_mean +=
        cfg_.lambda[static_cast<std::size_t>(t)] * diag.critic_terms[static_cast<std::size_t>(t)];
  diag.critic_grad_norm = std::sqrt(grad_norm_sq);

  if (update_actor) {
    diag.actor_loss = actor_loss_val;
    double an = 0.0;
    for (double g : actor_grad) an += g * g;
    diag.actor_grad_norm = std::sqrt(an);
    if (!nn::adam_step(actor_.params, actor_grad, actor_.adam)) diag.finite = false;
  }

  if (cfg_.tau > 0.0) {
    for (std::size_t c = 0; c < critics_.size(); ++c)
      nn::soft_update(critic_targets_[c], critics_[c].params, cfg_.tau);
    nn::soft_update(actor_target_, actor_.params, cfg_.tau);
  }

  train_step_ += 1;
  return diag;
}

namespace {

std::string vec_to_string(std::span<const double> v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += fmt_double(v[i]);
  }
  return s;
}

std::vector<double> vec_from_string(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) v.push_back(std::stod(tok));
  return v;
}

}  // namespace

void MoecAgent::save(const std::filesystem::path& dir, std::int64_t train_step) const {
  std::filesystem::create_directories(dir);
  std::ofstream mf(dir / "manifest.txt");
  if (!mf) throw DataError("cannot write agent manifest in " + dir.string());
  mf << "format=moec-agent-v1\n"
     << "n=" << cfg_.n_objectives << "\n"
     << "m=" << cfg_.m_critics << "\n"
     << "omega=" << vec_to_string(cfg_.omega) << "\n"
     << "lambda=" << vec_to_string(std::span<const double>(cfg_.lambda.data(), 4)) << "\n"
     << "gamma=" << fmt_double(cfg_.gamma) << "\n"
     << "alpha=" << fmt_double(cfg_.alpha) << "\n"
     << "beta=" << fmt_double(cfg_.beta) << "\n"
     << "tau=" << fmt_double(cfg_.tau) << "\n"
     << "hidden=";
  for (std::size_t i = 0; i < cfg_.hidden.size(); ++i)
    mf << (i ? "," : "") << cfg_.hidden[i];
  mf << "\n"
     << "bounds_r0=" << fmt_double(cfg_.bounds.turn_radius_min) << "\n"
     << "bounds_brake=" << fmt_double(cfg_.bounds.brake_max) << "\n"
     << "bounds_l_cap=" << fmt_double(cfg_.bounds.l_cap) << "\n"
     << "bounds_acc=" << fmt_double(cfg_.bounds.acc_limit) << "\n"
     << "lane_width=" << fmt_double(cfg_.lane_width) << "\n"
     << "train_step=" << train_step << "\n"
     << "seed=" << seed_ << "\n";
  mf.close();

  nn::save_params(actor_.params, dir / "actor", seed_);
  nn::save_params(actor_target_, dir / "actor_target", seed_);
  for (int i = 0; i < cfg_.n_objectives; ++i) {
    for (int j = 0; j < cfg_.m_critics; ++j) {
      const std::string tag = std::to_string(i) + "_" + std::to_string(j);
      nn::save_params(critic_params(i, j), dir / ("critic_" + tag), seed_);
      nn::save_params(critic_targets_[static_cast<std::size_t>(critic_index(i, j))],
                      dir / ("critic_target_" + tag), seed_);
    }
  }
}

MoecAgent MoecAgent::load(const std::filesystem::path& dir) {
  std::ifstream mf(dir / "manifest.txt");
  if (!mf) throw DataError("cannot open agent manifest in " + dir.string());
  AgentConfig cfg;
  std::uint64_t seed = 0;
  std::int64_t step = 0;
  std::string line;
  while (std::getline(mf, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    if (key == "n") cfg.n_objectives = std::stoi(val);
    else if (key == "m") cfg.m_critics = std::stoi(val);
    else if (key == "omega") cfg.omega = vec_from_string(val);
    else if (key == "lambda") {
      const auto v = vec_from_string(val);
      if (v.size() != 4) throw DataError("agent manifest: lambda needs 4 entries");
      std::copy(v.begin(), v.end(), cfg.lambda.begin());
    } else if (key == "gamma") cfg.gamma = std::stod(val);
    else if (key == "alpha") cfg.alpha = std::stod(val);
    else if (key == "beta") cfg.beta = std::stod(val);
    else if (key == "tau") cfg.tau = std::stod(val);
    else if (key == "hidden") {
      cfg.hidden.clear();
      for (double d : vec_from_string(val)) cfg.hidden.push_back(static_cast<int>(d));
    } else if (key == "bounds_r0") cfg.bounds.turn_radius_min = std::stod(val);
    else if (key == "bounds_brake") cfg.bounds.brake_max = std::stod(val);
    else if (key == "bounds_l_cap") cfg.bounds.l_cap = std::stod(val);
    else if (key == "bounds_acc") cfg.bounds.acc_limit = std::stod(val);
    else if (key == "lane_width") cfg.lane_width = std::stod(val);
    else if (key == "train_step") step = std::stoll(val);
    else if (key == "seed") seed = std::stoull(val);
  }
  MoecAgent agent(cfg, seed);
  agent.train_step_ = step;
  agent.actor_.params = nn::load_params(dir / "actor");
  agent.actor_target_ = nn::load_params(dir / "actor_target");
  for (int i = 0; i < cfg.n_objectives; ++i) {
    for (int j = 0; j < cfg.m_critics; ++j) {
      const std::string tag = std::to_string(i) + "_" + std::to_string(j);
      agent.mutable_critic_params(i, j) = nn::load_params(dir / ("critic_" + tag));
      agent.critic_targets_[static_cast<std::size_t>(agent.critic_index(i, j))] =
          nn::load_params(dir / ("critic_target_" + tag));
    }
  }
  return agent;
}

}  // namespace moec::agent
