#include <algorithm>
#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "moec/agent.hpp"

using namespace moec;
using namespace moec::agent;

namespace {

AgentConfig small_cfg(int n = 2, int m = 3) {
  AgentConfig cfg;
  cfg.n_objectives = n;
  cfg.m_critics = m;
  cfg.omega = n == 1 ? std::vector<double>{1.0} : std::vector<double>{0.4, 0.6};
  cfg.hidden = {8};
  return cfg;
}

env::EgoObservation obs_with_speed(double vx) {
  env::EgoObservation o;
  o.v[0] = 1;
  o.v[1] = 120.0;
  o.v[2] = 6.0;
  o.v[4] = vx;
  return o;
}

void zero_net(nn::MlpParams& p) { std::fill(p.values.begin(), p.values.end(), 0.0); }

// Constant net: zero weights, output biases set to v (all heads).
void make_constant(nn::MlpParams& p, double v) {
  zero_net(p);
  const std::size_t nb = static_cast<std::size_t>(p.spec.output_dim);
  for (std::size_t i = p.values.size() - nb; i < p.values.size(); ++i) p.values[i] = v;
}

Transition make_transition(Rng& rng, int option = 1) {
  Transition tr;
  for (auto& v : tr.s.v) v = rng.uniform(-1.0, 1.0);
  tr.s.v[4] = rng.uniform(5.0, 14.0);
  for (auto& v : tr.s_next.v) v = rng.uniform(-1.0, 1.0);
  tr.s_next.v[4] = rng.uniform(5.0, 14.0);
  tr.option = option;
  for (auto& v : tr.a_all) v = rng.uniform(-1.0, 3.0);
  tr.rewards = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
  tr.done = false;
  return tr;
}

double rel_err(double a, double b) {
  return std::abs(a - b) / (std::abs(a) + std::abs(b) + 1e-8);
}

}  // namespace

TEST_CASE("actor_forward") {
  SUBCASE("zero-weight actor emits bound midpoints") {
    MoecAgent ag(small_cfg(), 1);
    zero_net(ag.mutable_actor_params());
    const auto obs = obs_with_speed(10.0);
    const auto a = ag.actor_forward(obs.v);
    const auto b = ag.bounds_for_obs(obs.v);
    for (int o = 0; o < 3; ++o) {
      CHECK(a[(std::size_t)(2 * o)] == doctest::Approx(0.5 * (b.l_min + b.l_max)));
      CHECK(a[(std::size_t)(2 * o + 1)] == doctest::Approx(0.0));
    }
  }
  SUBCASE("outputs stay inside bounds for random states and params") {
    Rng rng(5);
    for (int rep = 0; rep < 20; ++rep) {
      MoecAgent ag(small_cfg(), rng.next_u64());
      for (int k = 0; k < 50; ++k) {
        env::EgoObservation obs;
        for (auto& v : obs.v) v = rng.uniform(-50.0, 50.0);
        obs.v[4] = rng.uniform(0.0, 20.0);
        const auto a = ag.actor_forward(obs.v);
        const auto b = ag.bounds_for_obs(obs.v);
        for (int o = 0; o < 3; ++o) {
          CHECK(a[(std::size_t)(2 * o)] >= b.l_min);
          CHECK(a[(std::size_t)(2 * o)] <= b.l_max);
          CHECK(a[(std::size_t)(2 * o + 1)] >= b.acc_min);
          CHECK(a[(std::size_t)(2 * o + 1)] <= b.acc_max);
        }
      }
    }
  }
  SUBCASE("deterministic") {
    MoecAgent ag(small_cfg(), 7);
    const auto obs = obs_with_speed(9.0);
    CHECK(ag.actor_forward(obs.v) == ag.actor_forward(obs.v));
  }
}

TEST_CASE("critic_forward") {
  SUBCASE("zero-weight critic gives zero values") {
    MoecAgent ag(small_cfg(), 2);
    zero_net(ag.mutable_critic_params(0, 0));
    const auto obs = obs_with_speed(10.0);
    std::array<double, 6> a{30, 0, 30, 0, 30, 0};
    for (double q : ag.critic_forward(0, 0, obs.v, a)) CHECK(q == 0.0);
  }
  SUBCASE("equals module nn forward on the concatenated input") {
    MoecAgent ag(small_cfg(), 3);
    Rng rng(11);
    env::EgoObservation obs;
    for (auto& v : obs.v) v = rng.uniform(-2.0, 2.0);
    std::array<double, 6> a{};
    for (auto& v : a) v = rng.uniform(-3.0, 3.0);
    std::vector<double> in(obs.v.begin(), obs.v.end());
    in.insert(in.end(), a.begin(), a.end());
    const auto direct = nn::forward(ag.critic_params(1, 2), in);
    const auto got = ag.critic_forward(1, 2, obs.v, a);
    for (int o = 0; o < 3; ++o)
      CHECK(std::abs(got[(std::size_t)o] - direct[(std::size_t)o]) < 1e-12);
  }
  SUBCASE("permuting SV blocks changes the output") {
    MoecAgent ag(small_cfg(), 4);
    Rng rng(13);
    env::EgoObservation obs;
    for (auto& v : obs.v) v = rng.uniform(-2.0, 2.0);
    env::EgoObservation swapped = obs;
    for (int k = 0; k < 6; ++k) std::swap(swapped.v[6 + k], swapped.v[12 + k]);
    std::array<double, 6> a{10, 1, 10, 1, 10, 1};
    CHECK(ag.critic_forward(0, 0, obs.v, a) != ag.critic_forward(0, 0, swapped.v, a));
  }
}

TEST_CASE("q_bar and q_all") {
  SUBCASE("identical critics collapse to a single critic") {
    MoecAgent ag(small_cfg(2, 3), 5);
    for (int j = 1; j < 3; ++j)
      ag.mutable_critic_params(0, j) = ag.critic_params(0, 0);
    const auto obs = obs_with_speed(8.0);
    std::array<double, 6> a{20, 1, 20, 1, 20, 1};
    const auto one = ag.critic_forward(0, 0, obs.v, a);
    const auto bar = ag.q_bar(0, obs.v, a);
    for (int o = 0; o < 3; ++o)
      CHECK(bar[(std::size_t)o] == doctest::Approx(one[(std::size_t)o]).epsilon(1e-12));
  }
  SUBCASE("two constant critics with values 1 and 3 average to 2") {
    MoecAgent ag(small_cfg(2, 2), 6);
    make_constant(ag.mutable_critic_params(0, 0), 1.0);
    make_constant(ag.mutable_critic_params(0, 1), 3.0);
    const auto obs = obs_with_speed(8.0);
    std::array<double, 6> a{};
    for (double v : ag.q_bar(0, obs.v, a)) CHECK(v == doctest::Approx(2.0));
  }
  SUBCASE("weighted combination of ensemble means") {
    MoecAgent ag(small_cfg(2, 2), 6);
    for (int j = 0; j < 2; ++j) {
      make_constant(ag.mutable_critic_params(0, j), 1.0);
      make_constant(ag.mutable_critic_params(1, j), 2.0);
    }
    const auto obs = obs_with_speed(8.0);
    std::array<double, 6> a{};
    for (double v : ag.q_all(obs.v, a)) CHECK(v == doctest::Approx(0.4 * 1 + 0.6 * 2));
  }
  SUBCASE("q_all equals the brute-force double loop to 1e-12") {
    MoecAgent ag(small_cfg(2, 3), 9);
    Rng rng(21);
    for (int rep = 0; rep < 20; ++rep) {
      env::EgoObservation obs;
      for (auto& v : obs.v) v = rng.uniform(-2.0, 2.0);
      std::array<double, 6> a{};
      for (auto& v : a) v = rng.uniform(-3.0, 3.0);
      std::array<double, 3> brute{};
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 3; ++j) {
          const auto q = ag.critic_forward(i, j, obs.v, a);
          const double w = ag.config().omega[(std::size_t)i] / 3.0;
          for (int o = 0; o < 3; ++o) brute[(std::size_t)o] += w * q[(std::size_t)o];
        }
      const auto got = ag.q_all(obs.v, a);
      for (int o = 0; o < 3; ++o)
        CHECK(std::abs(got[(std::size_t)o] - brute[(std::size_t)o]) < 1e-12);
    }
  }
  SUBCASE("argmax of q_all is shift invariant") {
    MoecAgent ag(small_cfg(2, 2), 30);
    Rng rng(31);
    env::EgoObservation obs;
    for (auto& v : obs.v) v = rng.uniform(-2.0, 2.0);
    std::array<double, 6> a{15, 1, 15, 1, 15, 1};
    const auto q0 = ag.q_all(obs.v, a);
    const int arg0 = (int)(std::max_element(q0.begin(), q0.end()) - q0.begin());
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        auto& p = ag.mutable_critic_params(i, j);
        for (std::size_t k = p.values.size() - 3; k < p.values.size(); ++k)
          p.values[k] += 7.5;  // constant shift on every head
      }
    const auto q1 = ag.q_all(obs.v, a);
    const int arg1 = (int)(std::max_element(q1.begin(), q1.end()) - q1.begin());
    CHECK(arg0 == arg1);
  }
}

TEST_CASE("td_targets") {
  SUBCASE("terminal transitions reduce to the immediate rewards") {
    MoecAgent ag(small_cfg(2, 2), 12);
    Rng rng(3);
    Transition tr = make_transition(rng);
    tr.done = true;
    tr.rewards = {0.25, -1.5};
    Batch batch{&tr};
    const auto t = ag.td_targets(batch);
    CHECK(t.y_ij[0] == 0.25);
    CHECK(t.y_ij[1] == 0.25);
    CHECK(t.y_ij[2] == -1.5);
    CHECK(t.y_i[0] == 0.25);
    CHECK(t.y_i[1] == -1.5);
    CHECK(t.y_all[0] == doctest::Approx(0.4 * 0.25 + 0.6 * -1.5));
  }
  SUBCASE("single critic bootstraps r + gamma * max") {
    auto cfg = small_cfg(1, 1);
    MoecAgent ag(cfg, 13);
    make_constant(ag.mutable_critic_target_params(0, 0), 2.0);
    Rng rng(4);
    Transition tr = make_transition(rng);
    tr.rewards = {1.0, 0.0};
    Batch batch{&tr};
    const auto t = ag.td_targets(batch);
    CHECK(t.y_ij[0] == doctest::Approx(1.0 + 0.9 * 2.0));
    CHECK(t.y_i[0] == doctest::Approx(2.8));
    CHECK(t.y_all[0] == doctest::Approx(2.8));
  }
  SUBCASE("y_all combines rewards with the objective weights") {
    MoecAgent ag(small_cfg(2, 2), 14);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) zero_net(ag.mutable_critic_target_params(i, j));
    Rng rng(5);
    Transition tr = make_transition(rng);
    tr.rewards = {0.5, 1.0};
    Batch batch{&tr};
    const auto t = ag.td_targets(batch);
    CHECK(t.y_all[0] == doctest::Approx(0.8));
  }
}

TEST_CASE("critic_loss") {
  SUBCASE("zero residuals give zero loss") {
    MoecAgent ag(small_cfg(2, 2), 15);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) zero_net(ag.mutable_critic_params(i, j));
    Rng rng(6);
    Transition tr = make_transition(rng);
    Batch batch{&tr};
    TdTargets t;
    t.y_ij.assign(4, 0.0);
    t.y_i.assign(2, 0.0);
    t.y_all.assign(1, 0.0);
    const auto res = ag.critic_loss(0, 0, batch, t);
    CHECK(res.combined == doctest::Approx(0.0));
    for (double g : res.param_grad) CHECK(g == 0.0);
  }
  SUBCASE("hand-computed single-sample case equals 0.3125") {
    auto cfg = small_cfg(1, 2);
    MoecAgent ag(cfg, 16);
    make_constant(ag.mutable_critic_params(0, 0), 0.0);
    make_constant(ag.mutable_critic_params(0, 1), 1.0);
    Rng rng(7);
    Transition tr = make_transition(rng, 2);
    Batch batch{&tr};
    TdTargets t;
    t.y_ij = {1.0, 123.0};  // only critic (0,0) is evaluated
    t.y_i = {1.0};
    t.y_all = {1.0};
    const auto res = ag.critic_loss(0, 0, batch, t);
    CHECK(res.terms[0] == doctest::Approx(0.5));
    CHECK(res.terms[1] == doctest::Approx(0.125));
    CHECK(res.terms[2] == doctest::Approx(0.125));
    CHECK(res.terms[3] == doctest::Approx(0.125));
    CHECK(res.combined == doctest::Approx(0.3125).epsilon(1e-12));
  }
  SUBCASE("gradient matches central finite differences") {
    MoecAgent ag(small_cfg(2, 2), 17);
    Rng rng(8);
    std::vector<Transition> trs;
    for (int k = 0; k < 3; ++k) trs.push_back(make_transition(rng, k % 3));
    Batch batch;
    for (auto& tr : trs) batch.push_back(&tr);
    const auto targets = ag.td_targets(batch);
    const auto res = ag.critic_loss(0, 1, batch, targets);
    const double h = 1e-5;
    for (int probe = 0; probe < 12; ++probe) {
      const std::size_t idx = rng.uniform_int(res.param_grad.size());
      auto& p = ag.mutable_critic_params(0, 1);
      const double keep = p.values[idx];
      p.values[idx] = keep + h;
      const double lp = ag.critic_loss(0, 1, batch, targets).combined;
      p.values[idx] = keep - h;
      const double lm = ag.critic_loss(0, 1, batch, targets).combined;
      p.values[idx] = keep;
      const double fd = (lp - lm) / (2 * h);
      CHECK(rel_err(res.param_grad[idx], fd) < 1e-4);
    }
  }
}

TEST_CASE("actor_loss") {
  SUBCASE("zero critics give zero loss and zero gradient") {
    MoecAgent ag(small_cfg(2, 2), 18);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) zero_net(ag.mutable_critic_params(i, j));
    Rng rng(9);
    Transition tr = make_transition(rng);
    Batch batch{&tr};
    const auto res = ag.actor_loss(batch);
    CHECK(res.loss == doctest::Approx(0.0));
    for (double g : res.param_grad) CHECK(g == 0.0);
  }
  SUBCASE("linear critic over action inputs: analytic loss") {
    auto cfg = small_cfg(1, 1);
    cfg.hidden = {};  // linear critic and actor
    MoecAgent ag(cfg, 19);
    auto& cp = ag.mutable_critic_params(0, 0);
    zero_net(cp);
    // Q(s, o, a) = sum of continuous inputs, identical for every head.
    for (int o = 0; o < 3; ++o)
      for (int d = 0; d < 6; ++d) cp.values[(std::size_t)(o * 48 + 42 + d)] = 1.0;
    Rng rng(10);
    Transition tr = make_transition(rng);
    Batch batch{&tr};
    const auto res = ag.actor_loss(batch);
    const auto a = ag.actor_forward(tr.s.v);
    double sum_a = 0.0;
    for (double v : a) sum_a += v;
    CHECK(res.loss == doctest::Approx(-3.0 * sum_a).epsilon(1e-9));
  }
  SUBCASE("gradient matches central finite differences") {
    MoecAgent ag(small_cfg(2, 2), 20);
    Rng rng(11);
    std::vector<Transition> trs;
    for (int k = 0; k < 3; ++k) trs.push_back(make_transition(rng));
    Batch batch;
    for (auto& tr : trs) batch.push_back(&tr);
    const auto res = ag.actor_loss(batch);
    const double h = 1e-5;
    for (int probe = 0; probe < 12; ++probe) {
      const std::size_t idx = rng.uniform_int(res.param_grad.size());
      auto& p = ag.mutable_actor_params();
      const double keep = p.values[idx];
      p.values[idx] = keep + h;
      const double lp = ag.actor_loss(batch).loss;
      p.values[idx] = keep - h;
      const double lm = ag.actor_loss(batch).loss;
      p.values[idx] = keep;
      const double fd = (lp - lm) / (2 * h);
      CHECK(rel_err(res.param_grad[idx], fd) < 1e-4);
    }
  }
}

TEST_CASE("update") {
  SUBCASE("tau = 0 freezes targets") {
    auto cfg = small_cfg(2, 2);
    cfg.tau = 0.0;
    MoecAgent ag(cfg, 21);
    const auto before = ag.critic_target_params(1, 1).values;
    Rng rng(12);
    std::vector<Transition> trs;
    for (int k = 0; k < 4; ++k) trs.push_back(make_transition(rng));
    Batch batch;
    for (auto& tr : trs) batch.push_back(&tr);
    ag.update(batch);
    CHECK(ag.critic_target_params(1, 1).values == before);
  }
  SUBCASE("zero lambda and zero critics leave parameters unchanged") {
    auto cfg = small_cfg(2, 2);
    cfg.lambda = {0, 0, 0, 0};
    MoecAgent ag(cfg, 22);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) zero_net(ag.mutable_critic_params(i, j));
    const auto actor_before = ag.mutable_actor_params().values;
    const auto critic_before = ag.critic_params(0, 0).values;
    Rng rng(13);
    std::vector<Transition> trs;
    for (int k = 0; k < 4; ++k) trs.push_back(make_transition(rng));
    Batch batch;
    for (auto& tr : trs) batch.push_back(&tr);
    ag.update(batch);
    CHECK(ag.mutable_actor_params().values == actor_before);
    CHECK(ag.critic_params(0, 0).values == critic_before);
  }
  SUBCASE("target drift is bounded by tau") {
    MoecAgent ag(small_cfg(2, 2), 23);
    const auto t_before = ag.critic_target_params(0, 0).values;
    Rng rng(14);
    std::vector<Transition> trs;
    for (int k = 0; k < 4; ++k) trs.push_back(make_transition(rng));
    Batch batch;
    for (auto& tr : trs) batch.push_back(&tr);
    ag.update(batch);
    const auto& online = ag.critic_params(0, 0).values;
    const auto& t_after = ag.critic_target_params(0, 0).values;
    double drift = 0.0, dist = 0.0;
    for (std::size_t i = 0; i < online.size(); ++i) {
      drift += (t_after[i] - t_before[i]) * (t_after[i] - t_before[i]);
      dist += (online[i] - t_before[i]) * (online[i] - t_before[i]);
    }
    CHECK(std::sqrt(drift) <= ag.config().tau * std::sqrt(dist) + 1e-12);
  }
}

TEST_CASE("fused update agrees with the standalone loss ops") {
  MoecAgent ag(small_cfg(2, 3), 55);
  Rng rng(56);
  std::vector<Transition> trs;
  for (int k = 0; k < 5; ++k) trs.push_back(make_transition(rng, k % 3));
  Batch batch;
  for (auto& tr : trs) batch.push_back(&tr);

  const auto targets = ag.td_targets(batch);
  std::array<double, 4> want_terms{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j) {
      const auto l = ag.critic_loss(i, j, batch, targets);
      for (int t = 0; t < 4; ++t) want_terms[(std::size_t)t] += l.terms[(std::size_t)t];
    }
  for (auto& v : want_terms) v /= 6.0;
  const double want_actor = ag.actor_loss(batch).loss;

  const auto diag = ag.update(batch);
  for (int t = 0; t < 4; ++t)
    CHECK(diag.critic_terms[(std::size_t)t] ==
          doctest::Approx(want_terms[(std::size_t)t]).epsilon(1e-12));
  CHECK(diag.actor_loss == doctest::Approx(want_actor).epsilon(1e-12));
}

TEST_CASE("update without the actor leaves actor parameters fixed") {
  MoecAgent ag(small_cfg(2, 2), 57);
  const auto before = ag.mutable_actor_params().values;
  const auto critic_before = ag.critic_params(0, 0).values;
  Rng rng(58);
  std::vector<Transition> trs;
  for (int k = 0; k < 4; ++k) trs.push_back(make_transition(rng));
  Batch batch;
  for (auto& tr : trs) batch.push_back(&tr);
  ag.update(batch, /*update_actor=*/false);
  CHECK(ag.mutable_actor_params().values == before);
  CHECK(ag.critic_params(0, 0).values != critic_before);
}

TEST_CASE("checkpoint round trip") {
  auto cfg = small_cfg(2, 2);
  MoecAgent ag(cfg, 24);
  Rng rng(15);
  std::vector<Transition> trs;
  for (int k = 0; k < 4; ++k) trs.push_back(make_transition(rng));
  Batch batch;
  for (auto& tr : trs) batch.push_back(&tr);
  ag.update(batch);

  const auto dir = std::filesystem::temp_directory_path() / "moec_agent_ckpt";
  std::filesystem::remove_all(dir);
  ag.save(dir, 42);
  const auto back = MoecAgent::load(dir);
  CHECK(back.train_step() == 42);
  CHECK(back.config().m_critics == 2);
  CHECK(back.critic_params(1, 1).values == ag.critic_params(1, 1).values);
  CHECK(back.critic_target_params(0, 1).values == ag.critic_target_params(0, 1).values);

  const auto obs = obs_with_speed(10.0);
  CHECK(back.actor_forward(obs.v) == ag.actor_forward(obs.v));
}
