#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "hint/vtrace.hpp"

using namespace hint;
using namespace hint::pseudorl;

namespace {

VTraceInput random_input(Rng& rng, std::size_t T, bool end_done) {
  VTraceInput in;
  in.gamma = 0.9;
  for (std::size_t t = 0; t < T; ++t) {
    in.values.push_back(rng.uniform(-1.0, 1.0));
    in.rewards.push_back(rng.uniform(-0.5, 0.5));
    const double mu = rng.uniform(-2.5, -0.1);
    in.behavior_lp.push_back(mu);
    in.target_lp.push_back(mu + rng.uniform(-1.0, 1.0));
    in.dones.push_back(false);
  }
  if (end_done)
    in.dones.back() = true;
  else
    in.bootstrap_value = rng.uniform(-1.0, 1.0);
  return in;
}

// Direct term-by-term evaluation of the summation form of the corrected
// target; an independent check on the recursive implementation.
std::vector<double> oracle_v(const VTraceInput& in) {
  const std::size_t T = in.rewards.size();
  std::vector<double> rho(T), c(T), delta(T);
  auto next_value = [&](std::size_t t) {
    if (in.dones[t]) return 0.0;
    return t + 1 < T ? in.values[t + 1] : in.bootstrap_value;
  };
  for (std::size_t t = 0; t < T; ++t) {
    const double r = std::exp(in.target_lp[t] - in.behavior_lp[t]);
    rho[t] = std::min(1.0, r);
    c[t] = std::min(1.0, r);
    delta[t] = rho[t] * (in.rewards[t] + in.gamma * next_value(t) -
                         in.values[t]);
  }
  std::vector<double> v(T);
  for (std::size_t t = 0; t < T; ++t) {
    double acc = in.values[t];
    double coef = 1.0;
    for (std::size_t j = t; j < T; ++j) {
      if (j > t) coef *= in.gamma * c[j - 1];
      acc += coef * delta[j];
      if (in.dones[j]) break;
    }
    v[t] = acc;
  }
  return v;
}

}  // namespace

TEST_CASE("on-policy weights reduce the target to the n-step return") {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    auto in = random_input(rng, 1 + rng.uniform_int(20), trial % 2 == 0);
    in.target_lp = in.behavior_lp;  // acting policy is the target policy
    auto b = vtrace_targets(in);
    const std::size_t T = in.rewards.size();
    for (std::size_t t = 0; t < T; ++t) {
      CHECK(b.rho[t] == 1.0);
      CHECK(b.c[t] == 1.0);
      double ret = 0.0, coef = 1.0;
      bool cut = false;
      for (std::size_t j = t; j < T && !cut; ++j) {
        ret += coef * in.rewards[j];
        coef *= in.gamma;
        cut = in.dones[j];
      }
      if (!cut) ret += coef * in.bootstrap_value;
      CHECK(std::fabs(b.v[t] - ret) < 1e-12);
    }
  }
}

TEST_CASE("importance weights are truncated at one and stay positive") {
  VTraceInput in;
  in.gamma = 0.9;
  in.values = {0.0, 0.0};
  in.rewards = {1.0, 1.0};
  in.behavior_lp = {std::log(0.2), std::log(0.5)};
  in.target_lp = {std::log(0.5), std::log(0.2)};  // ratios 2.5 and 0.4
  in.dones = {false, true};
  auto b = vtrace_targets(in);
  CHECK(b.rho[0] == 1.0);  // 2.5 truncated
  CHECK(b.rho[1] == doctest::Approx(0.4));
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    auto r = random_input(rng, 1 + rng.uniform_int(12), trial % 3 == 0);
    auto batch = vtrace_targets(r);
    for (std::size_t t = 0; t < r.rewards.size(); ++t) {
      CHECK(batch.rho[t] > 0.0);
      CHECK(batch.rho[t] <= 1.0);
      CHECK(batch.c[t] > 0.0);
      CHECK(batch.c[t] <= 1.0);
      CHECK(std::isfinite(batch.v[t]));
      CHECK(std::isfinite(batch.adv[t]));
    }
  }
}

TEST_CASE("targets match a term-by-term summation oracle") {
  Rng rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    auto in = random_input(rng, 1 + rng.uniform_int(15), trial % 4 == 0);
    auto b = vtrace_targets(in);
    auto v = oracle_v(in);
    for (std::size_t t = 0; t < v.size(); ++t)
      CHECK(std::fabs(b.v[t] - v[t]) < 1e-10);
  }
}

TEST_CASE("advantages bootstrap with the next corrected target") {
  Rng rng(13);
  auto in = random_input(rng, 6, false);
  auto b = vtrace_targets(in);
  for (std::size_t t = 0; t < 6; ++t) {
    const double vnext = t + 1 < 6 ? b.v[t + 1] : in.bootstrap_value;
    CHECK(b.adv[t] == doctest::Approx(in.rewards[t] + in.gamma * vnext -
                                      in.values[t]).epsilon(1e-12));
  }
}

TEST_CASE("malformed segments are rejected") {
  VTraceInput in;
  in.gamma = 0.9;
  CHECK_THROWS_AS(vtrace_targets(in), std::invalid_argument);  // empty
  in.values = {0.0};
  in.rewards = {1.0};
  in.behavior_lp = {-0.5};
  in.target_lp = {-0.5};
  in.dones = {true};
  CHECK_NOTHROW(vtrace_targets(in));
  auto bad = in;
  bad.behavior_lp = {-std::numeric_limits<double>::infinity()};
  CHECK_THROWS_AS(vtrace_targets(bad), std::invalid_argument);
  bad = in;
  bad.gamma = 1.0;
  CHECK_THROWS_AS(vtrace_targets(bad), std::invalid_argument);
  bad = in;
  bad.values = {0.0, 0.0};
  CHECK_THROWS_AS(vtrace_targets(bad), std::invalid_argument);
}

TEST_CASE("repeated operator application contracts on a tabular model") {
  // 3 states, 2 actions, exact probabilities; the operator is evaluated in
  // expectation by enumerating every 2-step path.
  Rng rng(17);
  double P[3][2][3], R[3][2], mu[3][2], pi[3][2];
  for (int s = 0; s < 3; ++s)
    for (int a = 0; a < 2; ++a) {
      double z = 0.0;
      for (int n = 0; n < 3; ++n) z += P[s][a][n] = rng.uniform(0.05, 1.0);
      for (int n = 0; n < 3; ++n) P[s][a][n] /= z;
      R[s][a] = rng.uniform(-1.0, 1.0);
      mu[s][a] = rng.uniform(0.1, 0.9);
      pi[s][a] = rng.uniform(0.1, 0.9);
    }
  for (int s = 0; s < 3; ++s) {
    const double zm = mu[s][0] + mu[s][1], zp = pi[s][0] + pi[s][1];
    for (int a = 0; a < 2; ++a) {
      mu[s][a] /= zm;
      pi[s][a] /= zp;
    }
  }
  std::vector<double> V = {rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0),
                           rng.uniform(-2.0, 2.0)};
  double prev_diff = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < 40; ++iter) {
    std::vector<double> next(3, 0.0);
    for (int s0 = 0; s0 < 3; ++s0) {
      for (int a0 = 0; a0 < 2; ++a0)
        for (int s1 = 0; s1 < 3; ++s1)
          for (int a1 = 0; a1 < 2; ++a1)
            for (int s2 = 0; s2 < 3; ++s2) {
              const double prob = mu[s0][a0] * P[s0][a0][s1] * mu[s1][a1] *
                                  P[s1][a1][s2];
              VTraceInput in;
              in.gamma = 0.9;
              in.values = {V[s0], V[s1]};
              in.bootstrap_value = V[s2];
              in.rewards = {R[s0][a0], R[s1][a1]};
              in.behavior_lp = {std::log(mu[s0][a0]), std::log(mu[s1][a1])};
              in.target_lp = {std::log(pi[s0][a0]), std::log(pi[s1][a1])};
              in.dones = {false, false};
              next[s0] += prob * vtrace_targets(in).v[0];
            }
    }
    double diff = 0.0;
    for (int s = 0; s < 3; ++s) diff = std::max(diff, std::fabs(next[s] - V[s]));
    if (iter >= 1) CHECK(diff <= prev_diff + 1e-12);
    prev_diff = diff;
    V = next;
  }
  CHECK(prev_diff < 1e-4);  // converged
}

TEST_CASE("value loss arithmetic and gradients") {
  CHECK(value_loss({1.0}, {3.0}) == doctest::Approx(4.0));
  CHECK(value_loss({0.3, -0.7}, {0.3, -0.7}) == doctest::Approx(0.0));
  CHECK_THROWS_AS(value_loss({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(value_loss({1.0}, {1.0, 2.0}), std::invalid_argument);

  auto cfg = env::preset("fc-easy", 3);
  Rng rng(19);
  auto p = teacher::init_teacher(cfg, rng);
  auto [s, obs] = env::reset(cfg);
  std::vector<Tensor> f;
  std::vector<int> stay(s.n_agents(), env::Stay);
  for (int t = 0; t < 4; ++t) {
    f.push_back(env::global_observe(s));
    env::step(s, stay);
  }
  std::vector<const Tensor*> fp;
  for (const auto& t : f) fp.push_back(&t);
  std::vector<double> targets = {0.4, -0.2, 0.9, 0.1};
  auto build = [&](Tape& t) { return value_loss_node(t, fp, targets); };
  CHECK(grad_check(build, p.value, 1e-5) < 1e-4);
}

TEST_CASE("policy surrogate arithmetic, plain form on all-teacher batches") {
  // unit weights: plain advantage-weighted log-prob mean
  CHECK(policy_objective({-0.5, -1.0}, {1.0, 1.0}, {2.0, -1.0}) ==
        doctest::Approx(0.5 * (-0.5 * 2.0 + -1.0 * -1.0)));
  // student steps carry the probability-ratio weight
  CHECK(policy_objective({-0.5}, {0.4}, {2.0}) ==
        doctest::Approx(0.4 * -0.5 * 2.0));
  CHECK_THROWS_AS(policy_objective({}, {}, {}), std::invalid_argument);
}

TEST_CASE("zero advantages give a zero coordinator gradient") {
  auto cfg = env::preset("marine-easy", 5);
  Rng rng(23);
  auto p = teacher::init_teacher(cfg, rng);
  auto [s, obs] = env::reset(cfg);
  const Tensor feats = env::global_observe(s);
  auto hs = teacher::sample_subgoals(p.high, s, feats, rng);

  Tape t(&p.high);
  auto lp = teacher::subgoal_log_prob_node(t, s, feats, hs.bits);
  t.backward(t.scale(lp, 0.0));  // advantage 0
  for (const auto& [name, g] : t.param_grads())
    for (double v : g.data) CHECK(v == 0.0);
}

TEST_CASE("coordinator surrogate gradient matches finite differences") {
  auto cfg = env::preset("marine-easy", 7);
  Rng rng(29);
  auto p = teacher::init_teacher(cfg, rng);
  student::StudentConfig sc;
  auto phi2 = student::init_student(cfg, sc, rng);
  auto tr = rollout_mixed(cfg, phi2, sc, p, 2, 31);
  REQUIRE(!tr.steps.empty());
  std::vector<double> adv, w;
  Rng arng(33);
  for (const auto& st : tr.steps) {
    adv.push_back(arng.uniform(-1.0, 1.0));
    w.push_back(st.student ? arng.uniform(0.2, 1.0) : 1.0);
  }
  auto build = [&](Tape& t) {
    Tape::Var obj = -1;
    for (std::size_t i = 0; i < tr.steps.size(); ++i) {
      const auto& st = tr.steps[i];
      Tape::Var lp =
          st.refreshed
              ? t.add_scalar(teacher::subgoal_log_prob_node(
                                 t, st.state, st.feats, st.goal_bits),
                             st.low_lp)
              : t.constant_scalar(st.low_lp);
      auto term = t.scale(lp, w[i] * adv[i]);
      obj = obj < 0 ? term : t.add(obj, term);
    }
    return t.scale(obj, 1.0 / double(tr.steps.size()));
  };
  CHECK(grad_check(build, p.high, 1e-5) < 1e-4);
}

TEST_CASE("mixed rollouts follow the switch point and record who acted") {
  auto cfg = env::preset("fc-easy", 9);
  Rng rng(37);
  auto p = teacher::init_teacher(cfg, rng);
  student::StudentConfig sc;
  sc.hidden = 8;
  sc.message = 4;
  auto phi = student::init_student(cfg, sc, rng);
  bool saw_teacher_step = false;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto tr = rollout_mixed(cfg, phi, sc, p, 3, seed);
    CHECK(tr.switch_point >= 1);
    CHECK(tr.switch_point <= cfg.max_steps);
    CHECK(int(tr.steps.size()) <= cfg.max_steps);
    REQUIRE(!tr.steps.empty());
    for (std::size_t t = 0; t < tr.steps.size(); ++t) {
      const auto& st = tr.steps[t];
      CHECK(st.student == (int(t) < tr.switch_point));
      CHECK(std::isfinite(st.behavior_lp));
      CHECK(std::isfinite(st.low_lp));
      CHECK(!st.goal_bits.empty());
      saw_teacher_step |= !st.student;
      // the coordinator refreshes exactly on its schedule
      CHECK(st.refreshed == (t % 3 == 0));
    }
    for (std::size_t t = 0; t + 1 < tr.steps.size(); ++t)
      CHECK(!tr.steps[t].done);
  }
  CHECK(saw_teacher_step);
  auto a = rollout_mixed(cfg, phi, sc, p, 3, 123);
  auto b = rollout_mixed(cfg, phi, sc, p, 3, 123);
  REQUIRE(a.steps.size() == b.steps.size());
  for (std::size_t t = 0; t < a.steps.size(); ++t) {
    CHECK(a.steps[t].actions == b.steps[t].actions);
    CHECK(a.steps[t].behavior_lp == b.steps[t].behavior_lp);
  }
}

TEST_CASE("refinement touches only the coordinator and the value head") {
  auto cfg = env::preset("fc-easy", 11);
  Rng rng(41);
  auto p = teacher::init_teacher(cfg, rng);
  student::StudentConfig sc;
  sc.hidden = 8;
  sc.message = 4;
  auto phi = student::init_student(cfg, sc, rng);
  const auto low_before = p.low;
  const auto phi_before = phi;
  const auto high_before = p.high;
  const auto value_before = p.value;

  PseudoConfig pc;
  pc.n = 60;
  pc.n_pseudo = 4;
  pc.gamma = 0.9;
  pc.k = 3;
  pc.seed = 5;
  AdamState av, ap;
  auto stats = pseudo_update(p, cfg, phi, sc, pc, av, ap);
  CHECK(stats.episodes == 4);
  CHECK(stats.steps >= stats.updates * pc.n);
  CHECK(stats.updates == stats.steps / pc.n);  // leftovers dropped
  CHECK(stats.skipped == 0);
  CHECK(p.low == low_before);    // executors frozen, bit-exact
  CHECK(phi == phi_before);      // student frozen
  if (stats.updates > 0) {
    CHECK(!(p.high == high_before));
    CHECK(!(p.value == value_before));
  }
}

TEST_CASE("parallel rollout workers leave the update sequence unchanged") {
  auto cfg = env::preset("marine-easy", 13);
  Rng rng(43);
  auto p1 = teacher::init_teacher(cfg, rng);
  auto p2 = p1;
  student::StudentConfig sc;
  sc.hidden = 8;
  sc.message = 4;
  Rng rng2(44);
  auto phi = student::init_student(cfg, sc, rng2);
  PseudoConfig pc;
  pc.n = 5000;  // never fills: no updates, so rollouts see frozen params
  pc.n_pseudo = 6;
  pc.seed = 77;
  AdamState av1, ap1, av2, ap2;
  pc.workers = 1;
  auto s1 = pseudo_update(p1, cfg, phi, sc, pc, av1, ap1);
  pc.workers = 4;
  auto s2 = pseudo_update(p2, cfg, phi, sc, pc, av2, ap2);
  CHECK(s1.steps == s2.steps);
  CHECK(s1.episodes == s2.episodes);
  CHECK(p1.high == p2.high);
  CHECK(p1.value == p2.value);
}

TEST_CASE("refinement recovers a degraded coordinator's success rate") {
  const int k = 3;
  auto cfg = env::preset("fc-easy", 0);
  teacher::PretrainConfig tc;
  tc.preset = "fc-easy";
  tc.k = k;
  tc.workers_low = 8;
  tc.workers_high = 8;
  tc.low_timesteps = 200000;
  tc.high_timesteps = 50000;
  tc.seed = 5;
  Rng rng(1);
  auto p = teacher::init_teacher(cfg, rng);
  teacher::pretrain_low_level(p, tc);
  teacher::pretrain_high_level(p, tc);
  teacher::TeacherPolicy base_pol(p, k);
  const double base = success_rate(base_pol, cfg, 50, 999);
  REQUIRE(base > 0.5);

  student::StudentConfig sc;
  Rng r2(3);
  auto phi = student::init_student(cfg, sc, r2);

  double recovered_sum = 0.0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    auto pd = p;
    for (auto& [name, t] : pd.high)  // wipe the coordinator
      for (double& v : t.data) v = 0.0;
    pseudorl::PseudoConfig pc;
    pc.n = 200;
    pc.n_pseudo = 10;
    pc.gamma = 0.9;
    pc.k = k;
    pc.lr_value = 5e-4;
    pc.lr_policy = 5e-4;
    AdamState av, ap;
    for (int epoch = 0; epoch < 10; ++epoch) {
      pc.seed = seed * 1000 + epoch;
      auto st = pseudorl::pseudo_update(pd, cfg, phi, sc, pc, av, ap);
      CHECK(st.skipped == 0);
    }
    teacher::TeacherPolicy pol(pd, k);
    recovered_sum += success_rate(pol, cfg, 50, 999 + seed);
  }
  CHECK(recovered_sum / 3.0 >= base - 0.10);
}
