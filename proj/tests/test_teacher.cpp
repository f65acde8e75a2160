#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hint/teacher.hpp"

using namespace hint;
using namespace hint::teacher;

namespace {

void zero_params(ParamSet& p) {
  for (auto& [name, t] : p)
    for (double& v : t.data) v = 0.0;
}

// Fraction of episodes in which a single evaluated agent touches its
// assigned target within the horizon. All other agents hold still so the
// target is stationary and the oracle measures navigation, not pursuit of a
// same-speed peer.
double reach_rate(const TeacherParams& p, const std::string& preset_name,
                  int episodes, std::uint64_t seed, bool random_policy) {
  int reached = 0;
  Rng rng(seed);
  for (int e = 0; e < episodes; ++e) {
    auto cfg = env::preset(preset_name, seed * 31 + e);
    if (cfg.domain == env::Domain::Marine) {
      cfg.initial_fuel = 1e6;
      cfg.marine_refuel = false;
    }
    auto [s, obs] = env::reset(cfg);
    const int agent = e % s.n_agents();
    int rows = 0;
    for (int i = 0; i < s.n_agents(); ++i)
      rows += env::num_targets(cfg, s.agent_class(i));
    std::vector<std::uint8_t> bits(rows, 0);
    {
      const int off = env::feature_row_offset(s, agent);
      const int nt = env::num_targets(cfg, s.agent_class(agent));
      bits[off + rng.uniform_int(nt)] = 1;
    }
    for (int t = 0; t < 40 && !s.terminated; ++t) {
      std::vector<int> a(s.n_agents(), env::Stay);
      if (random_policy) {
        a[agent] =
            int(rng.uniform_int(env::n_actions(cfg, s.agent_class(agent))));
      } else {
        std::vector<double> input = obs[agent].features;
        const auto gf = goal_features(s, agent, bits);
        input.insert(input.end(), gf.begin(), gf.end());
        // sampled, matching how the executors are driven when acting
        a[agent] = int(sample_categorical(
            low_level_policy(p.low, cfg, s.agent_class(agent), input), rng));
      }
      auto r = env::step(s, a);
      obs = std::move(r.obs);
      if (goal_features(s, agent, bits)[2] == 0.0) {
        ++reached;
        break;
      }
    }
  }
  return double(reached) / episodes;
}

}  // namespace

TEST_CASE("zeroed coordinator gives every bit probability one half") {
  auto cfg = env::preset("fc-medium", 3);
  Rng rng(1);
  auto p = init_teacher(cfg, rng);
  zero_params(p.high);
  auto [s, obs] = env::reset(cfg);
  auto probs = high_level_probs(p.high, s, env::global_observe(s));
  CHECK(probs.size() == 20);
  for (double pr : probs) CHECK(pr == doctest::Approx(0.5));
}

TEST_CASE("medium-scenario subgoal vectors have one bit per subarea") {
  // e.g. the assignments (1,0,1,1) and (1,1,1,0) over four subareas
  auto cfg = env::preset("fc-medium", 5);
  Rng rng(2);
  auto p = init_teacher(cfg, rng);
  auto [s, obs] = env::reset(cfg);
  CHECK(env::num_targets(cfg, 0) == 4);
  CHECK(env::num_targets(cfg, 1) == 4);
  auto hs = sample_subgoals(p.high, s, env::global_observe(s), rng);
  CHECK(hs.bits.size() == 20);
  CHECK(std::isfinite(hs.log_prob));
  CHECK(hs.log_prob <= 0.0);
}

TEST_CASE("an all-zero draw is remapped to the nearest-target singleton") {
  auto cfg = env::preset("marine-easy", 7);
  Rng rng(3);
  auto p = init_teacher(cfg, rng);
  zero_params(p.high);
  p.high.get("sc2.b").data[0] = -50.0;  // probabilities ~0 everywhere
  auto [s, obs] = env::reset(cfg);
  auto hs = sample_subgoals(p.high, s, env::global_observe(s), rng);
  for (int i = 0; i < s.n_agents(); ++i) {
    const int off = env::feature_row_offset(s, i);
    const int nt = env::num_targets(cfg, s.agent_class(i));
    int set = 0, which = -1;
    for (int t = 0; t < nt; ++t)
      if (hs.bits[off + t]) {
        ++set;
        which = t;
      }
    CHECK(set == 1);
    // the singleton is the closest target
    const auto cells = env::target_cells(s, i);
    const auto d = [&](int t) {
      return std::abs(cells[t].x - s.pos[i].x) +
             std::abs(cells[t].y - s.pos[i].y);
    };
    for (int t = 0; t < nt; ++t) CHECK(d(which) <= d(t));
  }
}

TEST_CASE("taped assignment log-prob matches the sampling-path value") {
  auto cfg = env::preset("fc-medium", 11);
  Rng rng(4);
  auto p = init_teacher(cfg, rng);
  auto [s, obs] = env::reset(cfg);
  const Tensor feats = env::global_observe(s);
  for (int trial = 0; trial < 5; ++trial) {
    auto hs = sample_subgoals(p.high, s, feats, rng);
    Tape t(&p.high);
    const double lp = t.scalar(subgoal_log_prob_node(t, s, feats, hs.bits));
    CHECK(lp == doctest::Approx(hs.log_prob).epsilon(1e-9));
  }
}

TEST_CASE("coordinator log-prob and entropy pass the gradient oracle") {
  auto cfg = env::preset("marine-easy", 13);
  Rng rng(5);
  auto p = init_teacher(cfg, rng);
  auto [s, obs] = env::reset(cfg);
  const Tensor feats = env::global_observe(s);
  auto hs = sample_subgoals(p.high, s, feats, rng);
  auto build_lp = [&](Tape& t) {
    return subgoal_log_prob_node(t, s, feats, hs.bits);
  };
  CHECK(grad_check(build_lp, p.high, 1e-5) < 1e-4);
  // entropy gradients are tiny near the symmetric init, so the relative
  // finite-difference tolerance is looser here
  auto build_ent = [&](Tape& t) { return subgoal_entropy_node(t, s, feats); };
  CHECK(grad_check(build_ent, p.high, 1e-5) < 1e-3);
}

TEST_CASE("executor distributions are normalized and class-checked") {
  auto cfg = env::preset("fc-easy", 17);
  Rng rng(6);
  auto p = init_teacher(cfg, rng);
  auto [s, obs] = env::reset(cfg);
  for (int i = 0; i < s.n_agents(); ++i) {
    std::vector<double> input = obs[i].features;
    std::vector<std::uint8_t> bits(
        env::num_targets(cfg, 0) * cfg.n_type1 +
            env::num_targets(cfg, 1) * cfg.n_type2, 1);
    const auto gf = goal_features(s, i, bits);
    input.insert(input.end(), gf.begin(), gf.end());
    auto probs = low_level_policy(p.low, cfg, s.agent_class(i), input);
    CHECK(int(probs.size()) == env::n_actions(cfg, s.agent_class(i)));
    double sum = 0.0;
    for (double v : probs) sum += v;
    CHECK(std::fabs(sum - 1.0) < 1e-12);
    // wrong class -> width mismatch -> rejected
    CHECK_THROWS_AS(low_level_policy(p.low, cfg, 1 - s.agent_class(i), input),
                    std::invalid_argument);
  }
  // zero weights -> exactly uniform
  zero_params(p.low);
  std::vector<double> input(low_level_input_dim(cfg, 0), 0.3);
  auto probs = low_level_policy(p.low, cfg, 0, input);
  for (double v : probs) CHECK(v == doctest::Approx(1.0 / probs.size()));
}

TEST_CASE("subgoals refresh only on multiples of k") {
  auto cfg = env::preset("marine-medium", 19);
  Rng rng(7);
  auto p = init_teacher(cfg, rng);
  auto [s, obs] = env::reset(cfg);
  Subgoals g;
  const int k = 3;
  std::vector<std::uint8_t> last_bits;
  for (int t = 0; t < 12 && !s.terminated; ++t) {
    auto ar = teacher_act(s, obs, p, k, g, rng);
    CHECK(ar.refreshed == (t % k == 0));
    if (t % k != 0) {
      CHECK(g.bits == last_bits);
      CHECK(ar.high_log_prob == 0.0);
    }
    last_bits = g.bits;
    auto r = env::step(s, ar.actions);
    obs = std::move(r.obs);
  }
}

TEST_CASE("joint log-prob factorizes into high plus per-agent low terms") {
  auto cfg = env::preset("fc-easy", 23);
  Rng rng(8);
  auto p = init_teacher(cfg, rng);
  auto [s, obs] = env::reset(cfg);
  Subgoals g;
  Rng copy = rng;  // replay the same draws
  auto ar = teacher_act(s, obs, p, 1, g, rng);
  // replay: sample subgoals with the copied rng, then per-agent actions
  auto hs = sample_subgoals(p.high, s, env::global_observe(s), copy);
  CHECK(hs.bits == g.bits);
  double expect = hs.log_prob;
  for (int i = 0; i < s.n_agents(); ++i) {
    std::vector<double> input = obs[i].features;
    const auto gf = goal_features(s, i, g.bits);
    input.insert(input.end(), gf.begin(), gf.end());
    const auto logits = low_level_logits(p.low, cfg, s.agent_class(i), input);
    expect += log_softmax_at(logits, ar.actions[i]);
  }
  CHECK(ar.log_prob == doctest::Approx(expect).epsilon(1e-12));
  CHECK(ar.high_log_prob == doctest::Approx(hs.log_prob));
}

TEST_CASE("value head: zero weights give zero, presets give finite values") {
  Rng rng(9);
  for (const char* name : {"marine-easy", "fc-hard"}) {
    auto cfg = env::preset(name, 29);
    auto p = init_teacher(cfg, rng);
    auto [s, obs] = env::reset(cfg);
    const Tensor feats = env::global_observe(s);
    CHECK(std::isfinite(teacher_value(p.value, feats)));
    zero_params(p.value);
    CHECK(teacher_value(p.value, feats) == 0.0);
  }
}

TEST_CASE("value head passes the gradient oracle") {
  auto cfg = env::preset("marine-easy", 31);
  Rng rng(10);
  auto p = init_teacher(cfg, rng);
  auto [s, obs] = env::reset(cfg);
  const Tensor feats = env::global_observe(s);
  auto build = [&](Tape& t) { return teacher_value_node(t, feats); };
  CHECK(grad_check(build, p.value, 1e-5) < 1e-4);
}

TEST_CASE("executor pretraining lifts the reach rate far above random") {
  auto cfg = env::preset("marine-easy", 0);
  Rng rng(11);
  auto p = init_teacher(cfg, rng);
  const double before = reach_rate(p, "marine-easy", 100, 77, false);
  const double random_baseline = reach_rate(p, "marine-easy", 100, 77, true);
  PretrainConfig pc;
  pc.preset = "marine-easy";
  pc.workers_low = 4;
  pc.low_timesteps = 64000;
  pc.seed = 3;
  pretrain_low_level(p, pc);
  for (const auto& [name, t] : p.low) CHECK(t.all_finite());
  const double after = reach_rate(p, "marine-easy", 200, 78, false);
  INFO("before=", before, " random=", random_baseline, " after=", after);
  CHECK(after > 0.9);
  CHECK(after > random_baseline + 0.2);

  // from one cell away, the correct move dominates the distribution (the
  // entropy bonus keeps some mass on other actions, so the contract is
  // argmax-correctness plus a mean-probability floor)
  int correct_argmax = 0, cases = 0;
  double prob_sum = 0.0;
  Rng rng2(55);
  for (int e = 0; e < 50; ++e) {
    auto c2 = env::preset("marine-easy", 900 + e);
    c2.initial_fuel = 1e6;
    c2.marine_refuel = false;
    auto [s, obs] = env::reset(c2);
    // routing agent 0 aimed at the destination, teleported adjacent to it
    const int nt = env::num_targets(c2, 0);
    std::vector<std::uint8_t> bits(
        nt * c2.n_type1 + env::num_targets(c2, 1) * c2.n_type2, 0);
    bits[nt - 1] = 1;  // last class-0 target = the destination
    const env::Cell d = s.destinations[0];
    const env::Cell from{d.x > 0 ? d.x - 1 : d.x + 1, d.y};
    bool occupied = false;
    for (const auto& q : s.pos) occupied |= q == from;
    if (occupied) continue;
    s.pos[0] = from;
    obs = env::observe(s);
    std::vector<double> input = obs[0].features;
    const auto gf = goal_features(s, 0, bits);
    input.insert(input.end(), gf.begin(), gf.end());
    const auto probs = low_level_policy(p.low, c2, 0, input);
    const int correct = d.x > from.x ? env::Right : env::Left;
    correct_argmax += int(argmax(probs)) == correct;
    prob_sum += probs[correct];
    ++cases;
  }
  INFO("correct_argmax=", correct_argmax, " cases=", cases,
       " mean_prob=", prob_sum / cases);
  CHECK(correct_argmax >= cases * 95 / 100);
  CHECK(prob_sum / cases > 0.7);
}

TEST_CASE("coordinator pretraining leaves the executors bit-identical") {
  auto cfg = env::preset("marine-easy", 0);
  Rng rng(12);
  auto p = init_teacher(cfg, rng);
  const ParamSet low_before = p.low;
  const ParamSet high_before = p.high;
  PretrainConfig pc;
  pc.preset = "marine-easy";
  pc.workers_high = 4;
  pc.high_timesteps = 600;
  pc.rollout_len = 10;
  pc.seed = 5;
  pretrain_high_level(p, pc);
  CHECK(p.low == low_before);
  CHECK_FALSE(p.high == high_before);
  for (const auto& [name, t] : p.high) CHECK(t.all_finite());
  for (const auto& [name, t] : p.value) CHECK(t.all_finite());
}

TEST_CASE("teacher acting is deterministic given the rng stream") {
  auto cfg = env::preset("fc-medium", 37);
  Rng rng(13);
  auto p = init_teacher(cfg, rng);
  auto [s1, o1] = env::reset(cfg);
  auto [s2, o2] = env::reset(cfg);
  Subgoals g1, g2;
  Rng a(99), b(99);
  for (int t = 0; t < 10 && !s1.terminated; ++t) {
    auto r1 = teacher_act(s1, o1, p, 3, g1, a);
    auto r2 = teacher_act(s2, o2, p, 3, g2, b);
    REQUIRE(r1.actions == r2.actions);
    REQUIRE(r1.log_prob == r2.log_prob);
    o1 = env::step(s1, r1.actions).obs;
    o2 = env::step(s2, r2.actions).obs;
  }
}
