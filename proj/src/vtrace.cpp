#include "hint/vtrace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hint::pseudorl {

namespace {

// Executor-side log-prob of a recorded joint action given the live subgoal
// assignment. The executors are frozen during refinement, so this value is
// valid for the whole epoch.
double executor_log_prob(const env::WorldState& s, const env::JointObs& obs,
                         const teacher::TeacherParams& p,
                         const std::vector<std::uint8_t>& bits,
                         const std::vector<int>& actions) {
  double lp = 0.0;
  for (int i = 0; i < s.n_agents(); ++i) {
    std::vector<double> input = obs[i].features;
    const auto gf = teacher::goal_features(s, i, bits);
    input.insert(input.end(), gf.begin(), gf.end());
    const auto logits =
        teacher::low_level_logits(p.low, s.config, s.agent_class(i), input);
    lp += log_softmax_at(logits, std::size_t(actions[i]));
  }
  return lp;
}

}  // namespace

MixedTrajectory rollout_mixed(const env::EnvConfig& cfg, const ParamSet& phi,
                              const student::StudentConfig& sc,
                              const teacher::TeacherParams& p, int k,
                              std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("rollout_mixed: k must be >= 1");
  env::EnvConfig c = cfg;
  c.seed = seed;
  Rng rng(seed * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull);
  auto [s, obs] = env::reset(c);

  MixedTrajectory tr;
  tr.seed = seed;
  tr.switch_point = 1 + int(rng.uniform_int(std::uint64_t(cfg.max_steps)));

  student::RecurrentState h = student::initial_state(cfg, sc);
  teacher::Subgoals g;
  for (int t = 0; t < cfg.max_steps && !s.terminated; ++t) {
    MixedStep st;
    st.obs = obs;
    st.feats = env::global_observe(s);

    // advance the coordinator on its refresh schedule regardless of who acts
    double high_lp = 0.0;
    if (g.bits.empty() || g.age % k == 0) {
      auto hs = teacher::sample_subgoals(p.high, s, st.feats, rng);
      g.bits = std::move(hs.bits);
      g.age = 0;
      high_lp = hs.log_prob;
      st.refreshed = true;
      st.state = s;  // kept so the assignment log-prob can be re-evaluated
    }
    st.goal_bits = g.bits;

    st.student = t < tr.switch_point;
    if (st.student) {
      auto out = student::student_act(phi, sc, cfg, obs, h, rng);
      st.actions = out.actions;
      st.behavior_lp = out.joint_log_prob;
      h = std::move(out.next);
    } else {
      st.actions.resize(s.n_agents());
      double low_lp = 0.0;
      for (int i = 0; i < s.n_agents(); ++i) {
        std::vector<double> input = obs[i].features;
        const auto gf = teacher::goal_features(s, i, g.bits);
        input.insert(input.end(), gf.begin(), gf.end());
        const auto logits = teacher::low_level_logits(
            p.low, s.config, s.agent_class(i), input);
        const auto probs = softmax_probs(logits);
        const std::size_t a = sample_categorical(probs, rng);
        st.actions[i] = int(a);
        low_lp += log_softmax_at(logits, a);
      }
      st.behavior_lp = high_lp + low_lp;
    }
    st.low_lp = executor_log_prob(s, obs, p, g.bits, st.actions);
    ++g.age;

    auto res = env::step(s, st.actions);
    st.reward = 0.0;
    for (double r : res.rewards) st.reward += r;
    st.done = res.done;
    obs = std::move(res.obs);
    tr.steps.push_back(std::move(st));
  }
  tr.bootstrap_feats = env::global_observe(s);
  tr.terminated = s.terminated;
  return tr;
}

VTraceBatch vtrace_targets(const VTraceInput& in) {
  const std::size_t T = in.rewards.size();
  if (T == 0) throw std::invalid_argument("vtrace_targets: empty segment");
  if (in.values.size() != T || in.target_lp.size() != T ||
      in.behavior_lp.size() != T || in.dones.size() != T)
    throw std::invalid_argument("vtrace_targets: field lengths disagree");
  if (!(in.gamma > 0.0 && in.gamma < 1.0))
    throw std::invalid_argument("vtrace_targets: gamma must be in (0,1)");

  VTraceBatch b;
  b.v.resize(T);
  b.rho.resize(T);
  b.c.resize(T);
  b.delta.resize(T);
  b.adv.resize(T);

  for (std::size_t t = 0; t < T; ++t) {
    if (std::isinf(in.behavior_lp[t]) && in.behavior_lp[t] < 0.0)
      throw std::invalid_argument(
          "vtrace_targets: behavior log-prob is -inf for an executed action");
    const double ratio = std::exp(in.target_lp[t] - in.behavior_lp[t]);
    const double w = std::min(1.0, ratio);
    if (std::isnan(w) || !(w > 0.0))
      throw std::invalid_argument("vtrace_targets: weight outside (0, 1]");
    b.rho[t] = w;
    b.c[t] = w;
  }

  auto next_value = [&](std::size_t t) {
    if (in.dones[t]) return 0.0;  // terminal observation has value 0
    return t + 1 < T ? in.values[t + 1] : in.bootstrap_value;
  };
  for (std::size_t t = 0; t < T; ++t)
    b.delta[t] =
        b.rho[t] * (in.rewards[t] + in.gamma * next_value(t) - in.values[t]);

  // backward recursion: v_t - V_t = delta_t + gamma c_t (v_{t+1} - V_{t+1});
  // the correction past the segment end or an episode boundary is zero.
  double carry = 0.0;  // v_{t+1} - V(o_{t+1})
  for (std::size_t ti = T; ti-- > 0;) {
    if (in.dones[ti]) carry = 0.0;
    const double corr = b.delta[ti] + in.gamma * b.c[ti] * carry;
    b.v[ti] = in.values[ti] + corr;
    carry = corr;
  }

  for (std::size_t t = 0; t < T; ++t) {
    double vnext;
    if (in.dones[t])
      vnext = 0.0;
    else
      vnext = t + 1 < T ? b.v[t + 1] : in.bootstrap_value;
    b.adv[t] = in.rewards[t] + in.gamma * vnext - in.values[t];
    if (!std::isfinite(b.v[t]) || !std::isfinite(b.adv[t]))
      throw std::invalid_argument("vtrace_targets: non-finite output");
  }
  return b;
}

double value_loss(const std::vector<double>& predictions,
                  const std::vector<double>& targets) {
  if (predictions.empty() || predictions.size() != targets.size())
    throw std::invalid_argument("value_loss: size mismatch or empty");
  double acc = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions[i] - targets[i];
    acc += d * d;
  }
  return acc / double(predictions.size());
}

Tape::Var value_loss_node(Tape& t, const std::vector<const Tensor*>& feats,
                          const std::vector<double>& targets) {
  if (feats.empty() || feats.size() != targets.size())
    throw std::invalid_argument("value_loss_node: size mismatch or empty");
  Tape::Var acc = -1;
  for (std::size_t i = 0; i < feats.size(); ++i) {
    auto d = t.add_scalar(teacher::teacher_value_node(t, *feats[i]),
                          -targets[i]);
    auto sq = t.square(d);
    acc = acc < 0 ? sq : t.add(acc, sq);
  }
  return t.scale(acc, 1.0 / double(feats.size()));
}

double policy_objective(const std::vector<double>& target_lp,
                        const std::vector<double>& weights,
                        const std::vector<double>& advantages) {
  if (target_lp.empty() || target_lp.size() != weights.size() ||
      target_lp.size() != advantages.size())
    throw std::invalid_argument("policy_objective: size mismatch or empty");
  double acc = 0.0;
  for (std::size_t i = 0; i < target_lp.size(); ++i)
    acc += weights[i] * target_lp[i] * advantages[i];
  return acc / double(target_lp.size());
}

namespace {

struct BufferStep {
  const MixedTrajectory* tr;
  std::size_t idx;
};

// Flush one full buffer: corrected targets per contiguous episode segment,
// then one descent step on the value head and one ascent step on the
// coordinator.
void flush(std::vector<BufferStep>& buffer, teacher::TeacherParams& p,
           const PseudoConfig& pc, AdamState& adam_value,
           AdamState& adam_policy, PseudoStats& stats) {
  const std::size_t N = buffer.size();

  // target-policy log-prob of each executed action under the current
  // coordinator (taped: refresh steps carry the assignment probability)
  Tape tape(&p.high);
  std::vector<Tape::Var> lp_nodes(N);
  std::vector<double> lp(N);
  for (std::size_t i = 0; i < N; ++i) {
    const MixedStep& st = buffer[i].tr->steps[buffer[i].idx];
    if (st.refreshed) {
      auto high = teacher::subgoal_log_prob_node(tape, st.state, st.feats,
                                                 st.goal_bits);
      lp_nodes[i] = tape.add_scalar(high, st.low_lp);
    } else {
      lp_nodes[i] = tape.constant_scalar(st.low_lp);
    }
    lp[i] = tape.scalar(lp_nodes[i]);
  }

  // corrected targets, computed per contiguous episode segment
  std::vector<double> targets(N), adv(N), weights(N);
  std::size_t begin = 0;
  while (begin < N) {
    std::size_t end = begin + 1;
    while (end < N && buffer[end].tr == buffer[begin].tr &&
           buffer[end].idx == buffer[end - 1].idx + 1)
      ++end;
    const MixedTrajectory* tr = buffer[begin].tr;
    VTraceInput in;
    in.gamma = pc.gamma;
    for (std::size_t i = begin; i < end; ++i) {
      const MixedStep& st = tr->steps[buffer[i].idx];
      in.values.push_back(teacher::teacher_value(p.value, st.feats));
      in.rewards.push_back(st.reward);
      in.target_lp.push_back(lp[i]);
      in.behavior_lp.push_back(st.behavior_lp);
      in.dones.push_back(st.done);
    }
    const std::size_t last = buffer[end - 1].idx;
    if (!tr->steps[last].done) {
      const Tensor& next_feats = last + 1 < tr->steps.size()
                                     ? tr->steps[last + 1].feats
                                     : tr->bootstrap_feats;
      in.bootstrap_value = teacher::teacher_value(p.value, next_feats);
    }
    auto batch = vtrace_targets(in);
    for (std::size_t i = begin; i < end; ++i) {
      targets[i] = batch.v[i - begin];
      adv[i] = batch.adv[i - begin];
      const MixedStep& st = tr->steps[buffer[i].idx];
      weights[i] =
          st.student ? std::exp(lp[i] - st.behavior_lp) : 1.0;
    }
    begin = end;
  }

  // value head: descend the mean squared error against fixed targets
  {
    Tape vt(&p.value);
    std::vector<const Tensor*> feats(N);
    for (std::size_t i = 0; i < N; ++i)
      feats[i] = &buffer[i].tr->steps[buffer[i].idx].feats;
    auto loss = value_loss_node(vt, feats, targets);
    const double lv = vt.scalar(loss);
    if (!std::isfinite(lv)) {
      ++stats.skipped;
      std::fprintf(stderr, "[refine] non-finite value loss, step skipped\n");
    } else {
      vt.backward(loss);
      adam_step(p.value, vt.param_grads(), adam_value, pc.lr_value);
      stats.last_value_loss = lv;
    }
  }

  // coordinator: ascend the weighted advantage surrogate
  {
    Tape::Var obj = -1;
    for (std::size_t i = 0; i < N; ++i) {
      auto term = tape.scale(lp_nodes[i], weights[i] * adv[i]);
      obj = obj < 0 ? term : tape.add(obj, term);
    }
    obj = tape.scale(obj, 1.0 / double(N));
    const double jv = tape.scalar(obj);
    if (!std::isfinite(jv)) {
      ++stats.skipped;
      std::fprintf(stderr, "[refine] non-finite objective, step skipped\n");
    } else {
      tape.backward(tape.scale(obj, -1.0));  // ascent via negated gradient
      adam_step(p.high, tape.param_grads(), adam_policy, pc.lr_policy);
      stats.last_objective = jv;
      ++stats.updates;
    }
  }
  buffer.clear();
}

}  // namespace

PseudoStats pseudo_update(teacher::TeacherParams& p, const env::EnvConfig& cfg,
                          const ParamSet& phi,
                          const student::StudentConfig& sc,
                          const PseudoConfig& pc, AdamState& adam_value,
                          AdamState& adam_policy) {
  if (pc.n < 1)
    throw std::invalid_argument("pseudo_update: n must be >= 1");
  if (pc.n_pseudo < 1)
    throw std::invalid_argument("pseudo_update: n_pseudo must be >= 1");
  const int workers = std::max(1, pc.workers);

  PseudoStats stats;
  std::vector<BufferStep> buffer;
  buffer.reserve(pc.n);
  std::vector<MixedTrajectory> keep;  // buffered steps point into these
  keep.reserve(pc.n_pseudo);

  for (int base = 0; base < pc.n_pseudo; base += workers) {
    const int chunk = std::min(workers, pc.n_pseudo - base);
    std::vector<MixedTrajectory> rolled(chunk);
    if (workers == 1) {
      rolled[0] = rollout_mixed(cfg, phi, sc, p, pc.k,
                                pc.seed * 10007 + std::uint64_t(base));
    } else {
#pragma omp parallel for schedule(dynamic) num_threads(workers)
      for (int w = 0; w < chunk; ++w)
        rolled[w] = rollout_mixed(cfg, phi, sc, p, pc.k,
                                  pc.seed * 10007 + std::uint64_t(base + w));
    }
    for (auto& tr : rolled) {
      stats.episodes += 1;
      stats.steps += int(tr.steps.size());
      keep.push_back(std::move(tr));
      const MixedTrajectory* ptr = &keep.back();
      for (std::size_t i = 0; i < ptr->steps.size(); ++i) {
        buffer.push_back({ptr, i});
        if (int(buffer.size()) == pc.n)
          flush(buffer, p, pc, adam_value, adam_policy, stats);
      }
    }
  }
  return stats;
}

}  // namespace hint::pseudorl
