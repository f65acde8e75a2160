// Fast acceptance gate: correctness criteria that run in minutes.
// One pass/fail line per criterion; nonzero exit if any fail.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include "hint/dagger.hpp"
#include "hint/distill.hpp"
#include "hint/metrics.hpp"
#include "hint/vtrace.hpp"

using namespace hint;

namespace {

int failures = 0;

void report(int criterion, const char* what, bool ok) {
  std::printf("[criterion %d] %s: %s\n", criterion, what,
              ok ? "PASS" : "FAIL");
  if (!ok) ++failures;
}

// --- shared v-trace helpers -------------------------------------------------

pseudorl::VTraceInput random_input(Rng& rng, std::size_t T, bool end_done) {
  pseudorl::VTraceInput in;
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

// Term-by-term evaluation of the summation form of the corrected target.
std::vector<double> oracle_v(const pseudorl::VTraceInput& in) {
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
    delta[t] =
        rho[t] * (in.rewards[t] + in.gamma * next_value(t) - in.values[t]);
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

// --- criterion 1: on-policy reduction --------------------------------------

bool criterion1() {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    auto in = random_input(rng, 1 + rng.uniform_int(20), trial % 2 == 0);
    in.target_lp = in.behavior_lp;  // the acting policy is the target policy
    auto b = pseudorl::vtrace_targets(in);
    const std::size_t T = in.rewards.size();
    for (std::size_t t = 0; t < T; ++t) {
      double ret = 0.0, coef = 1.0;
      bool cut = false;
      for (std::size_t j = t; j < T && !cut; ++j) {
        ret += coef * in.rewards[j];
        coef *= in.gamma;
        cut = in.dones[j];
      }
      if (!cut) ret += coef * in.bootstrap_value;
      if (std::fabs(b.v[t] - ret) >= 1e-12) return false;
    }
  }
  return true;
}

// --- criterion 2: summation oracle on a tabular MDP ------------------------

bool criterion2() {
  Rng rng(2);
  for (int pair = 0; pair < 1000; ++pair) {
    // an exact 3-state 2-action model with fresh behavior/target tables
    double P[3][2][3], R[3][2], mu[3][2], pi[3][2], V[3];
    for (int s = 0; s < 3; ++s) {
      for (int a = 0; a < 2; ++a) {
        double z = 0.0;
        for (int n = 0; n < 3; ++n) z += P[s][a][n] = rng.uniform(0.05, 1.0);
        for (int n = 0; n < 3; ++n) P[s][a][n] /= z;
        R[s][a] = rng.uniform(-1.0, 1.0);
        mu[s][a] = rng.uniform(0.1, 0.9);
        pi[s][a] = rng.uniform(0.1, 0.9);
      }
      const double zm = mu[s][0] + mu[s][1], zp = pi[s][0] + pi[s][1];
      for (int a = 0; a < 2; ++a) {
        mu[s][a] /= zm;
        pi[s][a] /= zp;
      }
      V[s] = rng.uniform(-2.0, 2.0);
    }
    // roll a behavior trajectory through the exact model
    pseudorl::VTraceInput in;
    in.gamma = 0.9;
    int s = int(rng.uniform_int(3));
    const std::size_t T = 1 + rng.uniform_int(8);
    for (std::size_t t = 0; t < T; ++t) {
      const int a = rng.uniform(0.0, 1.0) < mu[s][0] ? 0 : 1;
      in.values.push_back(V[s]);
      in.rewards.push_back(R[s][a]);
      in.behavior_lp.push_back(std::log(mu[s][a]));
      in.target_lp.push_back(std::log(pi[s][a]));
      in.dones.push_back(false);
      const double u = rng.uniform(0.0, 1.0);
      s = u < P[s][a][0] ? 0 : (u < P[s][a][0] + P[s][a][1] ? 1 : 2);
    }
    in.bootstrap_value = V[s];
    auto b = pseudorl::vtrace_targets(in);
    auto v = oracle_v(in);
    for (std::size_t t = 0; t < T; ++t)
      if (std::fabs(b.v[t] - v[t]) >= 1e-10) return false;
  }
  return true;
}

// --- criterion 3: analytic gradients vs finite differences -----------------

// Central-difference comparison with a mixed tolerance: components whose
// absolute difference is below 1e-9 are treated as matching outright, since
// the finite difference itself carries ~1e-11 of floating-point roundoff at
// h=1e-5 and a relative quotient on a near-zero gradient measures only that
// noise. Everything else must meet the relative bound.
double fd_check(const std::function<Tape::Var(Tape&)>& build,
                ParamSet& params, double h) {
  Tape tape(&params);
  Tape::Var out = build(tape);
  tape.backward(out);
  auto grads = tape.param_grads();
  double max_rel = 0.0;
  for (const std::string& name : params.names()) {
    Tensor& p = params.get(name);
    const Tensor g =
        grads.count(name) ? grads.at(name) : Tensor::zeros(p.shape);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double orig = p.data[i];
      p.data[i] = orig + h;
      Tape tp(&params);
      const double fp = tp.scalar(build(tp));
      p.data[i] = orig - h;
      Tape tm(&params);
      const double fm = tm.scalar(build(tm));
      p.data[i] = orig;
      const double fd = (fp - fm) / (2.0 * h);
      const double diff = std::fabs(g.data[i] - fd);
      if (diff < 1e-9) continue;  // below finite-difference noise
      const double denom = std::max({std::fabs(g.data[i]), std::fabs(fd), 1e-8});
      max_rel = std::max(max_rel, diff / denom);
    }
  }
  return max_rel;
}

std::vector<distill::Trajectory> scripted_demos(const env::EnvConfig& cfg,
                                                int n_traj, std::uint64_t seed,
                                                int max_len) {
  std::vector<distill::Trajectory> out;
  GreedyPolicy demo;
  Rng rng(seed);
  for (int e = 0; e < n_traj; ++e) {
    env::EnvConfig c = cfg;
    c.seed = seed * 131 + e;
    auto [s, obs] = env::reset(c);
    demo.begin_episode(s);
    distill::Trajectory tr;
    for (int t = 0; t < max_len && !s.terminated; ++t) {
      distill::TrajStep st;
      st.obs = obs;
      st.teacher_actions = demo.act(s, obs, rng);
      st.teacher_log_prob = -0.05 * double(s.n_agents());
      st.accepted = true;
      obs = env::step(s, st.teacher_actions).obs;
      tr.steps.push_back(std::move(st));
    }
    out.push_back(std::move(tr));
  }
  return out;
}

bool criterion3() {
  int distill_ok = 0, value_ok = 0, policy_ok = 0;
  for (std::uint64_t inst = 0; inst < 20; ++inst) {
    auto cfg = env::preset(inst % 2 ? "marine-easy" : "fc-easy", inst);
    Rng rng(1000 + inst);

    // distillation loss over a short recorded slice
    {
      student::StudentConfig sc;
      sc.hidden = 4;
      sc.message = 2;
      auto phi = student::init_student(cfg, sc, rng);
      auto ds = scripted_demos(cfg, 1, 50 + inst, 3);
      const auto& tr = ds[0];
      const double alpha = 0.01;
      auto build = [&](Tape& t) {
        std::vector<Tape::Var> hidden(tr.steps[0].obs.size());
        for (auto& h : hidden)
          h = t.constant(Tensor::zeros({std::size_t(sc.hidden)}));
        Tape::Var loss = -1;
        for (const auto& step : tr.steps) {
          auto fwd = student::student_forward(t, sc, cfg, step.obs, hidden);
          Tape::Var lp = -1, ent = -1;
          for (std::size_t i = 0; i < step.obs.size(); ++i) {
            auto l = t.log_prob(fwd.logits[i], step.teacher_actions[i]);
            auto e = t.entropy(fwd.logits[i]);
            lp = lp < 0 ? l : t.add(lp, l);
            ent = ent < 0 ? e : t.add(ent, e);
          }
          // (const - lp) - alpha * entropy
          auto term = t.add(t.add_scalar(t.scale(lp, -1.0),
                                         step.teacher_log_prob),
                            t.scale(ent, -alpha));
          loss = loss < 0 ? term : t.add(loss, term);
          hidden = std::move(fwd.hidden);
        }
        return t.scale(loss, 1.0 / double(tr.steps.size()));
      };
      distill_ok += fd_check(build, phi, 1e-5) < 1e-4;
    }

    // value regression loss
    {
      auto p = teacher::init_teacher(cfg, rng);
      auto [s, obs] = env::reset(cfg);
      std::vector<int> stay(s.n_agents(), env::Stay);
      std::vector<Tensor> f;
      std::vector<double> targets;
      for (int t = 0; t < 4; ++t) {
        f.push_back(env::global_observe(s));
        targets.push_back(rng.uniform(-1.0, 1.0));
        env::step(s, stay);
      }
      std::vector<const Tensor*> fp;
      for (const auto& t : f) fp.push_back(&t);
      auto build = [&](Tape& t) {
        return pseudorl::value_loss_node(t, fp, targets);
      };
      value_ok += fd_check(build, p.value, 1e-5) < 1e-4;
    }

    // coordinator surrogate on a recorded mixed rollout
    {
      auto p = teacher::init_teacher(cfg, rng);
      student::StudentConfig sc;
      sc.hidden = 4;
      sc.message = 2;
      auto phi = student::init_student(cfg, sc, rng);
      auto tr = pseudorl::rollout_mixed(cfg, phi, sc, p, 2, 70 + inst);
      if (tr.steps.empty()) continue;
      std::vector<double> adv, w;
      Rng arng(90 + inst);
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
      policy_ok += fd_check(build, p.high, 1e-5) < 1e-4;
    }
  }
  std::printf("    gradient instances passing: distill %d/20, value %d/20, "
              "coordinator %d/20\n",
              distill_ok, value_ok, policy_ok);
  return distill_ok == 20 && value_ok == 20 && policy_ok == 20;
}

// --- criterion 4: filter vs brute-force oracle ------------------------------

class ScriptedDemonstrator : public dagger::Demonstrator {
 public:
  void begin_episode(const env::WorldState& s) override {
    policy_.begin_episode(s);
  }
  Suggestion suggest(const env::WorldState& s, const env::JointObs& obs,
                     Rng& rng) override {
    return {policy_.act(s, obs, rng), 0.0};
  }
  std::unique_ptr<Demonstrator> clone() const override {
    return std::make_unique<ScriptedDemonstrator>(*this);
  }

 private:
  GreedyPolicy policy_;
};

env::EnvConfig toy_config(std::uint64_t seed) {
  env::EnvConfig cfg;
  cfg.domain = env::Domain::Marine;
  cfg.width = 3;
  cfg.height = 3;
  cfg.fov = 3;
  cfg.n_type1 = 1;
  cfg.n_type2 = 1;
  cfg.n_targets = 1;
  cfg.max_steps = 10;
  cfg.initial_fuel = 2.0;  // tight tank: both filter outcomes occur
  cfg.wave_amplitude = 0.0;
  cfg.marine_refuel = false;
  cfg.seed = seed;
  return cfg;
}

// Exact oracle: copy the state directly, apply the suggested action, run the
// scripted pilot to the end. No snapshot machinery involved.
bool oracle_accept(const env::WorldState& s,
                   const std::vector<int>& suggested) {
  env::WorldState sim = s;
  Rng dummy(0);
  env::step(sim, suggested);
  GreedyPolicy pol;
  pol.begin_episode(sim);
  env::JointObs obs = env::observe(sim);
  while (!sim.terminated) obs = env::step(sim, pol.act(sim, obs, dummy)).obs;
  return sim.succeeded;
}

bool criterion4() {
  student::StudentConfig sc;
  sc.hidden = 8;
  sc.message = 4;
  long total = 0, mismatches = 0, rejected = 0, oracle_rejected = 0;
  for (std::uint64_t seed = 0; seed < 80; ++seed) {
    auto cfg = toy_config(seed);
    Rng prng(99);
    auto phi = student::init_student(cfg, sc, prng);
    auto [s, obs] = env::reset(cfg);
    Rng student_rng(seed * 7919 + 13);
    Rng query_rng(seed * 104729 + 17);
    auto h = student::initial_state(cfg, sc);
    ScriptedDemonstrator demo;
    demo.begin_episode(s);
    dagger::FilterConfig fc;
    int qi = 0;
    while (!s.terminated) {
      auto fr = dagger::query_and_filter(s, obs, demo, query_rng, qi++, fc);
      if (fr.discarded) return false;
      const bool oracle = oracle_accept(s, fr.actions);
      mismatches += fr.accepted != oracle;
      ++total;
      rejected += !fr.accepted;
      oracle_rejected += !oracle;
      auto act = student::student_act(phi, sc, cfg, obs, h, student_rng);
      h = std::move(act.next);
      obs = env::step(s, act.actions).obs;
    }
  }
  std::printf("    %ld states checked, %ld mismatches, rate %.6f vs oracle "
              "%.6f\n",
              total, mismatches, dagger::suboptimal_demo_rate(rejected, total),
              double(oracle_rejected) / double(total));
  return total > 100 && mismatches == 0 && rejected > 0 && rejected < total &&
         dagger::suboptimal_demo_rate(rejected, total) ==
             double(oracle_rejected) / double(total);
}

// --- criterion 8: entropy regularization -----------------------------------

double mean_entropy_on(const ParamSet& phi, const student::StudentConfig& sc,
                       const env::EnvConfig& cfg,
                       const std::vector<distill::Trajectory>& ds) {
  double ent = 0.0;
  int n = 0;
  for (const auto& tr : ds) {
    Tape t(&phi);
    std::vector<Tape::Var> hidden(tr.steps[0].obs.size());
    for (auto& h : hidden)
      h = t.constant(Tensor::zeros({std::size_t(sc.hidden)}));
    for (const auto& step : tr.steps) {
      auto fwd = student::student_forward(t, sc, cfg, step.obs, hidden);
      for (auto l : fwd.logits) ent += t.scalar(t.entropy(l));
      ++n;
      hidden = std::move(fwd.hidden);
    }
  }
  return ent / n;
}

bool criterion8() {
  auto cfg = env::preset("marine-easy", 6);
  student::StudentConfig sc;
  sc.hidden = 16;
  sc.message = 8;
  auto train = scripted_demos(cfg, 24, 13, 25);
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    double ents[2];
    for (int k = 0; k < 2; ++k) {
      Rng rng(200 + seed);
      auto phi = student::init_student(cfg, sc, rng);
      AdamState adam;
      distill::DistillConfig dc;
      dc.alpha = k == 0 ? 0.0 : 0.01;
      dc.lr = 1e-3;
      dc.capacity = 40;
      dc.seed = seed;
      distill::behavior_clone(phi, adam, sc, cfg, train, dc, 10);
      ents[k] = mean_entropy_on(phi, sc, cfg, train);
    }
    wins += ents[1] >= ents[0];
  }
  std::printf("    entropy-bonus run at least as stochastic on %d/5 seeds\n",
              wins);
  return wins == 5;
}

// --- criterion 9: diagnostic sanity ----------------------------------------

std::vector<double> jacobi_eigenvalues(std::vector<std::vector<double>> a) {
  const std::size_t n = a.size();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-24) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::fabs(a[p][q]) < 1e-18) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t i = 0; i < n; ++i) {
          const double aip = a[i][p], aiq = a[i][q];
          a[i][p] = c * aip - s * aiq;
          a[i][q] = s * aip + c * aiq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double api = a[p][i], aqi = a[q][i];
          a[p][i] = c * api - s * aqi;
          a[q][i] = s * api + c * aqi;
        }
      }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a[i][i];
  std::sort(ev.rbegin(), ev.rend());
  return ev;
}

bool criterion9() {
  Rng rng(17);
  std::vector<std::vector<double>> pts(5000, std::vector<double>(2));
  for (auto& p : pts)
    for (double& v : p) v = rng.uniform(-2.0, 2.0);
  if (metrics::histogram_kl(pts, pts) >= 1e-9) return false;

  for (int trial = 0; trial < 10; ++trial) {
    std::vector<std::vector<double>> x(20, std::vector<double>(5));
    for (auto& row : x)
      for (double& v : row) v = rng.uniform(-2.0, 2.0);
    auto r = metrics::pca_fit(x, 5);
    if (r.rank != 5) return false;
    // sample covariance for the dense oracle
    std::vector<double> mean(5, 0.0);
    for (const auto& row : x)
      for (int j = 0; j < 5; ++j) mean[j] += row[j] / 20.0;
    std::vector<std::vector<double>> cov(5, std::vector<double>(5, 0.0));
    for (const auto& row : x)
      for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
          cov[i][j] += (row[i] - mean[i]) * (row[j] - mean[j]) / 19.0;
    auto ev = jacobi_eigenvalues(cov);
    for (int i = 0; i < 5; ++i)
      if (std::fabs(r.explained_variance[i] - ev[i]) >= 1e-6) return false;
  }
  return true;
}

}  // namespace

int main() {
  report(1, "corrected targets reduce to n-step returns on-policy",
         criterion1());
  report(2, "corrected targets match the summation oracle on a tabular MDP",
         criterion2());
  report(3, "analytic gradients match central finite differences",
         criterion3());
  report(4, "filter decisions match the exact-simulation oracle",
         criterion4());
  report(8, "entropy bonus keeps the student at least as stochastic",
         criterion8());
  report(9, "self-divergence vanishes and variance spectrum matches a dense "
            "eigensolver",
         criterion9());
  std::printf("[criterion 10] paper-scale hard-task results and training-time "
              "figures: SKIPPED (out of scope at desk scale)\n");
  return failures == 0 ? 0 : 1;
}
