#include "hint/teacher.hpp"

#include <omp.h>

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace hint::teacher {

namespace {

constexpr int kEncodeDim = 32;
constexpr int kLowHidden = 64;

int manhattan(env::Cell a, env::Cell b) {
  return std::abs(a.x - b.x) + std::abs(a.y - b.y);
}

double stable_softplus(double x) {
  return std::log1p(std::exp(-std::fabs(x))) + std::max(x, 0.0);
}

// y = W x + b for a ParamSet linear block.
std::vector<double> linear(const ParamSet& p, const std::string& prefix,
                           const std::vector<double>& x) {
  const Tensor& w = p.get(prefix + ".w");
  const Tensor& b = p.get(prefix + ".b");
  if (w.cols() != x.size())
    throw std::invalid_argument("linear " + prefix + ": input width " +
                                std::to_string(x.size()) + " != " +
                                std::to_string(w.cols()));
  std::vector<double> y(w.rows());
  for (std::size_t r = 0; r < w.rows(); ++r) {
    double acc = b[r];
    const double* row = w.data.data() + r * w.cols();
    for (std::size_t c = 0; c < x.size(); ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
  return y;
}

void tanh_inplace(std::vector<double>& v) {
  for (double& x : v) x = std::tanh(x);
}

std::string class_prefix(int agent_class) {
  return "c" + std::to_string(agent_class);
}

// Executor trunk shared by the action head and the critic head.
std::vector<double> low_body(const ParamSet& low, int agent_class,
                             const std::vector<double>& input) {
  auto h = linear(low, class_prefix(agent_class) + ".l1", input);
  tanh_inplace(h);
  h = linear(low, class_prefix(agent_class) + ".l2", h);
  tanh_inplace(h);
  return h;
}

// One (class, row-index) pair per global_observe row.
std::vector<int> row_classes(const env::WorldState& s) {
  std::vector<int> out;
  for (int i = 0; i < s.n_agents(); ++i) {
    const int nt = env::num_targets(s.config, s.agent_class(i));
    for (int t = 0; t < nt; ++t) out.push_back(s.agent_class(i));
  }
  return out;
}

// Per-row coordinator logits as tape nodes, batched by agent class.
std::vector<Tape::Var> high_forward(Tape& t, const env::WorldState& s,
                                    const Tensor& feats) {
  const auto classes = row_classes(s);
  if (feats.rows() != classes.size())
    throw std::invalid_argument("high_forward: feature row count mismatch");
  std::vector<Tape::Var> row_logit(classes.size(), -1);
  for (int cls = 0; cls < 2; ++cls) {
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < classes.size(); ++r)
      if (classes[r] == cls) rows.push_back(r);
    if (rows.empty()) continue;
    Tensor x = Tensor::zeros({rows.size(), env::kFeatureDim});
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t c = 0; c < env::kFeatureDim; ++c)
        x.at(i, c) = feats.at(rows[i], c);
    const std::string enc = "enc" + std::to_string(cls);
    auto h = t.tanh_(t.add(t.matmul(t.constant(x),
                                    t.transpose(t.param(enc + ".w"))),
                           t.param(enc + ".b")));
    h = t.tanh_(t.add(t.matmul(h, t.transpose(t.param("sc1.w"))),
                      t.param("sc1.b")));
    auto logits = t.add(t.matmul(h, t.transpose(t.param("sc2.w"))),
                        t.param("sc2.b"));  // [n,1]
    for (std::size_t i = 0; i < rows.size(); ++i)
      row_logit[rows[i]] = t.pick(logits, i);
  }
  return row_logit;
}

std::vector<double> high_logit_values(const ParamSet& high,
                                      const env::WorldState& s,
                                      const Tensor& feats) {
  Tape t(&high);
  auto nodes = high_forward(t, s, feats);
  std::vector<double> out(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) out[i] = t.scalar(nodes[i]);
  return out;
}

void accumulate(std::map<std::string, Tensor>& into,
                const std::map<std::string, Tensor>& g) {
  for (const auto& [name, grad] : g) {
    auto it = into.find(name);
    if (it == into.end()) {
      into[name] = grad;
    } else {
      for (std::size_t i = 0; i < grad.size(); ++i)
        it->second.data[i] += grad.data[i];
    }
  }
}

void scale_grads(std::map<std::string, Tensor>& g, double s) {
  for (auto& [name, grad] : g)
    for (double& v : grad.data) v *= s;
}

int step_toward(env::Cell from, env::Cell to) {
  using namespace env;
  if (to.x > from.x) return Right;
  if (to.x < from.x) return Left;
  if (to.y > from.y) return Down;
  if (to.y < from.y) return Up;
  return Stay;
}

}  // namespace

TeacherParams init_teacher(const env::EnvConfig& cfg, Rng& rng) {
  TeacherParams p;
  add_linear(p.high, "enc0", env::kFeatureDim, kEncodeDim, rng);
  add_linear(p.high, "enc1", env::kFeatureDim, kEncodeDim, rng);
  add_linear(p.high, "sc1", kEncodeDim, kEncodeDim, rng);
  add_linear(p.high, "sc2", kEncodeDim, 1, rng);

  add_linear(p.value, "row", env::kFeatureDim, kEncodeDim, rng);
  add_linear(p.value, "h1", kEncodeDim, kEncodeDim, rng);
  add_linear(p.value, "h2", kEncodeDim, 1, rng);

  for (int cls = 0; cls < 2; ++cls) {
    const std::string c = class_prefix(cls);
    add_linear(p.low, c + ".l1", low_level_input_dim(cfg, cls), kLowHidden,
               rng);
    add_linear(p.low, c + ".l2", kLowHidden, kLowHidden, rng);
    add_linear(p.low, c + ".pi", kLowHidden, env::n_actions(cfg, cls), rng);
    add_linear(p.low, c + ".v", kLowHidden, 1, rng);
  }
  return p;
}

std::vector<double> high_level_probs(const ParamSet& high,
                                     const env::WorldState& s,
                                     const Tensor& feats) {
  auto logits = high_logit_values(high, s, feats);
  for (double& z : logits) z = 1.0 / (1.0 + std::exp(-z));
  return logits;
}

HighSample sample_subgoals(const ParamSet& high, const env::WorldState& s,
                           const Tensor& feats, Rng& rng) {
  HighSample out;
  out.probs = high_level_probs(high, s, feats);
  out.bits.resize(out.probs.size());
  for (std::size_t i = 0; i < out.probs.size(); ++i)
    out.bits[i] = rng.bernoulli(out.probs[i]);

  // An agent with nothing assigned is pointed at its nearest target.
  for (int i = 0; i < s.n_agents(); ++i) {
    const int off = env::feature_row_offset(s, i);
    const int nt = env::num_targets(s.config, s.agent_class(i));
    bool any = false;
    for (int t = 0; t < nt; ++t) any = any || out.bits[off + t];
    if (any) continue;
    const auto cells = env::target_cells(s, i);
    int best = 0, best_d = 1 << 30;
    for (int t = 0; t < nt; ++t) {
      const int d = manhattan(s.pos[i], cells[t]);
      if (d < best_d) {
        best_d = d;
        best = t;
      }
    }
    out.bits[off + best] = 1;
  }

  const auto logits = high_logit_values(high, s, feats);
  for (std::size_t i = 0; i < out.bits.size(); ++i)
    out.log_prob -= stable_softplus(out.bits[i] ? -logits[i] : logits[i]);
  return out;
}

Tape::Var subgoal_log_prob_node(Tape& t, const env::WorldState& s,
                                const Tensor& feats,
                                const std::vector<std::uint8_t>& bits) {
  auto nodes = high_forward(t, s, feats);
  if (bits.size() != nodes.size())
    throw std::invalid_argument("subgoal_log_prob_node: bit count mismatch");
  Tape::Var acc = t.bernoulli_log_prob(nodes[0], bits[0]);
  for (std::size_t i = 1; i < nodes.size(); ++i)
    acc = t.add(acc, t.bernoulli_log_prob(nodes[i], bits[i]));
  return acc;
}

Tape::Var subgoal_entropy_node(Tape& t, const env::WorldState& s,
                               const Tensor& feats) {
  auto nodes = high_forward(t, s, feats);
  Tape::Var acc = -1;
  for (auto z : nodes) {
    // H(Bernoulli(sigmoid(z))) = p softplus(-z) + (1-p) softplus(z)
    auto p = t.sigmoid(z);
    auto one_minus_p = t.add_scalar(t.scale(p, -1.0), 1.0);
    auto h = t.add(t.mul(p, t.softplus(t.scale(z, -1.0))),
                   t.mul(one_minus_p, t.softplus(z)));
    acc = acc < 0 ? h : t.add(acc, h);
  }
  return acc;
}

std::vector<double> goal_features(const env::WorldState& s, int agent,
                                  const std::vector<std::uint8_t>& bits) {
  const int off = env::feature_row_offset(s, agent);
  const int nt = env::num_targets(s.config, s.agent_class(agent));
  const auto cells = env::target_cells(s, agent);
  int best = -1, best_d = 1 << 30, assigned = 0;
  for (int t = 0; t < nt; ++t) {
    if (!bits[off + t]) continue;
    ++assigned;
    const int d = manhattan(s.pos[agent], cells[t]);
    if (d < best_d) {
      best_d = d;
      best = t;
    }
  }
  if (best < 0) return {0.0, 0.0, 0.0, 0.0};
  const double maxd = s.config.width + s.config.height - 2;
  return {double(cells[best].x - s.pos[agent].x) / s.config.width,
          double(cells[best].y - s.pos[agent].y) / s.config.height,
          best_d / maxd, double(assigned) / nt};
}

int low_level_input_dim(const env::EnvConfig& cfg, int agent_class) {
  return env::obs_dim(cfg, agent_class) + kGoalFeatureDim;
}

std::vector<double> low_level_logits(const ParamSet& low,
                                     const env::EnvConfig& cfg,
                                     int agent_class,
                                     const std::vector<double>& input) {
  if (int(input.size()) != low_level_input_dim(cfg, agent_class))
    throw std::invalid_argument(
        "low_level_logits: input width does not match agent class");
  return linear(low, class_prefix(agent_class) + ".pi",
                low_body(low, agent_class, input));
}

std::vector<double> low_level_policy(const ParamSet& low,
                                     const env::EnvConfig& cfg,
                                     int agent_class,
                                     const std::vector<double>& input) {
  return softmax_probs(low_level_logits(low, cfg, agent_class, input));
}

ActResult teacher_act(const env::WorldState& s, const env::JointObs& obs,
                      const TeacherParams& p, int k, Subgoals& g, Rng& rng,
                      bool greedy) {
  if (k < 1) throw std::invalid_argument("teacher_act: k must be >= 1");
  ActResult out;
  if (g.bits.empty() || g.age % k == 0) {
    const Tensor feats = env::global_observe(s);
    auto hs = sample_subgoals(p.high, s, feats, rng);
    g.bits = std::move(hs.bits);
    g.age = 0;
    out.high_log_prob = hs.log_prob;
    out.refreshed = true;
  }
  out.log_prob = out.high_log_prob;
  out.actions.resize(s.n_agents());
  for (int i = 0; i < s.n_agents(); ++i) {
    std::vector<double> input = obs[i].features;
    const auto gf = goal_features(s, i, g.bits);
    input.insert(input.end(), gf.begin(), gf.end());
    const auto logits = low_level_logits(p.low, s.config, s.agent_class(i),
                                         input);
    const auto probs = softmax_probs(logits);
    const std::size_t a =
        greedy ? argmax(probs) : sample_categorical(probs, rng);
    out.actions[i] = int(a);
    out.log_prob += log_softmax_at(logits, a);
  }
  ++g.age;
  return out;
}

Tape::Var teacher_value_node(Tape& t, const Tensor& feats) {
  auto h = t.tanh_(t.add(t.matmul(t.constant(feats),
                                  t.transpose(t.param("row.w"))),
                         t.param("row.b")));
  auto pooled = t.mean_rows(h);
  auto out = t.affine("h2", t.tanh_(t.affine("h1", pooled)));
  return t.pick(out, 0);
}

double teacher_value(const ParamSet& value, const Tensor& feats) {
  Tape t(&value);
  return t.scalar(teacher_value_node(t, feats));
}

}  // namespace hint::teacher

namespace hint {

// --- scripted baseline ----------------------------------------------------

using teacher::manhattan;
using teacher::step_toward;

std::vector<int> GreedyPolicy::act(const env::WorldState& s,
                                   const env::JointObs&, Rng&) {
  std::vector<int> a(s.n_agents(), env::Stay);
  for (int i = 0; i < s.n_agents(); ++i) {
    const auto cells = env::target_cells(s, i);
    if (s.config.domain == env::Domain::Marine) {
      env::Cell goal = s.pos[i];
      if (s.agent_class(i) == 0) {
        int best_d = 1 << 30;
        for (const auto& d : s.destinations)
          if (manhattan(s.pos[i], d) < best_d) {
            best_d = manhattan(s.pos[i], d);
            goal = d;
          }
      } else {
        // chase the neediest routing agent (lowest fuel, not yet arrived)
        double best_fuel = 1e18;
        for (int r = 0; r < s.config.n_type1; ++r) {
          bool at_dest = false;
          for (const auto& d : s.destinations) at_dest |= s.pos[r] == d;
          if (!at_dest && s.fuel[r] < best_fuel) {
            best_fuel = s.fuel[r];
            goal = s.pos[r];
          }
        }
      }
      a[i] = step_toward(s.pos[i], goal);
    } else {
      if (s.agent_class(i) == 1) {
        // nearest discovered burning cell; extinguish when on it
        env::Cell goal{-1, -1};
        int best_d = 1 << 30;
        for (int y = 0; y < s.config.height; ++y)
          for (int x = 0; x < s.config.width; ++x) {
            const int idx = s.cell_index({x, y});
            if (!s.discovered[idx] ||
                s.fire[idx] != env::FireState::Burning)
              continue;
            const int d = manhattan(s.pos[i], {x, y});
            if (d < best_d) {
              best_d = d;
              goal = {x, y};
            }
          }
        if (goal.x < 0) {
          a[i] = step_toward(s.pos[i], cells[i % cells.size()]);
        } else if (best_d == 0) {
          a[i] = env::Extinguish;
        } else {
          a[i] = step_toward(s.pos[i], goal);
        }
      } else {
        // sweep this agent's share of the subareas by interest point
        a[i] = step_toward(s.pos[i], cells[i % cells.size()]);
      }
    }
  }
  return a;
}

double success_rate(JointPolicy& policy, const env::EnvConfig& cfg,
                    int episodes, std::uint64_t seed) {
  int wins = 0;
  Rng rng(seed);
  for (int e = 0; e < episodes; ++e) {
    env::EnvConfig c = cfg;
    c.seed = seed * 10007 + e;
    auto [s, obs] = env::reset(c);
    policy.begin_episode(s);
    Rng act_rng = rng.fork(e);
    while (!s.terminated) {
      auto r = env::step(s, policy.act(s, obs, act_rng));
      obs = std::move(r.obs);
    }
    wins += s.succeeded;
  }
  return double(wins) / episodes;
}

}  // namespace hint

namespace hint::teacher {

// --- stage 1: executor pretraining ---------------------------------------

namespace {

struct LowSample {
  int agent_class;
  std::vector<double> input;
  int action;
  double reward;
  bool terminal = false;  // episode ended after this transition
  double ret = 0.0;
};

struct LowWorker {
  env::WorldState s;
  env::JointObs obs;
  std::vector<std::uint8_t> bits;
  Rng rng;
};

env::EnvConfig low_task_config(const PretrainConfig& cfg,
                               std::uint64_t seed) {
  env::EnvConfig c = env::preset(cfg.preset, seed);
  if (c.domain == env::Domain::Marine) {
    // navigation is learned with fuel decoupled
    c.initial_fuel = 1e6;
    c.marine_refuel = false;
  }
  return c;
}

void low_reset(LowWorker& w, const PretrainConfig& cfg,
               std::uint64_t episode_seed) {
  auto [s, obs] = env::reset(low_task_config(cfg, episode_seed));
  w.s = std::move(s);
  w.obs = std::move(obs);
  // random singleton assignment per agent: the reach task
  int rows = 0;
  for (int i = 0; i < w.s.n_agents(); ++i)
    rows += env::num_targets(w.s.config, w.s.agent_class(i));
  w.bits.assign(rows, 0);
  for (int i = 0; i < w.s.n_agents(); ++i) {
    const int off = env::feature_row_offset(w.s, i);
    const int nt = env::num_targets(w.s.config, w.s.agent_class(i));
    w.bits[off + w.rng.uniform_int(nt)] = 1;
  }
}

}  // namespace

void pretrain_low_level(TeacherParams& p, const PretrainConfig& cfg) {
  const int W = std::max(1, cfg.workers_low);
  const int T = cfg.rollout_len;
  Rng root(cfg.seed ^ 0xa5a5a5a5ull);
  std::vector<LowWorker> workers(W);
  std::uint64_t episode_counter = 0;
  for (int w = 0; w < W; ++w) {
    workers[w].rng = root.fork(w + 1);
    low_reset(workers[w], cfg, cfg.seed * 1000003 + episode_counter++);
  }

  AdamState adam;
  long steps_done = 0;
  const long updates = std::max(1l, cfg.low_timesteps / (long(W) * T));
  for (long u = 0; u < updates; ++u) {
    std::vector<std::vector<LowSample>> batches(W);
    std::vector<std::uint64_t> resets_needed(W, 0);

    // Rollouts are independent; gradients are reduced in worker order below
    // so the result does not depend on the schedule.
    #pragma omp parallel for schedule(static)
    for (int w = 0; w < W; ++w) {
      LowWorker& lw = workers[w];
      auto& batch = batches[w];
      for (int t = 0; t < T; ++t) {
        const int n = lw.s.n_agents();
        std::vector<int> actions(n);
        std::vector<int> dist_before(n);
        std::vector<bool> will_extinguish(n, false);
        std::vector<std::size_t> sample_at(n);
        for (int i = 0; i < n; ++i) {
          std::vector<double> input = lw.obs[i].features;
          const auto gf = goal_features(lw.s, i, lw.bits);
          input.insert(input.end(), gf.begin(), gf.end());
          const auto probs = low_level_policy(p.low, lw.s.config,
                                              lw.s.agent_class(i), input);
          actions[i] = int(sample_categorical(probs, lw.rng));
          const double maxd = lw.s.config.width + lw.s.config.height - 2;
          dist_before[i] = int(gf[2] * maxd + 0.5);
          if (actions[i] == env::Extinguish) {
            const int idx = lw.s.cell_index(lw.s.pos[i]);
            will_extinguish[i] = lw.s.discovered[idx] &&
                                 lw.s.fire[idx] == env::FireState::Burning;
          }
          sample_at[i] = batch.size();
          batch.push_back({lw.s.agent_class(i), std::move(input), actions[i],
                           0.0});
        }
        auto r = env::step(lw.s, actions);
        lw.obs = std::move(r.obs);
        for (int i = 0; i < n; ++i) {
          const auto gf = goal_features(lw.s, i, lw.bits);
          const double maxd = lw.s.config.width + lw.s.config.height - 2;
          const int dist_after = int(gf[2] * maxd + 0.5);
          double reward = 0.1 * (dist_before[i] - dist_after) - 0.01;
          if (dist_after == 0) reward += 0.05;
          if (will_extinguish[i]) reward += 0.5;
          batch[sample_at[i]].reward = reward;
        }
        if (lw.s.terminated) {
          for (int i = 0; i < n; ++i) batch[sample_at[i]].terminal = true;
          std::uint64_t eseed;
          #pragma omp critical
          eseed = cfg.seed * 1000003 + episode_counter++;
          low_reset(lw, cfg, eseed);
        }
      }
      // bootstrapped n-step returns, walking the batch backwards per agent
      const int n = lw.s.n_agents();
      std::vector<double> boot(n, 0.0);
      for (int i = 0; i < n; ++i) {
        std::vector<double> input = lw.obs[i].features;
        const auto gf = goal_features(lw.s, i, lw.bits);
        input.insert(input.end(), gf.begin(), gf.end());
        boot[i] = linear(p.low, class_prefix(lw.s.agent_class(i)) + ".v",
                         low_body(p.low, lw.s.agent_class(i), input))[0];
      }
      for (int idx = int(batch.size()) - 1; idx >= 0; --idx) {
        const int agent = idx % n;
        if (batch[idx].terminal) boot[agent] = 0.0;
        batch[idx].ret = batch[idx].reward + cfg.gamma * boot[agent];
        boot[agent] = batch[idx].ret;
      }
    }

    // per-worker gradients, then an order-fixed reduction
    std::vector<std::map<std::string, Tensor>> grads(W);
    std::size_t n_samples = 0;
    #pragma omp parallel for schedule(static)
    for (int w = 0; w < W; ++w) {
      for (const auto& smp : batches[w]) {
        Tape t(&p.low);
        const std::string c = class_prefix(smp.agent_class);
        auto x = t.constant(Tensor::vector(smp.input));
        auto h = t.tanh_(t.affine(c + ".l2", t.tanh_(t.affine(c + ".l1", x))));
        auto logits = t.affine(c + ".pi", h);
        auto v = t.pick(t.affine(c + ".v", h), 0);
        const double adv = smp.ret - t.scalar(v);
        auto loss = t.add(
            t.scale(t.log_prob(logits, smp.action), -adv),
            t.scale(t.square(t.sub(t.constant_scalar(smp.ret), v)), 0.5));
        loss = t.add(loss, t.scale(t.entropy(logits), -cfg.entropy_coef));
        t.backward(loss);
        accumulate(grads[w], t.param_grads());
      }
    }
    std::map<std::string, Tensor> total;
    for (int w = 0; w < W; ++w) {
      accumulate(total, grads[w]);
      n_samples += batches[w].size();
    }
    scale_grads(total, 1.0 / double(n_samples));
    adam_step(p.low, total, adam, cfg.lr);
    steps_done += long(W) * T;
    if (cfg.verbose && u % 50 == 0)
      std::fprintf(stderr, "[low-pretrain] update %ld steps %ld\n", u,
                   steps_done);
  }
}

// --- stage 2: coordinator pretraining ------------------------------------

namespace {

struct Decision {
  Tensor feats;
  env::WorldState state_copy;  // for rebuilding the row layout
  std::vector<std::uint8_t> bits;
  double reward = 0.0;  // discounted within the k-step interval
  double ret = 0.0;
  bool terminal = false;
};

struct HighWorker {
  env::WorldState s;
  env::JointObs obs;
  Subgoals goals;
  Rng rng;
};

}  // namespace

void pretrain_high_level(TeacherParams& p, const PretrainConfig& cfg) {
  const int W = std::max(1, cfg.workers_high);
  Rng root(cfg.seed ^ 0x5a5a5a5aull);
  std::vector<HighWorker> workers(W);
  std::uint64_t episode_counter = 0;
  auto reset_worker = [&](HighWorker& w, std::uint64_t eseed) {
    auto [s, obs] = env::reset(env::preset(cfg.preset, eseed));
    w.s = std::move(s);
    w.obs = std::move(obs);
    w.goals = {};
  };
  for (int w = 0; w < W; ++w) {
    workers[w].rng = root.fork(w + 101);
    reset_worker(workers[w], cfg.seed * 999983 + episode_counter++);
  }

  AdamState adam_pi, adam_v;
  const int decisions_per_rollout = std::max(2, cfg.rollout_len / cfg.k);
  long steps_done = 0;
  while (steps_done < cfg.high_timesteps) {
    std::vector<std::vector<Decision>> batches(W);
    std::vector<double> boot(W, 0.0);

    #pragma omp parallel for schedule(static)
    for (int w = 0; w < W; ++w) {
      HighWorker& hw = workers[w];
      auto& ds = batches[w];
      for (int d = 0; d < decisions_per_rollout; ++d) {
        Decision dec;
        dec.state_copy = hw.s;
        dec.feats = env::global_observe(hw.s);
        auto hs = sample_subgoals(p.high, hw.s, dec.feats, hw.rng);
        hw.goals.bits = hs.bits;
        hw.goals.age = 0;
        dec.bits = hs.bits;
        double disc = 1.0;
        bool ended = false;
        for (int j = 0; j < cfg.k && !ended; ++j) {
          ActResult ar;
          ar.actions.resize(hw.s.n_agents());
          for (int i = 0; i < hw.s.n_agents(); ++i) {
            std::vector<double> input = hw.obs[i].features;
            const auto gf = goal_features(hw.s, i, hw.goals.bits);
            input.insert(input.end(), gf.begin(), gf.end());
            const auto probs = low_level_policy(p.low, hw.s.config,
                                                hw.s.agent_class(i), input);
            ar.actions[i] = int(sample_categorical(probs, hw.rng));
          }
          auto r = env::step(hw.s, ar.actions);
          hw.obs = std::move(r.obs);
          double team = 0.0;
          for (double rv : r.rewards) team += rv;
          dec.reward += disc * team;
          disc *= cfg.gamma;
          ended = hw.s.terminated;
        }
        dec.terminal = ended;
        ds.push_back(std::move(dec));
        if (ended) {
          std::uint64_t eseed;
          #pragma omp critical
          eseed = cfg.seed * 999983 + episode_counter++;
          reset_worker(hw, eseed);
        }
      }
      boot[w] = workers[w].s.terminated
                    ? 0.0
                    : teacher_value(p.value, env::global_observe(hw.s));
      const double gamma_k = std::pow(cfg.gamma, cfg.k);
      double ret = boot[w];
      for (int i = int(ds.size()) - 1; i >= 0; --i) {
        if (ds[i].terminal) ret = 0.0;
        ret = ds[i].reward + gamma_k * ret;
        ds[i].ret = ret;
      }
    }

    std::vector<std::map<std::string, Tensor>> gpi(W), gv(W);
    std::size_t n_dec = 0;
    #pragma omp parallel for schedule(static)
    for (int w = 0; w < W; ++w) {
      for (const auto& dec : batches[w]) {
        const double v = teacher_value(p.value, dec.feats);
        const double adv = dec.ret - v;
        {
          Tape t(&p.high);
          auto lp = subgoal_log_prob_node(t, dec.state_copy, dec.feats,
                                          dec.bits);
          auto ent = subgoal_entropy_node(t, dec.state_copy, dec.feats);
          auto loss = t.add(t.scale(lp, -adv),
                            t.scale(ent, -cfg.entropy_coef));
          t.backward(loss);
          accumulate(gpi[w], t.param_grads());
        }
        {
          Tape t(&p.value);
          auto vn = teacher_value_node(t, dec.feats);
          auto loss = t.scale(
              t.square(t.sub(t.constant_scalar(dec.ret), vn)), 0.5);
          t.backward(loss);
          accumulate(gv[w], t.param_grads());
        }
      }
    }
    std::map<std::string, Tensor> tpi, tv;
    for (int w = 0; w < W; ++w) {
      accumulate(tpi, gpi[w]);
      accumulate(tv, gv[w]);
      n_dec += batches[w].size();
    }
    scale_grads(tpi, 1.0 / double(n_dec));
    scale_grads(tv, 1.0 / double(n_dec));
    adam_step(p.high, tpi, adam_pi, cfg.lr);
    adam_step(p.value, tv, adam_v, cfg.lr);
    steps_done += long(W) * decisions_per_rollout * cfg.k;
    if (cfg.verbose)
      std::fprintf(stderr, "[high-pretrain] steps %ld\n", steps_done);
  }
}

}  // namespace hint::teacher
