#include "hint/student.hpp"

#include <cmath>
#include <stdexcept>

namespace hint::student {

namespace {

std::string cls(int c) { return "c" + std::to_string(c); }

std::string pair_prefix(const StudentConfig& sc, int dst, int src) {
  if (sc.comm == CommMode::Homogeneous) return "att.shared";
  return "att.d" + std::to_string(dst) + "s" + std::to_string(src);
}

void add_gru(ParamSet& p, const std::string& prefix, int in, int hidden,
             Rng& rng) {
  for (const char* g : {"wz", "wr", "wh"}) {
    Tensor w = Tensor::zeros({std::size_t(hidden), std::size_t(in)});
    init_uniform(w, in, rng);
    p.add(prefix + "." + g, std::move(w));
  }
  for (const char* g : {"uz", "ur", "uh"}) {
    Tensor u = Tensor::zeros({std::size_t(hidden), std::size_t(hidden)});
    init_uniform(u, hidden, rng);
    p.add(prefix + "." + g, std::move(u));
  }
  for (const char* g : {"bz", "br", "bh"}) {
    Tensor b = Tensor::zeros({std::size_t(hidden)});
    init_uniform(b, hidden, rng);
    p.add(prefix + "." + g, std::move(b));
  }
}

}  // namespace

CommMode comm_mode_from_name(const std::string& name) {
  if (name == "none") return CommMode::None;
  if (name == "homogeneous") return CommMode::Homogeneous;
  if (name == "heterogeneous") return CommMode::Heterogeneous;
  throw std::invalid_argument("unknown communication mode: " + name);
}

const char* comm_mode_name(CommMode m) {
  switch (m) {
    case CommMode::None: return "none";
    case CommMode::Homogeneous: return "homogeneous";
    default: return "heterogeneous";
  }
}

ParamSet init_student(const env::EnvConfig& cfg, const StudentConfig& sc,
                      Rng& rng) {
  ParamSet p(ParamSet::Role::Student);
  for (int c = 0; c < 2; ++c) {
    add_linear(p, cls(c) + ".enc", env::obs_dim(cfg, c), sc.hidden, rng);
    add_gru(p, cls(c) + ".gru", sc.hidden, sc.hidden, rng);
    add_linear(p, cls(c) + ".dec1", sc.hidden + sc.message, sc.hidden, rng);
    add_linear(p, cls(c) + ".dec2", sc.hidden, env::n_actions(cfg, c), rng);
  }
  auto add_att = [&](const std::string& prefix) {
    for (const char* m : {"wq", "wk", "wv"}) {
      Tensor w = Tensor::zeros({std::size_t(sc.message),
                                std::size_t(sc.hidden)});
      init_uniform(w, sc.hidden, rng);
      p.add(prefix + "." + m, std::move(w));
    }
  };
  if (sc.comm == CommMode::Homogeneous) {
    add_att("att.shared");
  } else if (sc.comm == CommMode::Heterogeneous) {
    for (int d = 0; d < 2; ++d)
      for (int s = 0; s < 2; ++s)
        add_att("att.d" + std::to_string(d) + "s" + std::to_string(s));
  }
  return p;
}

RecurrentState initial_state(const env::EnvConfig& cfg,
                             const StudentConfig& sc) {
  RecurrentState st;
  st.h.assign(cfg.n_type1 + cfg.n_type2,
              std::vector<double>(sc.hidden, 0.0));
  return st;
}

ForwardOut student_forward(Tape& t, const StudentConfig& sc,
                           const env::EnvConfig& cfg,
                           const env::JointObs& obs,
                           const std::vector<Tape::Var>& hidden_in) {
  const int n = int(obs.size());
  if (int(hidden_in.size()) != n)
    throw std::invalid_argument("student_forward: hidden count mismatch");
  ForwardOut out;
  out.hidden.resize(n);
  out.logits.resize(n);

  for (int i = 0; i < n; ++i) {
    const int c = obs[i].agent_class;
    if (int(obs[i].features.size()) != env::obs_dim(cfg, c))
      throw std::invalid_argument(
          "student_forward: observation width does not match agent class");
    auto e = t.tanh_(t.affine(cls(c) + ".enc",
                              t.constant(Tensor::vector(obs[i].features))));
    out.hidden[i] = t.gru_cell(cls(c) + ".gru", e, hidden_in[i]);
  }

  const double inv_sqrt_d = 1.0 / std::sqrt(double(sc.message));
  for (int i = 0; i < n; ++i) {
    const int ci = obs[i].agent_class;
    Tape::Var msg = -1;
    if (sc.comm != CommMode::None && n > 1) {
      // one attention round: receiver i attends over every other agent
      Tape::Var scores = -1;
      std::vector<Tape::Var> values;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        const std::string pp = pair_prefix(sc, ci, obs[j].agent_class);
        auto q = t.matmul(t.param(pp + ".wq"), out.hidden[i]);
        auto k = t.matmul(t.param(pp + ".wk"), out.hidden[j]);
        auto s = t.scale(t.dot(q, k), inv_sqrt_d);
        scores = scores < 0 ? t.reshape(s, {1}) : t.concat(scores, s);
        values.push_back(t.matmul(t.param(pp + ".wv"), out.hidden[j]));
      }
      auto w = t.reshape(t.softmax(scores), {1, values.size()});
      Tape::Var vmat = values[0];
      for (std::size_t j = 1; j < values.size(); ++j)
        vmat = t.concat(vmat, values[j]);
      vmat = t.reshape(vmat, {values.size(), std::size_t(sc.message)});
      msg = t.reshape(t.matmul(w, vmat), {std::size_t(sc.message)});
    } else {
      msg = t.constant(Tensor::zeros({std::size_t(sc.message)}));
    }
    auto dec_in = t.concat(out.hidden[i], msg);
    out.logits[i] = t.affine(cls(ci) + ".dec2",
                             t.tanh_(t.affine(cls(ci) + ".dec1", dec_in)));
  }
  return out;
}

ActOut student_act(const ParamSet& phi, const StudentConfig& sc,
                   const env::EnvConfig& cfg, const env::JointObs& obs,
                   const RecurrentState& hidden, Rng& rng, bool greedy) {
  Tape t(&phi);
  std::vector<Tape::Var> hin(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i)
    hin[i] = t.constant(Tensor::vector(hidden.h[i]));
  auto fwd = student_forward(t, sc, cfg, obs, hin);

  ActOut out;
  out.actions.resize(obs.size());
  out.log_probs.resize(obs.size());
  out.next.h.resize(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const auto logits = t.value(fwd.logits[i]).data;
    const auto probs = softmax_probs(logits);
    const std::size_t a =
        greedy ? argmax(probs) : sample_categorical(probs, rng);
    out.actions[i] = int(a);
    out.log_probs[i] = log_softmax_at(logits, a);
    out.joint_log_prob += out.log_probs[i];
    out.next.h[i] = t.value(fwd.hidden[i]).data;
  }
  return out;
}

std::vector<Tape::Var> sequence_log_prob_nodes(
    Tape& t, const StudentConfig& sc, const env::EnvConfig& cfg,
    const std::vector<env::JointObs>& obs_seq,
    const std::vector<std::vector<int>>& act_seq) {
  if (obs_seq.size() != act_seq.size())
    throw std::invalid_argument(
        "sequence_log_prob_nodes: observation/action length mismatch");
  if (obs_seq.empty())
    throw std::invalid_argument("sequence_log_prob_nodes: empty sequence");
  const std::size_t n = obs_seq[0].size();
  std::vector<Tape::Var> hidden(n);
  for (std::size_t i = 0; i < n; ++i)
    hidden[i] = t.constant(Tensor::zeros({std::size_t(sc.hidden)}));

  std::vector<Tape::Var> out;
  for (std::size_t step = 0; step < obs_seq.size(); ++step) {
    if (obs_seq[step].size() != n || act_seq[step].size() != n)
      throw std::invalid_argument(
          "sequence_log_prob_nodes: agent count mismatch at step " +
          std::to_string(step));
    auto fwd = student_forward(t, sc, cfg, obs_seq[step], hidden);
    Tape::Var lp = -1;
    for (std::size_t i = 0; i < n; ++i) {
      auto term = t.log_prob(fwd.logits[i], act_seq[step][i]);
      lp = lp < 0 ? term : t.add(lp, term);
    }
    out.push_back(lp);
    hidden = std::move(fwd.hidden);
  }
  return out;
}

std::vector<double> sequence_log_probs(
    const ParamSet& phi, const StudentConfig& sc, const env::EnvConfig& cfg,
    const std::vector<env::JointObs>& obs_seq,
    const std::vector<std::vector<int>>& act_seq) {
  Tape t(&phi);
  auto nodes = sequence_log_prob_nodes(t, sc, cfg, obs_seq, act_seq);
  std::vector<double> out(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) out[i] = t.scalar(nodes[i]);
  return out;
}

Tape::Var step_entropy_node(Tape& t, const StudentConfig& sc,
                            const env::EnvConfig& cfg,
                            const env::JointObs& obs,
                            const std::vector<Tape::Var>& hidden_in) {
  auto fwd = student_forward(t, sc, cfg, obs, hidden_in);
  Tape::Var acc = -1;
  for (auto logits : fwd.logits) {
    auto h = t.entropy(logits);
    acc = acc < 0 ? h : t.add(acc, h);
  }
  return acc;
}

double student_entropy(const ParamSet& phi, const StudentConfig& sc,
                       const env::EnvConfig& cfg, const env::JointObs& obs,
                       const RecurrentState& hidden) {
  Tape t(&phi);
  std::vector<Tape::Var> hin(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i)
    hin[i] = t.constant(Tensor::vector(hidden.h[i]));
  return t.scalar(step_entropy_node(t, sc, cfg, obs, hin));
}

}  // namespace hint::student
