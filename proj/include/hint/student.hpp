#pragma once

#include <string>
#include <vector>

#include "hint/autodiff.hpp"
#include "hint/env.hpp"
#include "hint/paramset.hpp"
#include "hint/policy.hpp"
#include "hint/rng.hpp"

namespace hint::student {

// Communication ablation: no messages, one shared projection for every
// class pair, or per-(receiver class, sender class) projections.
enum class CommMode { None, Homogeneous, Heterogeneous };

struct StudentConfig {
  int hidden = 32;
  int message = 16;
  CommMode comm = CommMode::Heterogeneous;
};

CommMode comm_mode_from_name(const std::string& name);
const char* comm_mode_name(CommMode m);

// Per-class encoder + recurrent cell + attention maps + decoder; weights are
// shared among agents of the same class.
ParamSet init_student(const env::EnvConfig& cfg, const StudentConfig& sc,
                      Rng& rng);

// Plain per-agent hidden vectors, zeroed at episode start.
struct RecurrentState {
  std::vector<std::vector<double>> h;
};
RecurrentState initial_state(const env::EnvConfig& cfg,
                             const StudentConfig& sc);

// One time step of the shared network on a tape: encode, recur, one
// attention round, decode. hidden_in holds one tape var per agent (constant
// for acting, threaded for sequence replay).
struct ForwardOut {
  std::vector<Tape::Var> logits;
  std::vector<Tape::Var> hidden;
};
ForwardOut student_forward(Tape& t, const StudentConfig& sc,
                           const env::EnvConfig& cfg,
                           const env::JointObs& obs,
                           const std::vector<Tape::Var>& hidden_in);

struct ActOut {
  std::vector<int> actions;
  std::vector<double> log_probs;  // per agent
  double joint_log_prob = 0.0;    // sum over agents
  RecurrentState next;
};
ActOut student_act(const ParamSet& phi, const StudentConfig& sc,
                   const env::EnvConfig& cfg, const env::JointObs& obs,
                   const RecurrentState& hidden, Rng& rng,
                   bool greedy = false);

// Per-step joint log-probability nodes for an aligned episode slice, with
// the hidden state threaded from zeros at t=0 (full backpropagation through
// time). The tape must be bound to φ.
std::vector<Tape::Var> sequence_log_prob_nodes(
    Tape& t, const StudentConfig& sc, const env::EnvConfig& cfg,
    const std::vector<env::JointObs>& obs_seq,
    const std::vector<std::vector<int>>& act_seq);

// Plain-value replay of the same computation.
std::vector<double> sequence_log_probs(
    const ParamSet& phi, const StudentConfig& sc, const env::EnvConfig& cfg,
    const std::vector<env::JointObs>& obs_seq,
    const std::vector<std::vector<int>>& act_seq);

// Joint entropy at one step: sum over agents of per-agent categorical
// entropy (the joint policy is the product of the per-agent policies).
Tape::Var step_entropy_node(Tape& t, const StudentConfig& sc,
                            const env::EnvConfig& cfg,
                            const env::JointObs& obs,
                            const std::vector<Tape::Var>& hidden_in);
double student_entropy(const ParamSet& phi, const StudentConfig& sc,
                       const env::EnvConfig& cfg, const env::JointObs& obs,
                       const RecurrentState& hidden);

// JointPolicy adapter owning the recurrent state.
struct StudentPolicy : JointPolicy {
  const ParamSet* phi;
  StudentConfig sc;
  env::EnvConfig cfg;
  RecurrentState hidden;
  bool greedy = false;

  StudentPolicy(const ParamSet& p, const StudentConfig& s,
                const env::EnvConfig& c, bool greedy_ = false)
      : phi(&p), sc(s), cfg(c), greedy(greedy_) {}
  void begin_episode(const env::WorldState&) override {
    hidden = initial_state(cfg, sc);
  }
  std::vector<int> act(const env::WorldState&, const env::JointObs& obs,
                       Rng& rng) override {
    auto out = student_act(*phi, sc, cfg, obs, hidden, rng, greedy);
    hidden = std::move(out.next);
    return out.actions;
  }
};

}  // namespace hint::student
