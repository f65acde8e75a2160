#pragma once

#include <cstdint>
#include <vector>

#include "hint/autodiff.hpp"
#include "hint/env.hpp"
#include "hint/student.hpp"
#include "hint/teacher.hpp"

namespace hint::pseudorl {

// One step of a student-prefix / teacher-suffix rollout. The coordinator's
// subgoal assignment is advanced on the usual refresh schedule even while the
// student is acting, so the teacher's action probabilities stay defined on
// every executed action.
struct MixedStep {
  env::JointObs obs;
  Tensor feats;                  // centralized feature matrix (value input)
  std::vector<int> actions;
  double reward = 0.0;           // team reward: per-agent rewards summed
  double behavior_lp = 0.0;      // log-prob under the policy that acted
  bool student = false;          // tag: student acted at this step
  bool done = false;
  // target-policy bookkeeping
  std::vector<std::uint8_t> goal_bits;  // assignment live at this step
  bool refreshed = false;               // assignment drawn at this step
  env::WorldState state;                // kept on refresh steps only
  double low_lp = 0.0;  // executor log-prob of `actions` given the bits;
                        // constant during refinement (executors frozen)
};

struct MixedTrajectory {
  std::vector<MixedStep> steps;
  int switch_point = 0;          // student acted on steps 0..switch_point-1
  Tensor bootstrap_feats;        // features after the final step
  bool terminated = false;       // episode ended by the environment
  std::uint64_t seed = 0;
};

// Rolls one mixed episode: the switch point is uniform on {1..max_steps},
// the student (frozen phi) acts up to it, the hierarchical policy afterward.
MixedTrajectory rollout_mixed(const env::EnvConfig& cfg, const ParamSet& phi,
                              const student::StudentConfig& sc,
                              const teacher::TeacherParams& p, int k,
                              std::uint64_t seed);

// --- corrected value targets ----------------------------------------------

struct VTraceInput {
  std::vector<double> values;       // V(o_t) for each step
  double bootstrap_value = 0.0;     // V at the segment end (0 if terminal)
  std::vector<double> rewards;
  std::vector<double> target_lp;    // log-prob under the target policy
  std::vector<double> behavior_lp;  // log-prob recorded at acting time
  std::vector<bool> dones;          // episode ended after step t
  double gamma = 0.9;
};

struct VTraceBatch {
  std::vector<double> v;      // corrected value target v_t
  std::vector<double> rho;    // truncated weight on the TD error, (0,1]
  std::vector<double> c;      // truncated continuation weight, (0,1]
  std::vector<double> delta;  // rho_t * (r_t + gamma*V(o_{t+1}) - V(o_t))
  std::vector<double> adv;    // r_t + gamma*v_{t+1} - V(o_t)
};

// v_t = V(o_t) + sum_{j>=t} gamma^{j-t} (prod_{i<j} c_i) delta_j, truncated
// at the segment end (bootstrap) or an episode boundary (terminal value 0).
// Throws if a behavior log-prob is -inf (the action could not have been
// sampled) or the inputs are inconsistent.
VTraceBatch vtrace_targets(const VTraceInput& in);

// --- losses over a flushed buffer ------------------------------------------

// Mean squared error between predictions and fixed targets.
double value_loss(const std::vector<double>& predictions,
                  const std::vector<double>& targets);
// Taped version: tape bound to the value-head parameters.
Tape::Var value_loss_node(Tape& t, const std::vector<const Tensor*>& feats,
                          const std::vector<double>& targets);

// Mean over steps of weight_t * log-prob_t * advantage_t; weight is 1 on
// teacher-tagged steps and the (constant) target/behavior probability ratio
// on student-tagged steps. Ascended during refinement.
double policy_objective(const std::vector<double>& target_lp,
                        const std::vector<double>& weights,
                        const std::vector<double>& advantages);

struct PseudoConfig {
  int n = 200;             // buffer size in steps per update
  double gamma = 0.9;
  int n_pseudo = 10;       // episodes per epoch
  double lr_value = 1e-4;
  double lr_policy = 1e-4;
  int k = 1;               // coordinator refresh interval
  int workers = 1;         // parallel rollout workers
  std::uint64_t seed = 0;
};

struct PseudoStats {
  int episodes = 0;
  int steps = 0;           // env steps collected
  int updates = 0;         // buffer flushes applied
  int skipped = 0;         // flushes skipped on non-finite loss
  double last_value_loss = 0.0;
  double last_objective = 0.0;
};

// One refinement epoch: roll n_pseudo mixed episodes (student frozen),
// accumulate steps into an n-step buffer, and on every fill compute the
// corrected targets, take an Adam descent step on the value head and an
// ascent step on the coordinator, then clear the buffer. Executor
// parameters are never touched. Leftover steps below n are dropped.
PseudoStats pseudo_update(teacher::TeacherParams& p, const env::EnvConfig& cfg,
                          const ParamSet& phi,
                          const student::StudentConfig& sc,
                          const PseudoConfig& pc, AdamState& adam_value,
                          AdamState& adam_policy);

}  // namespace hint::pseudorl
