#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hint/autodiff.hpp"
#include "hint/env.hpp"
#include "hint/paramset.hpp"
#include "hint/policy.hpp"
#include "hint/rng.hpp"

namespace hint::teacher {

// Binary subgoal assignment, one bit per global_observe row, plus the number
// of steps since it was last sampled.
struct Subgoals {
  std::vector<std::uint8_t> bits;
  int age = 0;
};

struct TeacherParams {
  ParamSet high{ParamSet::Role::TeacherHigh};   // coordinator θ
  ParamSet low{ParamSet::Role::TeacherLow};     // per-class executors
  ParamSet value{ParamSet::Role::TeacherValue}; // joint value head ψ
};

// Freshly initialized parameters sized for the given scenario.
TeacherParams init_teacher(const env::EnvConfig& cfg, Rng& rng);

// --- high-level coordinator ---------------------------------------------

// Bernoulli probability per (agent, target) feature row.
std::vector<double> high_level_probs(const ParamSet& high,
                                     const env::WorldState& s,
                                     const Tensor& feats);

struct HighSample {
  std::vector<std::uint8_t> bits;  // post-remap: no agent left all-zero
  std::vector<double> probs;
  double log_prob = 0.0;           // sum of per-bit log-probs
};
HighSample sample_subgoals(const ParamSet& high, const env::WorldState& s,
                           const Tensor& feats, Rng& rng);

// Taped log-probability / entropy of a recorded assignment; the tape must be
// bound to the coordinator ParamSet.
Tape::Var subgoal_log_prob_node(Tape& t, const env::WorldState& s,
                                const Tensor& feats,
                                const std::vector<std::uint8_t>& bits);
Tape::Var subgoal_entropy_node(Tape& t, const env::WorldState& s,
                               const Tensor& feats);

// --- low-level executors -------------------------------------------------

// Subgoal summary handed to an executor: relative offset and distance to the
// nearest assigned target plus the assigned fraction.
std::vector<double> goal_features(const env::WorldState& s, int agent,
                                  const std::vector<std::uint8_t>& bits);
inline constexpr int kGoalFeatureDim = 4;

int low_level_input_dim(const env::EnvConfig& cfg, int agent_class);

// Action logits for one agent; input = local observation ++ goal features.
std::vector<double> low_level_logits(const ParamSet& low,
                                     const env::EnvConfig& cfg,
                                     int agent_class,
                                     const std::vector<double>& input);
// Normalized action distribution.
std::vector<double> low_level_policy(const ParamSet& low,
                                     const env::EnvConfig& cfg,
                                     int agent_class,
                                     const std::vector<double>& input);

// --- joint acting --------------------------------------------------------

struct ActResult {
  std::vector<int> actions;
  double log_prob = 0.0;       // high-level part (refresh steps) + low-level
  double high_log_prob = 0.0;  // zero on non-refresh steps
  bool refreshed = false;
};

// Samples a joint action, resampling subgoals when g.age hits a multiple of
// k. g is updated in place (bits on refresh, age always).
ActResult teacher_act(const env::WorldState& s, const env::JointObs& obs,
                      const TeacherParams& p, int k, Subgoals& g, Rng& rng,
                      bool greedy = false);

// --- value head ----------------------------------------------------------

double teacher_value(const ParamSet& value, const Tensor& feats);
Tape::Var teacher_value_node(Tape& t, const Tensor& feats);

// --- pretraining ---------------------------------------------------------

struct PretrainConfig {
  std::string preset = "marine-easy";
  int k = 1;
  double gamma = 0.9;
  double lr = 5e-4;
  double entropy_coef = 0.01;
  int workers_high = 16;
  int workers_low = 10;
  long low_timesteps = 40000;   // per-agent env steps
  long high_timesteps = 40000;
  int rollout_len = 20;
  std::uint64_t seed = 0;
  bool verbose = false;
};

// Stage 1: advantage actor-critic on randomized reach-the-target tasks;
// trains p.low in place. Throws on non-finite loss.
void pretrain_low_level(TeacherParams& p, const PretrainConfig& cfg);

// Stage 2: advantage actor-critic over subgoal assignments with the
// executors frozen; trains p.high and p.value in place.
void pretrain_high_level(TeacherParams& p, const PretrainConfig& cfg);

// JointPolicy adapter handling subgoal caching across an episode.
struct TeacherPolicy : JointPolicy {
  const TeacherParams* params;
  int k = 1;
  bool greedy = false;
  Subgoals goals;

  TeacherPolicy(const TeacherParams& p, int k_, bool greedy_ = false)
      : params(&p), k(k_), greedy(greedy_) {}
  void begin_episode(const env::WorldState&) override { goals = {}; }
  std::vector<int> act(const env::WorldState& s, const env::JointObs& obs,
                       Rng& rng) override {
    return teacher_act(s, obs, *params, k, goals, rng, greedy).actions;
  }
};

}  // namespace hint::teacher
