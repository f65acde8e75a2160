#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "hint/env.hpp"
#include "hint/rng.hpp"

namespace hint {

// Anything that can drive a joint environment. Implementations may keep
// per-episode state (recurrent memory, cached subgoals) keyed off
// begin_episode.
struct JointPolicy {
  virtual ~JointPolicy() = default;
  virtual void begin_episode(const env::WorldState&) {}
  virtual std::vector<int> act(const env::WorldState& state,
                               const env::JointObs& obs, Rng& rng) = 0;
};

// Numerically stable softmax over raw logits.
inline std::vector<double> softmax_probs(const std::vector<double>& logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) z += p[i] = std::exp(logits[i] - m);
  for (double& v : p) v /= z;
  return p;
}

inline double log_softmax_at(const std::vector<double>& logits,
                             std::size_t index) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double v : logits) z += std::exp(v - m);
  return logits[index] - m - std::log(z);
}

inline std::size_t sample_categorical(const std::vector<double>& probs,
                                      Rng& rng) {
  double u = rng.uniform();
  for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
    u -= probs[i];
    if (u < 0.0) return i;
  }
  return probs.size() - 1;
}

inline std::size_t argmax(const std::vector<double>& v) {
  return std::max_element(v.begin(), v.end()) - v.begin();
}

// Hand-scripted baseline: every agent heads for its most relevant target
// (routing -> nearest destination, logistic -> nearest routing agent,
// perception -> highest-uncertainty point, action -> nearest discovered fire,
// extinguishing when standing on one). Deterministic given the state.
struct GreedyPolicy : JointPolicy {
  std::vector<int> act(const env::WorldState& state, const env::JointObs& obs,
                       Rng& rng) override;
};

// Rolls full episodes and returns the fraction that end in success.
double success_rate(JointPolicy& policy, const env::EnvConfig& cfg,
                    int episodes, std::uint64_t seed);

}  // namespace hint
