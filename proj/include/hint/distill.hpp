#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hint/autodiff.hpp"
#include "hint/env.hpp"
#include "hint/student.hpp"

namespace hint::distill {

// One step of the shared trajectory record: the full observation sequence is
// kept (recurrent replay needs every step); accepted steps additionally
// carry the demonstrated joint action and its log-probability under the
// demonstrator at query time.
struct TrajStep {
  env::JointObs obs;
  std::vector<int> teacher_actions;
  double teacher_log_prob = 0.0;
  bool accepted = false;
};

struct Trajectory {
  std::vector<TrajStep> steps;
  std::uint64_t seed = 0;
  int switch_point = -1;          // mixed-rollout provenance; -1 if unused
  std::string partition;          // "initial" / "recent" / ""
  std::size_t accepted_count() const {
    std::size_t n = 0;
    for (const auto& s : steps) n += s.accepted;
    return n;
  }
};

// Line-delimited persistence (one JSON trajectory per line).
void save_trajectories(const std::vector<Trajectory>& trajs,
                       const std::string& path);
std::vector<Trajectory> load_trajectories(const std::string& path);

struct DistillConfig {
  double alpha = 0.01;     // entropy coefficient
  double lr = 1e-4;
  int capacity = 200;      // accepted pairs per parameter update
  int entropy_sign = -1;   // -1: entropy bonus (default), +1: penalty
  std::uint64_t seed = 0;
};

// Plain arithmetic form of the distillation loss over recorded quantities.
struct KdSample {
  double teacher_lp;
  double student_lp;
  double student_entropy;
};
double kd_loss(const std::vector<KdSample>& batch, double alpha,
               int entropy_sign = -1);

struct KdStats {
  int updates = 0;
  int pairs_seen = 0;       // accepted pairs consumed (flushed or not)
  int pairs_trained = 0;    // pairs that entered an update
  double last_loss = 0.0;
  double mean_entropy = 0.0;  // over trained pairs
  int skipped = 0;            // updates skipped on non-finite loss
};

// One pass over the trajectories in the given order: thread hidden states
// within each trajectory, push accepted pairs into the buffer, and take one
// Adam step each time the buffer reaches capacity (then clear). Leftover
// pairs below capacity at the end of the pass are dropped, so updates per
// pass = floor(total accepted pairs / capacity).
KdStats kd_update(ParamSet& phi, AdamState& adam,
                  const student::StudentConfig& sc,
                  const env::EnvConfig& cfg,
                  const std::vector<const Trajectory*>& trajectories,
                  const DistillConfig& dc);

// Seeded trajectory order for one epoch (steps inside a trajectory stay
// ordered; only whole trajectories are shuffled).
std::vector<const Trajectory*> shuffled_view(
    const std::vector<Trajectory>& dataset, std::uint64_t seed);

// Fixed-dataset distillation: `passes` epochs of kd_update on freshly
// shuffled views. The behavior-cloning baseline.
KdStats behavior_clone(ParamSet& phi, AdamState& adam,
                       const student::StudentConfig& sc,
                       const env::EnvConfig& cfg,
                       const std::vector<Trajectory>& dataset,
                       const DistillConfig& dc, int passes);

}  // namespace hint::distill
