#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <string>
#include <vector>

#include "hint/distill.hpp"
#include "hint/env.hpp"
#include "hint/student.hpp"
#include "hint/teacher.hpp"

namespace hint::dagger {

using distill::Trajectory;
using distill::TrajStep;

// A queryable demonstrator. It is stateful across an episode (e.g. a subgoal
// assignment refreshed on a cadence) and clonable so lookahead simulations
// can fork that state without disturbing the live query stream.
class Demonstrator {
 public:
  virtual ~Demonstrator() = default;

  struct Suggestion {
    std::vector<int> actions;
    double log_prob = 0.0;
  };

  virtual void begin_episode(const env::WorldState& s) = 0;
  virtual Suggestion suggest(const env::WorldState& s,
                             const env::JointObs& obs, Rng& rng) = 0;
  virtual std::unique_ptr<Demonstrator> clone() const = 0;
};

// The hierarchical teacher as a demonstrator.
class TeacherDemonstrator : public Demonstrator {
 public:
  // greedy: demonstrate argmax actions (deployment behavior) instead of
  // sampling; labels become a deterministic function of the queried state.
  TeacherDemonstrator(const teacher::TeacherParams& p, int k,
                      bool greedy = false)
      : params_(&p), k_(k), greedy_(greedy) {}
  void begin_episode(const env::WorldState&) override { goals_ = {}; }
  Suggestion suggest(const env::WorldState& s, const env::JointObs& obs,
                     Rng& rng) override {
    auto act =
        teacher::teacher_act(s, obs, *params_, k_, goals_, rng, greedy_);
    return {std::move(act.actions), act.log_prob};
  }
  std::unique_ptr<Demonstrator> clone() const override {
    return std::make_unique<TeacherDemonstrator>(*this);
  }

 private:
  const teacher::TeacherParams* params_;
  int k_;
  bool greedy_ = false;
  teacher::Subgoals goals_;
};

struct FilterConfig {
  int sims = 1;            // lookahead simulations per query
  int accept_min = 1;      // simulated successes required to accept
  bool use_filter = true;  // false: every query accepted (plain aggregation)
};

struct FilterResult {
  std::vector<int> actions;      // suggested joint action
  double teacher_log_prob = 0.0;
  bool accepted = false;
  bool sim_success = false;      // any lookahead reached success
  int lookahead_steps = 0;       // steps simulated across lookaheads
  bool discarded = false;        // snapshot failure; query not counted
};

// Samples a suggested action at the current state, then validates it by
// restoring a snapshot, applying the action, and rolling the demonstrator to
// episode end. Accepts iff the simulation succeeds. The live state `s` is
// never modified; lookahead randomness comes from the snapshot's generator
// forked with a query-indexed offset.
FilterResult query_and_filter(const env::WorldState& s,
                              const env::JointObs& obs, Demonstrator& demo,
                              Rng& query_rng, int query_index,
                              const FilterConfig& fc);

struct EpisodeResult {
  Trajectory traj;     // every step recorded; accepted pairs flagged
  int length = 0;      // env steps taken by the student
  int queries = 0;     // queries counted (discarded ones excluded)
  int accepted = 0;
  bool success = false;
};

// One student episode with a query at every step. The student's trajectory
// is bit-identical to an unqueried rollout with the same seed: queries use
// independent randomness and simulate on restored snapshots only.
EpisodeResult collect_episode(const env::EnvConfig& cfg, const ParamSet& phi,
                              const student::StudentConfig& sc,
                              Demonstrator& demo, const FilterConfig& fc,
                              std::uint64_t seed,
                              bool student_greedy = false);

// Fraction of queries whose validation failed.
double suboptimal_demo_rate(long rejected, long total);

// Demonstration store with a fixed initial partition and a FIFO ring of
// recent filtered episodes; total trajectory count never exceeds the budget.
class AggregatedDataset {
 public:
  AggregatedDataset(std::vector<Trajectory> initial, std::size_t budget);

  const std::vector<Trajectory>& initial() const { return initial_; }
  const std::deque<Trajectory>& recent() const { return recent_; }
  std::size_t budget() const { return budget_; }
  std::size_t size() const { return initial_.size() + recent_.size(); }

  // Append to the recent partition, evicting oldest first at capacity.
  void aggregate(Trajectory tau);

  // Training-epoch draw: every initial trajectory plus a uniform sample of
  // the recent partition matched 1:1 by accepted step count, shuffled.
  std::vector<const Trajectory*> epoch_view(std::uint64_t seed) const;

  void save(const std::string& path) const;
  static AggregatedDataset load(const std::string& path, std::size_t budget);

 private:
  std::vector<Trajectory> initial_;
  std::deque<Trajectory> recent_;
  std::size_t budget_;
};

}  // namespace hint::dagger
