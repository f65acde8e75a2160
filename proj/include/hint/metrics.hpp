#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "hint/env.hpp"
#include "hint/policy.hpp"

namespace hint::metrics {

// --- success-rate evaluation ----------------------------------------------

struct EvalConfig {
  int episodes = 50;                          // per seed
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  int workers = 1;                            // parallel episode workers
};

struct SeedReport {
  std::uint64_t seed = 0;
  double success_rate = 0.0;
  double steps_taken = 0.0;
};

struct EvalReport {
  double success_rate = 0.0;  // mean over seeds
  double steps_taken = 0.0;   // mean steps; failures count max_steps
  int episodes = 0;           // per seed
  std::vector<SeedReport> per_seed;
};

// Fresh policy instance per episode (policies carry per-episode state).
using PolicyFactory = std::function<std::unique_ptr<JointPolicy>()>;

// Runs episodes on freshly seeded environments; deterministic given
// (policy, config, seeds) and independent of the worker count.
EvalReport evaluate(const PolicyFactory& make_policy,
                    const env::EnvConfig& cfg, const EvalConfig& ec);

// --- state-distribution diagnostic ----------------------------------------

// Pooled centralized features of a state: column means of the joint
// feature matrix (one fixed-width vector regardless of agent count).
std::vector<double> state_features(const env::WorldState& s);

// Visit states under the policy and record pooled features, one vector per
// visited state, until n_states are collected.
std::vector<std::vector<double>> collect_state_samples(
    const PolicyFactory& make_policy, const env::EnvConfig& cfg,
    std::size_t n_states, std::uint64_t seed);

struct PcaResult {
  std::vector<std::vector<double>> components;  // rank x d, orthonormal
  std::vector<double> explained_variance;       // non-increasing
  std::vector<double> mean;
  int rank = 0;
  bool rank_deficient = false;  // fewer informative directions than asked
};

// Principal directions of the sample set via power iteration with
// deflation. Throws unless samples.size() >= dims + 1.
PcaResult pca_fit(const std::vector<std::vector<double>>& samples,
                  int dims = 2, double tol = 1e-8, int max_iters = 1000);

std::vector<std::vector<double>> pca_transform(
    const PcaResult& basis, const std::vector<std::vector<double>>& samples);

struct ProjectedSets {
  std::vector<std::vector<double>> teacher;
  std::vector<std::vector<double>> student;
  PcaResult basis;  // fitted on the union of both sets
};

// Projects both sample sets with one shared basis fitted on their union.
ProjectedSets pca_project(const std::vector<std::vector<double>>& teacher,
                          const std::vector<std::vector<double>>& student,
                          int dims = 2);

// KL(student ‖ teacher) between additively smoothed normalized 2-D
// histograms on the shared bounding box (bins x bins, epsilon 1e-6).
double histogram_kl(const std::vector<std::vector<double>>& teacher_pts,
                    const std::vector<std::vector<double>>& student_pts,
                    int bins = 50, double epsilon = 1e-6);

// --- learning-curve output --------------------------------------------------

struct CurveRow {
  long timestep = 0;
  double success_rate = 0.0;
  double steps_taken = 0.0;
  double suboptimal_demo_rate = 0.0;
  double teacher_success_rate = 0.0;
};

void write_curve_csv(const std::string& path,
                     const std::vector<CurveRow>& rows);
std::vector<CurveRow> read_curve_csv(const std::string& path);

}  // namespace hint::metrics
