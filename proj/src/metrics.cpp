#include "hint/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hint::metrics {

namespace {

struct EpisodeOutcome {
  bool success = false;
  int steps = 0;
};

EpisodeOutcome run_episode(JointPolicy& policy, const env::EnvConfig& cfg,
                           std::uint64_t env_seed, std::uint64_t rng_seed) {
  env::EnvConfig c = cfg;
  c.seed = env_seed;
  auto [s, obs] = env::reset(c);
  policy.begin_episode(s);
  Rng rng(rng_seed);
  int steps = 0;
  while (!s.terminated) {
    obs = env::step(s, policy.act(s, obs, rng)).obs;
    ++steps;
  }
  return {s.succeeded, s.succeeded ? steps : cfg.max_steps};
}

}  // namespace

EvalReport evaluate(const PolicyFactory& make_policy,
                    const env::EnvConfig& cfg, const EvalConfig& ec) {
  if (ec.episodes < 1)
    throw std::invalid_argument("evaluate: episodes must be >= 1");
  if (ec.seeds.empty())
    throw std::invalid_argument("evaluate: at least one seed required");

  EvalReport report;
  report.episodes = ec.episodes;
  for (std::uint64_t seed : ec.seeds) {
    std::vector<EpisodeOutcome> outcomes(ec.episodes);
    auto job = [&](int e) {
      auto policy = make_policy();
      const std::uint64_t env_seed = seed * 1000003ull + std::uint64_t(e);
      const std::uint64_t rng_seed =
          seed * 0x9e3779b97f4a7c15ull + std::uint64_t(e) * 0x100000001b3ull;
      outcomes[e] = run_episode(*policy, cfg, env_seed, rng_seed);
    };
    if (ec.workers <= 1) {
      for (int e = 0; e < ec.episodes; ++e) job(e);
    } else {
#pragma omp parallel for schedule(dynamic) num_threads(ec.workers)
      for (int e = 0; e < ec.episodes; ++e) job(e);
    }
    SeedReport sr;
    sr.seed = seed;
    for (const auto& o : outcomes) {
      sr.success_rate += o.success;
      sr.steps_taken += o.steps;
    }
    sr.success_rate /= double(ec.episodes);
    sr.steps_taken /= double(ec.episodes);
    report.per_seed.push_back(sr);
    report.success_rate += sr.success_rate;
    report.steps_taken += sr.steps_taken;
  }
  report.success_rate /= double(ec.seeds.size());
  report.steps_taken /= double(ec.seeds.size());
  return report;
}

std::vector<double> state_features(const env::WorldState& s) {
  const Tensor feats = env::global_observe(s);
  const std::size_t rows = feats.rows(), cols = feats.cols();
  std::vector<double> pooled(cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) pooled[c] += feats.at(r, c);
  for (double& v : pooled) v /= double(rows);
  return pooled;
}

std::vector<std::vector<double>> collect_state_samples(
    const PolicyFactory& make_policy, const env::EnvConfig& cfg,
    std::size_t n_states, std::uint64_t seed) {
  std::vector<std::vector<double>> out;
  out.reserve(n_states);
  std::uint64_t episode = 0;
  while (out.size() < n_states) {
    env::EnvConfig c = cfg;
    c.seed = seed * 7919ull + episode;
    auto [s, obs] = env::reset(c);
    auto policy = make_policy();
    policy->begin_episode(s);
    Rng rng(seed * 0x2545f4914f6cdd1dull + episode);
    while (!s.terminated && out.size() < n_states) {
      out.push_back(state_features(s));
      obs = env::step(s, policy->act(s, obs, rng)).obs;
    }
    ++episode;
  }
  return out;
}

namespace {

std::vector<std::vector<double>> covariance(
    const std::vector<std::vector<double>>& x, std::vector<double>& mean) {
  const std::size_t n = x.size(), d = x[0].size();
  mean.assign(d, 0.0);
  for (const auto& row : x)
    for (std::size_t j = 0; j < d; ++j) mean[j] += row[j];
  for (double& v : mean) v /= double(n);
  std::vector<std::vector<double>> c(d, std::vector<double>(d, 0.0));
  for (const auto& row : x)
    for (std::size_t i = 0; i < d; ++i) {
      const double di = row[i] - mean[i];
      for (std::size_t j = i; j < d; ++j)
        c[i][j] += di * (row[j] - mean[j]);
    }
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      c[i][j] /= double(n - 1);
      c[j][i] = c[i][j];
    }
  return c;
}

}  // namespace

PcaResult pca_fit(const std::vector<std::vector<double>>& samples, int dims,
                  double tol, int max_iters) {
  if (dims < 1) throw std::invalid_argument("pca_fit: dims must be >= 1");
  if (samples.size() < std::size_t(dims) + 1)
    throw std::invalid_argument("pca_fit: need at least dims+1 samples");
  const std::size_t d = samples[0].size();
  for (const auto& row : samples)
    if (row.size() != d)
      throw std::invalid_argument("pca_fit: inconsistent dimensionality");

  PcaResult out;
  auto cov = covariance(samples, out.mean);
  double total_var = 0.0;
  for (std::size_t i = 0; i < d; ++i) total_var += cov[i][i];

  Rng rng(0x5ca1ab1e);
  for (int comp = 0; comp < dims; ++comp) {
    std::vector<double> v(d);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    double lambda = 0.0;
    for (int it = 0; it < max_iters; ++it) {
      std::vector<double> w(d, 0.0);
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) w[i] += cov[i][j] * v[j];
      // re-orthogonalize against the directions already extracted so the
      // basis stays orthonormal to machine precision
      for (const auto& u : out.components) {
        double proj = 0.0;
        for (std::size_t i = 0; i < d; ++i) proj += w[i] * u[i];
        for (std::size_t i = 0; i < d; ++i) w[i] -= proj * u[i];
      }
      double norm = 0.0;
      for (double x : w) norm += x * x;
      norm = std::sqrt(norm);
      if (norm < tol * std::max(1.0, total_var)) {
        lambda = 0.0;
        break;
      }
      double diff = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        w[i] /= norm;
        diff = std::max(diff, std::fabs(w[i] - v[i]));
      }
      v = w;
      lambda = norm;
      if (diff < tol) break;
    }
    if (lambda <= tol * std::max(1.0, total_var)) {
      out.rank_deficient = true;
      break;  // no informative direction left
    }
    out.components.push_back(v);
    out.explained_variance.push_back(lambda);
    ++out.rank;
    // deflate: remove the found direction from the covariance
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        cov[i][j] -= lambda * v[i] * v[j];
  }
  return out;
}

std::vector<std::vector<double>> pca_transform(
    const PcaResult& basis, const std::vector<std::vector<double>>& samples) {
  std::vector<std::vector<double>> out;
  out.reserve(samples.size());
  for (const auto& row : samples) {
    if (row.size() != basis.mean.size())
      throw std::invalid_argument("pca_transform: dimensionality mismatch");
    std::vector<double> p(basis.components.size(), 0.0);
    for (std::size_t c = 0; c < basis.components.size(); ++c)
      for (std::size_t j = 0; j < row.size(); ++j)
        p[c] += basis.components[c][j] * (row[j] - basis.mean[j]);
    out.push_back(std::move(p));
  }
  return out;
}

ProjectedSets pca_project(const std::vector<std::vector<double>>& teacher,
                          const std::vector<std::vector<double>>& student,
                          int dims) {
  std::vector<std::vector<double>> all = teacher;
  all.insert(all.end(), student.begin(), student.end());
  ProjectedSets out;
  out.basis = pca_fit(all, dims);
  out.teacher = pca_transform(out.basis, teacher);
  out.student = pca_transform(out.basis, student);
  return out;
}

double histogram_kl(const std::vector<std::vector<double>>& teacher_pts,
                    const std::vector<std::vector<double>>& student_pts,
                    int bins, double epsilon) {
  if (teacher_pts.empty() || student_pts.empty())
    throw std::invalid_argument("histogram_kl: empty point set");
  if (bins < 1) throw std::invalid_argument("histogram_kl: bins must be >= 1");
  auto check = [](const std::vector<std::vector<double>>& pts) {
    for (const auto& p : pts)
      if (p.size() < 2)
        throw std::invalid_argument("histogram_kl: points must be 2-D");
  };
  check(teacher_pts);
  check(student_pts);

  double lo[2] = {teacher_pts[0][0], teacher_pts[0][1]};
  double hi[2] = {teacher_pts[0][0], teacher_pts[0][1]};
  auto extend = [&](const std::vector<std::vector<double>>& pts) {
    for (const auto& p : pts)
      for (int a = 0; a < 2; ++a) {
        lo[a] = std::min(lo[a], p[a]);
        hi[a] = std::max(hi[a], p[a]);
      }
  };
  extend(teacher_pts);
  extend(student_pts);
  for (int a = 0; a < 2; ++a)
    if (hi[a] - lo[a] <= 0.0) hi[a] = lo[a] + 1.0;  // degenerate axis

  auto histogram = [&](const std::vector<std::vector<double>>& pts) {
    std::vector<double> h(std::size_t(bins) * bins, epsilon);
    for (const auto& p : pts) {
      int ix = int((p[0] - lo[0]) / (hi[0] - lo[0]) * bins);
      int iy = int((p[1] - lo[1]) / (hi[1] - lo[1]) * bins);
      ix = std::clamp(ix, 0, bins - 1);
      iy = std::clamp(iy, 0, bins - 1);
      h[std::size_t(iy) * bins + ix] += 1.0;
    }
    double z = 0.0;
    for (double v : h) z += v;
    for (double& v : h) v /= z;
    return h;
  };
  const auto ph = histogram(student_pts);  // measured distribution
  const auto qh = histogram(teacher_pts);  // reference distribution
  double kl = 0.0;
  for (std::size_t i = 0; i < ph.size(); ++i)
    kl += ph[i] * std::log(ph[i] / qh[i]);
  return std::max(0.0, kl);
}

void write_curve_csv(const std::string& path,
                     const std::vector<CurveRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "timestep,success_rate,steps_taken,suboptimal_demo_rate,"
         "teacher_success_rate\n";
  out.precision(10);
  for (const auto& r : rows)
    out << r.timestep << ',' << r.success_rate << ',' << r.steps_taken << ','
        << r.suboptimal_demo_rate << ',' << r.teacher_success_rate << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<CurveRow> read_curve_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::vector<CurveRow> rows;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    CurveRow r;
    char comma;
    ss >> r.timestep >> comma >> r.success_rate >> comma >> r.steps_taken >>
        comma >> r.suboptimal_demo_rate >> comma >> r.teacher_success_rate;
    if (ss.fail()) throw std::runtime_error("malformed curve row: " + line);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace hint::metrics
