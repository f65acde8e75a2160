#include "hint/dagger.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

namespace hint::dagger {

namespace {

// Roll the demonstrator from a restored state (with the suggested action
// already applied) to episode end; returns success and step count.
std::pair<bool, int> simulate_to_end(env::WorldState s, Demonstrator& demo,
                                     Rng look) {
  int steps = 0;
  env::JointObs obs = env::observe(s);
  while (!s.terminated) {
    auto sug = demo.suggest(s, obs, look);
    obs = env::step(s, sug.actions).obs;
    ++steps;
  }
  return {s.succeeded, steps};
}

}  // namespace

FilterResult query_and_filter(const env::WorldState& s,
                              const env::JointObs& obs, Demonstrator& demo,
                              Rng& query_rng, int query_index,
                              const FilterConfig& fc) {
  FilterResult out;
  auto sug = demo.suggest(s, obs, query_rng);
  out.actions = std::move(sug.actions);
  out.teacher_log_prob = sug.log_prob;

  if (!fc.use_filter) {
    out.accepted = true;
    out.sim_success = true;
    return out;
  }

  std::string token;
  try {
    token = env::snapshot(s);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "[filter] snapshot failed, query discarded: %s\n",
                 e.what());
    out.discarded = true;
    return out;
  }

  int successes = 0;
  for (int m = 0; m < fc.sims; ++m) {
    env::WorldState sim = env::restore(token);
    Rng state_rng = sim.rng;
    Rng look = state_rng.fork(std::uint64_t(query_index) * 131 +
                              std::uint64_t(m) + 1);
    // re-seed the simulated world's own generator per simulation; otherwise
    // every lookahead replays the same environment stochasticity and m-of-k
    // acceptance degenerates to k identical copies of one rollout
    sim.rng = state_rng.fork(std::uint64_t(query_index) * 257 +
                             std::uint64_t(m) + 1);
    if (!sim.terminated) env::step(sim, out.actions);
    auto fork = demo.clone();  // lookahead advances its own copy
    auto [ok, steps] = simulate_to_end(std::move(sim), *fork, look);
    out.lookahead_steps += steps + 1;
    successes += ok;
    out.sim_success |= ok;
  }
  out.accepted = successes >= fc.accept_min;
  return out;
}

EpisodeResult collect_episode(const env::EnvConfig& cfg, const ParamSet& phi,
                              const student::StudentConfig& sc,
                              Demonstrator& demo, const FilterConfig& fc,
                              std::uint64_t seed, bool student_greedy) {
  env::EnvConfig c = cfg;
  c.seed = seed;
  auto [s, obs] = env::reset(c);
  // separate streams so querying never perturbs the student's episode
  Rng student_rng(seed * 0x9e3779b97f4a7c15ull + 0xa5a5a5a5a5a5a5a5ull);
  Rng query_rng(seed * 0xd1342543de82ef95ull + 0x1234567890abcdefull);

  EpisodeResult out;
  out.traj.seed = seed;
  out.traj.partition = "recent";
  student::RecurrentState h = student::initial_state(cfg, sc);
  demo.begin_episode(s);

  while (!s.terminated) {
    auto fr = query_and_filter(s, obs, demo, query_rng, out.queries, fc);
    if (!fr.discarded) {
      ++out.queries;
      out.accepted += fr.accepted;
      TrajStep st;
      st.obs = obs;
      st.accepted = fr.accepted;
      if (fr.accepted) {
        st.teacher_actions = std::move(fr.actions);
        st.teacher_log_prob = fr.teacher_log_prob;
      }
      out.traj.steps.push_back(std::move(st));
    }
    auto act = student::student_act(phi, sc, cfg, obs, h, student_rng,
                                    student_greedy);
    h = std::move(act.next);
    obs = env::step(s, act.actions).obs;
    ++out.length;
  }
  out.success = s.succeeded;
  return out;
}

double suboptimal_demo_rate(long rejected, long total) {
  if (rejected < 0 || total < 0 || rejected > total)
    throw std::invalid_argument("suboptimal_demo_rate: bad counts");
  return total == 0 ? 0.0 : double(rejected) / double(total);
}

AggregatedDataset::AggregatedDataset(std::vector<Trajectory> initial,
                                     std::size_t budget)
    : initial_(std::move(initial)), budget_(budget) {
  if (budget_ < initial_.size())
    throw std::invalid_argument(
        "AggregatedDataset: budget smaller than the initial partition");
  for (auto& tr : initial_) tr.partition = "initial";
}

void AggregatedDataset::aggregate(Trajectory tau) {
  const std::size_t capacity = budget_ - initial_.size();
  if (capacity == 0) return;  // no room reserved for recent episodes
  tau.partition = "recent";
  recent_.push_back(std::move(tau));
  while (recent_.size() > capacity) recent_.pop_front();
}

std::vector<const Trajectory*> AggregatedDataset::epoch_view(
    std::uint64_t seed) const {
  std::vector<const Trajectory*> view;
  std::size_t initial_steps = 0;
  for (const auto& tr : initial_) {
    view.push_back(&tr);
    initial_steps += tr.accepted_count();
  }

  // uniform draw (without replacement) from the recent ring until its
  // accepted-step mass matches the initial partition's
  std::vector<const Trajectory*> pool;
  for (const auto& tr : recent_) pool.push_back(&tr);
  Rng rng(seed * 0x9e3779b97f4a7c15ull + 0x5851f42d4c957f2dull);
  for (std::size_t i = pool.size(); i > 1; --i)
    std::swap(pool[i - 1], pool[rng.uniform_int(i)]);
  const std::size_t target = initial_.empty()
                                 ? std::size_t(-1)  // no anchor: take all
                                 : initial_steps;
  std::size_t drawn = 0;
  for (const Trajectory* tr : pool) {
    if (drawn >= target) break;
    view.push_back(tr);
    drawn += tr->accepted_count();
  }

  for (std::size_t i = view.size(); i > 1; --i)
    std::swap(view[i - 1], view[rng.uniform_int(i)]);
  return view;
}

void AggregatedDataset::save(const std::string& path) const {
  std::vector<Trajectory> all = initial_;
  all.insert(all.end(), recent_.begin(), recent_.end());
  distill::save_trajectories(all, path);
}

AggregatedDataset AggregatedDataset::load(const std::string& path,
                                          std::size_t budget) {
  auto all = distill::load_trajectories(path);
  std::vector<Trajectory> initial;
  std::vector<Trajectory> recent;
  for (auto& tr : all) {
    if (tr.partition == "initial")
      initial.push_back(std::move(tr));
    else
      recent.push_back(std::move(tr));
  }
  AggregatedDataset ds(std::move(initial), budget);
  for (auto& tr : recent) ds.aggregate(std::move(tr));
  return ds;
}

}  // namespace hint::dagger
