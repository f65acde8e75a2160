#include "hint/env.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>

namespace hint::env {

namespace {

constexpr double kPi = 3.14159265358979323846;

constexpr int kDx[5] = {0, 0, -1, 1, 0};
constexpr int kDy[5] = {-1, 1, 0, 0, 0};

int manhattan(Cell a, Cell b) {
  return std::abs(a.x - b.x) + std::abs(a.y - b.y);
}

double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -(p * std::log(p) + (1.0 - p) * std::log(1.0 - p)) / std::log(2.0);
}

void recompute_wave(WorldState& s) {
  const auto& cfg = s.config;
  const double base = 0.5 * cfg.wave_amplitude;
  const double t = static_cast<double>(s.step);
  for (int y = 0; y < cfg.height; ++y)
    for (int x = 0; x < cfg.width; ++x) {
      double h = base;
      for (const auto& c : s.wave_components)
        h += c.amp * std::sin(c.kx * x + c.ky * y - c.omega * t + c.phase);
      h += s.wave_noise[y * cfg.width + x];
      s.wave[y * cfg.width + x] = std::clamp(h, 0.0, 1.0);
    }
}

void advance_wave_noise(WorldState& s) {
  const double amp = 0.05 * s.config.wave_amplitude;
  for (double& n : s.wave_noise)
    n = 0.9 * n + amp * s.rng.uniform(-1.0, 1.0);
}

// Update the belief field: cells inside a perception FOV are set to the
// observed truth and burning ones become discovered; the rest diffuse
// toward neighbors of burning-likely cells.
void fire_perceive_and_diffuse(WorldState& s) {
  const auto& cfg = s.config;
  const int r = cfg.fov / 2;
  std::vector<std::uint8_t> observed(cfg.width * cfg.height, 0);
  for (int i = 0; i < cfg.n_type1; ++i) {
    for (int dy = -r; dy <= r; ++dy)
      for (int dx = -r; dx <= r; ++dx) {
        Cell c{s.pos[i].x + dx, s.pos[i].y + dy};
        if (!s.in_bounds(c)) continue;
        observed[s.cell_index(c)] = 1;
      }
  }
  std::vector<double> next = s.fire_prob;
  for (int y = 0; y < cfg.height; ++y)
    for (int x = 0; x < cfg.width; ++x) {
      const int idx = y * cfg.width + x;
      if (observed[idx]) {
        const bool burning = s.fire[idx] == FireState::Burning;
        next[idx] = burning ? 1.0 : 0.0;
        if (burning) s.discovered[idx] = 1;
        continue;
      }
      double growth = 0.0;
      for (int d = 0; d < 4; ++d) {
        Cell nb{x + kDx[d], y + kDy[d]};
        if (!s.in_bounds(nb)) continue;
        double spread = cfg.fire_p_base;
        if (kDx[d] == -s.wind_dx && kDy[d] == -s.wind_dy)
          spread *= cfg.fire_wind_mult;  // neighbor is upwind of this cell
        growth += spread * s.fire_prob[s.cell_index(nb)];
      }
      next[idx] = std::clamp(s.fire_prob[idx] + (1.0 - s.fire_prob[idx]) *
                                                    growth, 0.0, 1.0);
    }
  s.fire_prob = std::move(next);
}

void spread_fire(WorldState& s) {
  const auto& cfg = s.config;
  std::vector<int> ignite;
  for (int y = 0; y < cfg.height; ++y)
    for (int x = 0; x < cfg.width; ++x) {
      if (s.fire[y * cfg.width + x] != FireState::Burning) continue;
      for (int d = 0; d < 4; ++d) {
        Cell nb{x + kDx[d], y + kDy[d]};
        if (!s.in_bounds(nb)) continue;
        const int nidx = s.cell_index(nb);
        if (s.fire[nidx] != FireState::None) continue;
        double p = cfg.fire_p_base;
        if (kDx[d] == s.wind_dx && kDy[d] == s.wind_dy)
          p *= cfg.fire_wind_mult;
        if (s.rng.bernoulli(std::min(1.0, p))) ignite.push_back(nidx);
      }
    }
  for (int idx : ignite) s.fire[idx] = FireState::Burning;
}

int burning_count(const WorldState& s) {
  int n = 0;
  for (auto f : s.fire) n += f == FireState::Burning;
  return n;
}

// Nearest discovered burning cell, or {-1,-1}.
Cell nearest_discovered_fire(const WorldState& s, Cell from) {
  Cell best{-1, -1};
  int best_d = 1 << 30;
  for (int y = 0; y < s.config.height; ++y)
    for (int x = 0; x < s.config.width; ++x) {
      const int idx = y * s.config.width + x;
      if (!s.discovered[idx] || s.fire[idx] != FireState::Burning) continue;
      const int d = manhattan(from, {x, y});
      if (d < best_d) {
        best_d = d;
        best = {x, y};
      }
    }
  return best;
}

struct Subarea {
  int x0, y0, x1, y1;  // inclusive bounds
  Cell center() const { return {(x0 + x1) / 2, (y0 + y1) / 2}; }
};

std::vector<Subarea> subareas(const EnvConfig& cfg) {
  std::vector<Subarea> out;
  const int s = cfg.subarea_side;
  for (int y0 = 0; y0 < cfg.height; y0 += s)
    for (int x0 = 0; x0 < cfg.width; x0 += s)
      out.push_back({x0, y0, std::min(x0 + s, cfg.width) - 1,
                     std::min(y0 + s, cfg.height) - 1});
  return out;
}

Cell max_entropy_cell(const WorldState& s, const Subarea& a) {
  Cell best = a.center();
  double best_h = -1.0;
  for (int y = a.y0; y <= a.y1; ++y)
    for (int x = a.x0; x <= a.x1; ++x) {
      const double h = binary_entropy(s.fire_prob[y * s.config.width + x]);
      if (h > best_h) {
        best_h = h;
        best = {x, y};
      }
    }
  return best;
}

// Per-class interest point inside a subarea (see target_cells).
Cell subarea_interest(const WorldState& s, const Subarea& a, int agent_class,
                      Cell from) {
  if (agent_class == 0) return max_entropy_cell(s, a);
  Cell best{-1, -1};
  int best_d = 1 << 30;
  for (int y = a.y0; y <= a.y1; ++y)
    for (int x = a.x0; x <= a.x1; ++x) {
      const int idx = y * s.config.width + x;
      if (!s.discovered[idx] || s.fire[idx] != FireState::Burning) continue;
      const int d = manhattan(from, {x, y});
      if (d < best_d) {
        best_d = d;
        best = {x, y};
      }
    }
  return best.x >= 0 ? best : a.center();
}

double discovered_fire_density(const WorldState& s, const Subarea& a) {
  int n = 0, cells = 0;
  for (int y = a.y0; y <= a.y1; ++y)
    for (int x = a.x0; x <= a.x1; ++x) {
      ++cells;
      const int idx = y * s.config.width + x;
      n += s.discovered[idx] && s.fire[idx] == FireState::Burning;
    }
  return cells ? static_cast<double>(n) / cells : 0.0;
}

double mean_entropy(const WorldState& s, const Subarea& a) {
  double h = 0.0;
  int cells = 0;
  for (int y = a.y0; y <= a.y1; ++y)
    for (int x = a.x0; x <= a.x1; ++x) {
      h += binary_entropy(s.fire_prob[y * s.config.width + x]);
      ++cells;
    }
  return cells ? h / cells : 0.0;
}

void validate(const EnvConfig& cfg) {
  if (cfg.fov < 3 || cfg.fov % 2 == 0)
    throw std::invalid_argument("EnvConfig: fov must be odd and >= 3");
  if (cfg.n_type1 < 1 || cfg.n_type2 < 1 || cfg.n_targets < 1)
    throw std::invalid_argument("EnvConfig: counts must be >= 1");
  if (cfg.max_steps < 1)
    throw std::invalid_argument("EnvConfig: max_steps must be >= 1");
  const int cells = cfg.width * cfg.height;
  const int entities = cfg.n_type1 + cfg.n_type2 + cfg.n_targets;
  if (entities > cells)
    throw std::invalid_argument("EnvConfig: grid too small for all entities");
}

// Serialization helpers for snapshot tokens.
struct Writer {
  std::string out;
  template <typename T>
  void pod(const T& v) {
    const char* p = reinterpret_cast<const char*>(&v);
    out.append(p, sizeof(T));
  }
  template <typename T>
  void vec(const std::vector<T>& v) {
    pod(static_cast<std::uint64_t>(v.size()));
    for (const auto& x : v) pod(x);
  }
};

struct Reader {
  const std::string& in;
  std::size_t at = 0;
  template <typename T>
  void pod(T& v) {
    if (at + sizeof(T) > in.size())
      throw std::runtime_error("snapshot token truncated");
    std::memcpy(&v, in.data() + at, sizeof(T));
    at += sizeof(T);
  }
  template <typename T>
  void vec(std::vector<T>& v) {
    std::uint64_t n = 0;
    pod(n);
    v.resize(n);
    for (auto& x : v) pod(x);
  }
};

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

EnvConfig preset(const std::string& name, std::uint64_t seed) {
  EnvConfig c;
  c.seed = seed;
  if (name == "marine-easy") {
    c = {Domain::Marine, 5, 5, 3, 2, 1, 1, 50, 5.0, 5, seed};
  } else if (name == "marine-medium") {
    c = {Domain::Marine, 10, 10, 3, 3, 2, 1, 100, 10.0, 5, seed};
  } else if (name == "marine-hard") {
    c = {Domain::Marine, 20, 20, 5, 6, 4, 1, 200, 20.0, 5, seed};
  } else if (name == "fc-easy") {
    c = {Domain::Fire, 5, 5, 3, 1, 2, 1, 50, 0.0, 5, seed};
  } else if (name == "fc-medium") {
    c = {Domain::Fire, 10, 10, 3, 2, 3, 1, 100, 0.0, 5, seed};
  } else if (name == "fc-hard") {
    c = {Domain::Fire, 21, 21, 5, 4, 6, 1, 210, 0.0, 7, seed};
  } else {
    throw std::invalid_argument("unknown environment preset: " + name);
  }
  return c;
}

int n_actions(const EnvConfig& cfg, int agent_class) {
  return (cfg.domain == Domain::Fire && agent_class == 1) ? 6 : 5;
}

int num_subareas(const EnvConfig& cfg) {
  const int nx = (cfg.width + cfg.subarea_side - 1) / cfg.subarea_side;
  const int ny = (cfg.height + cfg.subarea_side - 1) / cfg.subarea_side;
  return nx * ny;
}

int num_targets(const EnvConfig& cfg, int agent_class) {
  if (cfg.domain == Domain::Fire) return num_subareas(cfg);
  return agent_class == 0 ? cfg.n_type2 + cfg.n_targets : cfg.n_type1;
}

std::vector<Cell> target_cells(const WorldState& s, int agent) {
  const auto& cfg = s.config;
  std::vector<Cell> out;
  if (cfg.domain == Domain::Fire) {
    for (const auto& a : subareas(cfg))
      out.push_back(subarea_interest(s, a, s.agent_class(agent),
                                     s.pos[agent]));
    return out;
  }
  if (s.agent_class(agent) == 0) {
    for (int j = 0; j < cfg.n_type2; ++j) out.push_back(s.pos[cfg.n_type1 + j]);
    for (const auto& d : s.destinations) out.push_back(d);
  } else {
    for (int i = 0; i < cfg.n_type1; ++i) out.push_back(s.pos[i]);
  }
  return out;
}

std::pair<WorldState, JointObs> reset(const EnvConfig& cfg) {
  validate(cfg);
  WorldState s;
  s.config = cfg;
  s.rng = Rng(cfg.seed);

  // Distinct cells for agents and destinations / initial fires.
  const int n = s.n_agents();
  std::vector<int> cells(cfg.width * cfg.height);
  for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = int(i);
  for (int i = 0; i < n + cfg.n_targets; ++i) {
    const std::size_t j = i + s.rng.uniform_int(cells.size() - i);
    std::swap(cells[i], cells[j]);
  }
  s.pos.resize(n);
  for (int i = 0; i < n; ++i)
    s.pos[i] = {cells[i] % cfg.width, cells[i] / cfg.width};

  if (cfg.domain == Domain::Marine) {
    s.fuel.assign(cfg.n_type1, cfg.initial_fuel);
    s.arrived.assign(cfg.n_type1, false);
    for (int t = 0; t < cfg.n_targets; ++t) {
      const int c = cells[n + t];
      s.destinations.push_back({c % cfg.width, c / cfg.width});
    }
    s.wave.assign(cfg.width * cfg.height, 0.0);
    s.wave_noise.assign(cfg.width * cfg.height, 0.0);
    for (int i = 0; i < 3; ++i) {
      const double angle = s.rng.uniform(0.0, 2.0 * kPi);
      const double wavelength = s.rng.uniform(3.0, 8.0);
      const double k = 2.0 * kPi / wavelength;
      s.wave_components.push_back({k * std::cos(angle), k * std::sin(angle),
                                   s.rng.uniform(0.2, 0.6),
                                   s.rng.uniform(0.0, 2.0 * kPi),
                                   0.15 * cfg.wave_amplitude});
    }
    recompute_wave(s);
  } else {
    s.fire.assign(cfg.width * cfg.height, FireState::None);
    s.discovered.assign(cfg.width * cfg.height, 0);
    s.fire_prob.assign(cfg.width * cfg.height, 0.5);
    for (int t = 0; t < cfg.n_targets; ++t)
      s.fire[cells[n + t]] = FireState::Burning;
    const int wind = int(s.rng.uniform_int(4));
    s.wind_dx = kDx[wind];
    s.wind_dy = kDy[wind];
    fire_perceive_and_diffuse(s);
  }
  return {s, observe(s)};
}

StepResult step(WorldState& s, const std::vector<int>& joint_action) {
  const auto& cfg = s.config;
  if (s.terminated)
    throw std::invalid_argument("step: episode already terminated");
  if (static_cast<int>(joint_action.size()) != s.n_agents())
    throw std::invalid_argument("step: one action per agent required");
  for (int i = 0; i < s.n_agents(); ++i) {
    const int a = joint_action[i];
    if (a < 0 || a >= n_actions(cfg, s.agent_class(i)))
      throw std::invalid_argument("step: invalid action code for agent " +
                                  std::to_string(i));
  }

  StepResult r;
  r.rewards.assign(s.n_agents(), 0.0);

  // Movement with boundary clamping. Depleted routing agents cannot move.
  for (int i = 0; i < s.n_agents(); ++i) {
    const int a = joint_action[i];
    if (a == Stay || a == Extinguish) continue;
    const bool routing = cfg.domain == Domain::Marine && s.agent_class(i) == 0;
    if (routing && s.fuel[i] < 1.0) continue;
    Cell next{s.pos[i].x + kDx[a], s.pos[i].y + kDy[a]};
    if (s.in_bounds(next)) s.pos[i] = next;
    if (routing) s.fuel[i] -= 1.0;
  }

  if (cfg.domain == Domain::Marine) {
    // Refueling: co-located (routing, logistic) pairs, capped at capacity.
    if (cfg.marine_refuel) {
      for (int j = cfg.n_type1; j < s.n_agents(); ++j)
        for (int i = 0; i < cfg.n_type1; ++i) {
          if (!(s.pos[i] == s.pos[j])) continue;
          const double frac =
              refuel_fraction(s.wave[s.cell_index(s.pos[i])]);
          const double amount = std::min(frac * cfg.initial_fuel,
                                         cfg.initial_fuel - s.fuel[i]);
          if (amount <= 0.0) continue;
          s.fuel[i] += amount;
          r.info.fuel_transferred += amount;
          r.rewards[j] += 0.1 * amount;
        }
    }
    advance_wave_noise(s);

    for (int i = 0; i < s.n_agents(); ++i) r.rewards[i] -= 0.01;
    for (int i = 0; i < cfg.n_type1; ++i) {
      int dist = 1 << 30;
      for (const auto& d : s.destinations)
        dist = std::min(dist, manhattan(s.pos[i], d));
      r.rewards[i] -= 0.001 * dist;
      if (dist == 0 && !s.arrived[i]) {
        s.arrived[i] = true;
        r.rewards[i] += 1.0;
        ++r.info.agents_arrived;
      }
    }
  } else {
    // Extinguish before spread: a put-out cell does not ignite neighbors.
    for (int i = cfg.n_type1; i < s.n_agents(); ++i) {
      if (joint_action[i] != Extinguish) continue;
      const int idx = s.cell_index(s.pos[i]);
      if (s.discovered[idx] && s.fire[idx] == FireState::Burning) {
        s.fire[idx] = FireState::Extinguished;
        s.fire_prob[idx] = 0.0;
        ++r.info.fires_extinguished;
        r.rewards[i] += 0.5;
      }
    }
    spread_fire(s);
    fire_perceive_and_diffuse(s);
    const int burning = burning_count(s);
    for (int i = 0; i < s.n_agents(); ++i) r.rewards[i] -= 0.01 * burning;
  }

  ++s.step;
  if (cfg.domain == Domain::Marine) recompute_wave(s);

  const bool succ = success(s);
  const bool fail = failure(s);
  if (cfg.domain == Domain::Marine && fail) {
    for (int i = 0; i < cfg.n_type1; ++i) {
      int dist = 1 << 30;
      for (const auto& d : s.destinations)
        dist = std::min(dist, manhattan(s.pos[i], d));
      if (s.fuel[i] < 1.0 && dist > 0) r.rewards[i] -= 1.0;
    }
  }
  if (succ || fail || s.step >= cfg.max_steps) {
    s.terminated = true;
    s.succeeded = succ;
  }
  r.done = s.terminated;
  r.success = succ;
  r.obs = observe(s);
  return r;
}

bool success(const WorldState& s) {
  if (s.config.domain == Domain::Marine) {
    for (int i = 0; i < s.config.n_type1; ++i) {
      bool at = false;
      for (const auto& d : s.destinations) at = at || s.pos[i] == d;
      if (!at) return false;
    }
    return true;
  }
  return burning_count(s) == 0;
}

bool failure(const WorldState& s) {
  if (s.config.domain == Domain::Marine) {
    if (success(s)) return false;
    for (int i = 0; i < s.config.n_type1; ++i) {
      bool at = false;
      for (const auto& d : s.destinations) at = at || s.pos[i] == d;
      if (!at && s.fuel[i] < 1.0) return true;
    }
    return false;
  }
  return s.step >= s.config.max_steps && burning_count(s) > 0;
}

double refuel_fraction(double wave_height) {
  if (!std::isfinite(wave_height))
    throw std::invalid_argument("refuel_fraction: non-finite height");
  const double h = std::clamp(wave_height, 0.0, 1.0);
  static constexpr double kFractions[4] = {0.0, 0.15, 0.30, 0.50};
  const int bin = std::min(3, static_cast<int>(h * 4.0));
  return kFractions[bin];
}

int obs_dim(const EnvConfig& cfg, int agent_class) {
  const int patch = cfg.fov * cfg.fov;
  if (cfg.domain == Domain::Marine) return 4 * patch + 1;
  return agent_class == 0 ? 3 * patch : 6;
}

JointObs observe(const WorldState& s) {
  const auto& cfg = s.config;
  const int r = cfg.fov / 2;
  JointObs obs(s.n_agents());
  for (int i = 0; i < s.n_agents(); ++i) {
    AgentObservation& o = obs[i];
    o.agent_class = s.agent_class(i);
    if (cfg.domain == Domain::Fire && o.agent_class == 1) {
      // Action agents: global position + nearest discovered burning fire.
      const Cell f = nearest_discovered_fire(s, s.pos[i]);
      const double maxd = cfg.width + cfg.height - 2;
      o.features = {
          double(s.pos[i].x) / std::max(1, cfg.width - 1),
          double(s.pos[i].y) / std::max(1, cfg.height - 1),
          f.x >= 0 ? double(f.x - s.pos[i].x) / cfg.width : 0.0,
          f.y >= 0 ? double(f.y - s.pos[i].y) / cfg.height : 0.0,
          f.x >= 0 ? manhattan(s.pos[i], f) / maxd : 1.0,
          f.x >= 0 ? 1.0 : 0.0,
      };
      continue;
    }
    const int patch = cfg.fov * cfg.fov;
    const int channels = cfg.domain == Domain::Marine ? 4 : 3;
    o.features.assign(channels * patch + (cfg.domain == Domain::Marine ? 1 : 0),
                      0.0);
    int p = 0;
    for (int dy = -r; dy <= r; ++dy)
      for (int dx = -r; dx <= r; ++dx, ++p) {
        const Cell c{s.pos[i].x + dx, s.pos[i].y + dy};
        if (!s.in_bounds(c)) continue;
        const int idx = s.cell_index(c);
        if (cfg.domain == Domain::Marine) {
          o.features[p] = s.wave[idx];
          for (int j = 0; j < s.n_agents(); ++j)
            if (j != i && s.pos[j] == c)
              o.features[(1 + s.agent_class(j)) * patch + p] = 1.0;
          for (const auto& d : s.destinations)
            if (d == c) o.features[3 * patch + p] = 1.0;
        } else {
          if (s.fire[idx] == FireState::Burning) o.features[p] = 1.0;
          for (int j = 0; j < s.n_agents(); ++j)
            if (j != i && s.pos[j] == c) o.features[patch + p] = 1.0;
          o.features[2 * patch + p] = binary_entropy(s.fire_prob[idx]);
        }
      }
    if (cfg.domain == Domain::Marine)
      o.features[4 * patch] =
          o.agent_class == 0 ? s.fuel[i] / cfg.initial_fuel : 1.0;
  }
  return obs;
}

Tensor global_observe(const WorldState& s) {
  const auto& cfg = s.config;
  std::vector<double> rows;
  const double maxd = cfg.width + cfg.height - 2;
  const auto areas = cfg.domain == Domain::Fire
                         ? subareas(cfg)
                         : std::vector<Subarea>{};
  int total_rows = 0;
  for (int i = 0; i < s.n_agents(); ++i)
    total_rows += num_targets(cfg, s.agent_class(i));
  rows.reserve(total_rows * kFeatureDim);

  for (int i = 0; i < s.n_agents(); ++i) {
    const int cls = s.agent_class(i);
    const int nt = num_targets(cfg, cls);
    const auto cells = target_cells(s, i);
    for (int t = 0; t < nt; ++t) {
      const Cell tc = cells[t];
      double f5 = 0.0, f6 = 0.0, f7 = 0.0, f8 = 0.0, f9 = 0.0;
      double kind = 0.0;
      if (cfg.domain == Domain::Marine) {
        if (cls == 0) {
          kind = t < cfg.n_type2 ? 0.0 : 0.5;  // logistic vs destination
          f5 = s.fuel[i] / cfg.initial_fuel;
        } else {
          kind = 1.0;  // routing target
          f5 = s.fuel[t] / cfg.initial_fuel;
        }
        f6 = s.wave[s.cell_index(s.pos[i])];
        f7 = s.wave[s.cell_index(tc)];
      } else {
        kind = 0.0;
        f5 = discovered_fire_density(s, areas[t]);
        f6 = mean_entropy(s, areas[t]);
        f7 = manhattan(s.pos[i], areas[t].center()) / maxd;
      }
      f8 = double(tc.x - s.pos[i].x) / cfg.width;
      f9 = double(tc.y - s.pos[i].y) / cfg.height;
      rows.insert(rows.end(),
                  {double(i) / s.n_agents(), double(cls),
                   nt > 1 ? double(t) / (nt - 1) : 0.0, kind,
                   manhattan(s.pos[i], tc) / maxd, f5, f6, f7, f8, f9});
    }
  }
  return Tensor::matrix(total_rows, kFeatureDim, std::move(rows));
}

int feature_row_offset(const WorldState& s, int agent) {
  int off = 0;
  for (int i = 0; i < agent; ++i)
    off += num_targets(s.config, s.agent_class(i));
  return off;
}

std::string snapshot(const WorldState& s) {
  Writer w;
  w.pod(s.config);
  w.pod(s.step);
  w.pod(s.terminated);
  w.pod(s.succeeded);
  w.vec(s.pos);
  w.vec(s.fuel);
  w.vec(s.destinations);
  {
    std::vector<std::uint8_t> arrived(s.arrived.begin(), s.arrived.end());
    w.vec(arrived);
  }
  w.vec(s.wave);
  w.vec(s.wave_noise);
  w.vec(s.wave_components);
  w.vec(s.fire);
  w.vec(s.discovered);
  w.vec(s.fire_prob);
  w.pod(s.wind_dx);
  w.pod(s.wind_dy);
  w.pod(s.rng.raw_state());
  const std::uint64_t sum = fnv1a(w.out);
  std::string token = "HSNP1";
  token.append(reinterpret_cast<const char*>(&sum), sizeof(sum));
  token += w.out;
  return token;
}

WorldState restore(const std::string& token) {
  if (token.size() < 13 || token.compare(0, 5, "HSNP1") != 0)
    throw std::runtime_error("restore: not a snapshot token");
  std::uint64_t sum = 0;
  std::memcpy(&sum, token.data() + 5, sizeof(sum));
  const std::string body = token.substr(13);
  if (fnv1a(body) != sum)
    throw std::runtime_error("restore: snapshot token corrupted");
  Reader r{body};
  WorldState s;
  r.pod(s.config);
  r.pod(s.step);
  r.pod(s.terminated);
  r.pod(s.succeeded);
  r.vec(s.pos);
  r.vec(s.fuel);
  r.vec(s.destinations);
  {
    std::vector<std::uint8_t> arrived;
    r.vec(arrived);
    s.arrived.assign(arrived.begin(), arrived.end());
  }
  r.vec(s.wave);
  r.vec(s.wave_noise);
  r.vec(s.wave_components);
  r.vec(s.fire);
  r.vec(s.discovered);
  r.vec(s.fire_prob);
  r.pod(s.wind_dx);
  r.pod(s.wind_dy);
  std::array<std::uint64_t, 4> raw;
  r.pod(raw);
  s.rng.set_raw_state(raw);
  return s;
}

std::string render(const WorldState& s) {
  const auto& cfg = s.config;
  std::ostringstream out;
  for (int y = 0; y < cfg.height; ++y) {
    for (int x = 0; x < cfg.width; ++x) {
      char c = '.';
      if (cfg.domain == Domain::Marine) {
        for (const auto& d : s.destinations)
          if (d == Cell{x, y}) c = 'D';
      } else {
        const int idx = y * cfg.width + x;
        if (s.fire[idx] == FireState::Burning)
          c = s.discovered[idx] ? 'F' : 'f';
        else if (s.fire[idx] == FireState::Extinguished)
          c = 'x';
      }
      for (int i = 0; i < s.n_agents(); ++i)
        if (s.pos[i] == Cell{x, y}) c = s.agent_class(i) == 0 ? 'R' : 'L';
      out << c;
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace hint::env
