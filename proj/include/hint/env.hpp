#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hint/rng.hpp"
#include "hint/tensor.hpp"

namespace hint::env {

enum class Domain { Marine, Fire };

// Class 0 is routing (Marine) / perception (Fire); class 1 is logistic /
// action. Fire action agents have the extra Extinguish action.
enum Action : int { Up = 0, Down = 1, Left = 2, Right = 3, Stay = 4,
                    Extinguish = 5 };

struct EnvConfig {
  Domain domain = Domain::Marine;
  int width = 5;
  int height = 5;
  int fov = 3;                  // odd, >= 3
  int n_type1 = 2;              // routing / perception agents
  int n_type2 = 1;              // logistic / action agents
  int n_targets = 1;            // destinations / initial fires
  int max_steps = 50;
  double initial_fuel = 5.0;    // Marine only; also the fuel capacity
  int subarea_side = 5;         // Fire only
  std::uint64_t seed = 0;

  // Dynamics knobs. Defaults follow the stochastic models used throughout;
  // tests use the zeroed settings to build exactly enumerable toys.
  double fire_p_base = 0.05;
  double fire_wind_mult = 3.0;
  double wave_amplitude = 1.0;  // 0 -> flat sea, lowest refuel bin everywhere
  bool marine_refuel = true;
};

// Named presets: marine-easy|medium|hard, fc-easy|medium|hard.
EnvConfig preset(const std::string& name, std::uint64_t seed = 0);

struct Cell {
  int x = 0;
  int y = 0;
  bool operator==(const Cell&) const = default;
};

enum class FireState : std::uint8_t { None = 0, Burning = 1,
                                      Extinguished = 2 };

struct WorldState {
  EnvConfig config;
  int step = 0;
  bool terminated = false;
  bool succeeded = false;
  std::vector<Cell> pos;               // one per agent, class 0 first

  // Marine
  std::vector<double> fuel;            // per routing agent
  std::vector<Cell> destinations;
  std::vector<bool> arrived;           // arrival-bonus bookkeeping
  std::vector<double> wave;            // width*height heights in [0,1]
  std::vector<double> wave_noise;      // AR(1) component per cell
  struct WaveComponent { double kx, ky, omega, phase, amp; };
  std::vector<WaveComponent> wave_components;

  // Fire
  std::vector<FireState> fire;         // width*height
  std::vector<std::uint8_t> discovered;
  std::vector<double> fire_prob;       // belief in [0,1]
  int wind_dx = 0;
  int wind_dy = 0;

  Rng rng;

  int n_agents() const { return config.n_type1 + config.n_type2; }
  int agent_class(int i) const { return i < config.n_type1 ? 0 : 1; }
  int cell_index(Cell c) const { return c.y * config.width + c.x; }
  bool in_bounds(Cell c) const {
    return c.x >= 0 && c.x < config.width && c.y >= 0 && c.y < config.height;
  }
};

struct AgentObservation {
  int agent_class = 0;
  std::vector<double> features;
};

using JointObs = std::vector<AgentObservation>;

struct StepInfo {
  int fires_extinguished = 0;
  double fuel_transferred = 0.0;
  int agents_arrived = 0;
};

struct StepResult {
  JointObs obs;
  std::vector<double> rewards;   // per agent
  bool done = false;
  bool success = false;
  StepInfo info;
};

// Number of discrete actions available to an agent class in a domain.
int n_actions(const EnvConfig& cfg, int agent_class);

// Per-class subgoal target count: Marine class 0 targets logistics +
// destinations, class 1 targets routing agents; Fire targets are subareas
// for both classes.
int num_targets(const EnvConfig& cfg, int agent_class);
int num_subareas(const EnvConfig& cfg);

// Representative cell of each subgoal target for the given agent, in target
// order (Fire: per-class interest point inside each subarea).
std::vector<Cell> target_cells(const WorldState& s, int agent);

std::pair<WorldState, JointObs> reset(const EnvConfig& cfg);
StepResult step(WorldState& s, const std::vector<int>& joint_action);
JointObs observe(const WorldState& s);

// Local observation feature width per class.
int obs_dim(const EnvConfig& cfg, int agent_class);

bool success(const WorldState& s);
bool failure(const WorldState& s);

// Wave height in [0,1] quantized into 4 equal-width bins mapped to refuel
// fractions {0.0, 0.15, 0.30, 0.50} of capacity.
double refuel_fraction(double wave_height);

// Joint feature matrix for the centralized teacher: one row per
// (agent, target) pair, kFeatureDim columns.
inline constexpr std::size_t kFeatureDim = 10;
Tensor global_observe(const WorldState& s);
// Row offset of agent a's first target row inside global_observe(s).
int feature_row_offset(const WorldState& s, int agent);

// Snapshot tokens embed a checksum; restore rejects corrupted tokens.
std::string snapshot(const WorldState& s);
WorldState restore(const std::string& token);

// Text-grid dump for debugging.
std::string render(const WorldState& s);

}  // namespace hint::env
