#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hint/dagger.hpp"
#include "hint/distill.hpp"
#include "hint/env.hpp"
#include "hint/metrics.hpp"
#include "hint/student.hpp"
#include "hint/teacher.hpp"
#include "hint/vtrace.hpp"

namespace hint::orchestrator {

// Full experiment configuration. `default_config` fills every field from the
// per-scenario setup tables; a config file only needs to name the preset and
// override what differs. Budgets default to desk scale (10% of the table
// timesteps); paper_scale restores the table values.
struct HintConfig {
  std::string preset = "fc-easy";
  bool paper_scale = false;

  teacher::PretrainConfig pretrain;   // stage-1/2 teacher budgets
  distill::DistillConfig distill;     // student loss settings
  int kd_passes = 1;                  // dataset passes per epoch
  pseudorl::PseudoConfig pseudo;      // teacher-refinement settings

  int n_query = 20;                   // filtered student episodes per epoch
  std::size_t dataset_budget = 1000;  // total trajectories retained
  int initial_demos = 10;             // teacher episodes seeding the dataset
  int filter_sims = 1;                // lookahead simulations per query
  int accept_min = 1;                 // successes required to accept
  bool demo_greedy = false;           // demonstrate argmax teacher actions
  bool collect_greedy = false;        // roll the student argmax when
                                      // collecting (matches greedy eval)
  double lr_decay = 1.0;              // distill lr multiplier per epoch

  bool use_filter = true;             // off: every query accepted
  bool use_pseudo_rl = true;          // off: teacher frozen after pretraining
  std::string comm_mode = "heterogeneous";

  student::StudentConfig student;

  int workers = 1;
  std::uint64_t seed = 0;
  long timestep_budget = 100000;      // student env steps across all epochs

  int eval_episodes = 50;
  std::vector<std::uint64_t> eval_seeds = {0, 1, 2};
  bool eval_greedy = true;            // argmax student actions at eval time

  std::string teacher_dir;            // pretrained checkpoints; defaults to
                                      // "<out>/teacher" when empty
};

// Table-derived defaults for a named scenario; throws on unknown names.
HintConfig default_config(const std::string& preset, bool paper_scale = false);

// JSON round trip. Loading starts from the named preset's defaults and
// applies only the keys present in the file.
void save_config(const HintConfig& cfg, const std::string& path);
HintConfig load_config(const std::string& path);
HintConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const HintConfig& cfg);

// Stable hex digest of the canonical JSON form.
std::string config_hash(const HintConfig& cfg);

// --- run records -----------------------------------------------------------

struct PhaseRecord {
  std::string name;      // collect / aggregate / distill / refine / eval
  double seconds = 0.0;  // wall clock
};

struct EpochRecord {
  int epoch = 0;
  long cumulative_steps = 0;          // student env steps so far
  metrics::CurveRow row;              // curve entry for this epoch
  int queries = 0;                    // demonstrator queries this epoch
  int rejected = 0;                   // queries the filter rejected
  long refine_steps = 0;              // teacher-refinement env steps
  std::vector<PhaseRecord> phases;    // executed phases, in order
  std::map<std::string, std::string> checkpoints;  // role -> relative path
};

// Append-only run record: epochs are only ever added, never rewritten.
struct RunManifest {
  std::string config_hash;
  std::string preset;
  std::vector<EpochRecord> epochs;
};

void save_manifest(const RunManifest& m, const std::string& path);
RunManifest load_manifest(const std::string& path);

// --- driver ----------------------------------------------------------------

// Trains both teacher stages and writes high/low/value checkpoints plus a
// small manifest into `dir`.
teacher::TeacherParams pretrain_and_save(const HintConfig& cfg,
                                         const std::string& dir);

// Loads the three checkpoints written by pretrain_and_save; a missing file
// aborts with an instruction naming the command to run first.
teacher::TeacherParams load_teacher(const std::string& dir);

// The interactive-distillation epoch loop. Per epoch: collect n_query
// filtered student episodes -> aggregate into the dataset -> kd_passes
// distillation passes -> teacher refinement (skipped when use_pseudo_rl is
// off) -> evaluation. Stops once the student-timestep budget is exhausted.
// Checkpoints, the manifest, and the learning curve land under out_dir; an
// existing manifest with a matching config hash resumes after its last
// recorded epoch.
RunManifest train_hint(const HintConfig& cfg, const std::string& out_dir);

// Loads the student checkpoint of the last recorded epoch of a run.
ParamSet load_student(const std::string& out_dir);

// Evaluation helpers over checkpointed policies.
metrics::EvalReport eval_student(const HintConfig& cfg, const ParamSet& phi);
metrics::EvalReport eval_teacher(const HintConfig& cfg,
                                 const teacher::TeacherParams& p,
                                 bool greedy = false);

}  // namespace hint::orchestrator
