#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "hint/orchestrator.hpp"

using namespace hint;
namespace orch = hint::orchestrator;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Small budgets: the loop mechanics are under test, not policy quality.
orch::HintConfig tiny_config() {
  auto c = orch::default_config("fc-easy");
  c.pretrain.low_timesteps = 3000;
  c.pretrain.high_timesteps = 2000;
  c.pretrain.workers_high = 2;
  c.pretrain.workers_low = 2;
  c.n_query = 2;
  c.initial_demos = 2;
  c.dataset_budget = 20;
  c.distill.capacity = 10;
  c.kd_passes = 1;
  c.pseudo.n = 40;
  c.pseudo.n_pseudo = 2;
  c.eval_episodes = 4;
  c.eval_seeds = {0};
  c.workers = 1;
  c.seed = 3;
  c.timestep_budget = 180;
  return c;
}

// One shared pretrained teacher for every loop test.
const std::string& shared_teacher_dir() {
  static std::string dir = [] {
    const std::string d = "/tmp/hint_orch_teacher";
    fs::remove_all(d);
    orch::pretrain_and_save(tiny_config(), d);
    return d;
  }();
  return dir;
}

std::string fresh_dir(const std::string& name) {
  const std::string d = "/tmp/hint_orch_" + name;
  fs::remove_all(d);
  return d;
}

int phase_index(const orch::EpochRecord& e, const std::string& name) {
  for (std::size_t i = 0; i < e.phases.size(); ++i)
    if (e.phases[i].name == name) return int(i);
  return -1;
}

}  // namespace

TEST_CASE("preset defaults follow the scenario tables") {
  struct Expect {
    const char* name;
    int n_query, n_pseudo, k;
    std::size_t dataset;
    long paper_ts;
  };
  const Expect table[] = {
      {"fc-easy", 20, 10, 1, 1000, 10000000},
      {"fc-medium", 50, 20, 3, 2000, 20000000},
      {"fc-hard", 100, 40, 5, 4000, 70000000},
      {"marine-easy", 20, 10, 1, 2000, 10000000},
      {"marine-medium", 100, 150, 3, 3000, 20000000},
      {"marine-hard", 200, 600, 5, 6000, 100000000},
  };
  for (const auto& e : table) {
    auto desk = orch::default_config(e.name);
    auto paper = orch::default_config(e.name, true);
    CHECK(desk.n_query == e.n_query);
    CHECK(desk.pseudo.n_pseudo == e.n_pseudo);
    CHECK(desk.pretrain.k == e.k);
    CHECK(desk.pseudo.k == e.k);
    CHECK(desk.dataset_budget == e.dataset);
    CHECK(paper.timestep_budget == e.paper_ts);
    CHECK(desk.timestep_budget == e.paper_ts / 10);
    CHECK(desk.pretrain.high_timesteps ==
          paper.pretrain.high_timesteps / 10);
    CHECK(desk.pretrain.low_timesteps == paper.pretrain.low_timesteps / 10);
    CHECK(desk.pseudo.n == 200);
    CHECK(desk.distill.alpha == 0.01);
    CHECK(desk.distill.lr == 1e-4);
    CHECK(desk.eval_episodes == 50);
    CHECK(desk.eval_seeds.size() == 3);
  }
  CHECK_THROWS_AS(orch::default_config("fc-impossible"),
                  std::invalid_argument);
}

TEST_CASE("configs round-trip through JSON and hash stably") {
  auto c = tiny_config();
  c.use_filter = false;
  c.comm_mode = "none";
  const std::string text = orch::config_to_json_text(c);
  auto back = orch::config_from_json_text(text);
  CHECK(orch::config_to_json_text(back) == text);
  CHECK(orch::config_hash(back) == orch::config_hash(c));

  // a sparse file naming only the preset yields the defaults
  auto sparse = orch::config_from_json_text("{\"preset\": \"fc-medium\"}");
  CHECK(orch::config_to_json_text(sparse) ==
        orch::config_to_json_text(orch::default_config("fc-medium")));

  // any substantive change moves the hash
  auto c2 = c;
  c2.seed += 1;
  CHECK(orch::config_hash(c2) != orch::config_hash(c));

  CHECK_THROWS(orch::config_from_json_text("{\"preset\": \"nope\"}"));
  CHECK_THROWS(orch::config_from_json_text("{}"));
  CHECK_THROWS(orch::config_from_json_text(
      "{\"preset\": \"fc-easy\", \"n_query\": 0}"));
  CHECK_THROWS(orch::config_from_json_text(
      "{\"preset\": \"fc-easy\", \"comm_mode\": \"telepathy\"}"));

  const std::string path = "/tmp/hint_orch_cfg.json";
  orch::save_config(c, path);
  auto loaded = orch::load_config(path);
  CHECK(orch::config_to_json_text(loaded) == text);
  CHECK_THROWS_AS(orch::load_config("/tmp/definitely_missing_cfg.json"),
                  std::runtime_error);
}

TEST_CASE("training without a pretrained teacher aborts with an instruction") {
  auto c = tiny_config();
  c.teacher_dir = "/tmp/hint_orch_no_teacher_here";
  const std::string out = fresh_dir("no_teacher");
  try {
    orch::train_hint(c, out);
    FAIL("expected a missing-checkpoint error");
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("pretrain-teacher") != std::string::npos);
  }
}

TEST_CASE("the epoch loop runs, checkpoints, and orders its phases") {
  auto c = tiny_config();
  c.teacher_dir = shared_teacher_dir();
  const std::string out = fresh_dir("loop");
  auto man = orch::train_hint(c, out);

  CHECK(man.config_hash == orch::config_hash(c));
  CHECK(man.preset == "fc-easy");
  REQUIRE(man.epochs.size() >= 2);
  CHECK(man.epochs.back().cumulative_steps >= c.timestep_budget);

  long prev_steps = 0;
  for (std::size_t i = 0; i < man.epochs.size(); ++i) {
    const auto& e = man.epochs[i];
    CHECK(e.epoch == int(i) + 1);
    CHECK(e.cumulative_steps > prev_steps);
    prev_steps = e.cumulative_steps;
    CHECK(e.row.timestep == e.cumulative_steps);
    CHECK(e.queries > 0);
    CHECK(e.rejected >= 0);
    CHECK(e.rejected <= e.queries);
    CHECK(e.refine_steps > 0);

    const int collect = phase_index(e, "collect");
    const int aggregate = phase_index(e, "aggregate");
    const int distill = phase_index(e, "distill");
    const int refine = phase_index(e, "refine");
    const int eval = phase_index(e, "eval");
    REQUIRE(collect >= 0);
    CHECK(collect < aggregate);
    CHECK(aggregate < distill);
    CHECK(distill < refine);
    CHECK(refine < eval);

    for (const auto& [role, rel] : e.checkpoints)
      CHECK(fs::exists(out + "/" + rel));
  }

  // the persisted manifest and curve agree with the returned record
  auto disk = orch::load_manifest(out + "/manifest.json");
  REQUIRE(disk.epochs.size() == man.epochs.size());
  auto rows = metrics::read_curve_csv(out + "/curve.csv");
  REQUIRE(rows.size() == man.epochs.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].timestep == man.epochs[i].row.timestep);
    CHECK(rows[i].success_rate ==
          doctest::Approx(man.epochs[i].row.success_rate));
    CHECK(disk.epochs[i].queries == man.epochs[i].queries);
  }

  // the last student checkpoint is loadable through the manifest
  auto phi = orch::load_student(out);
  CHECK(phi.role() == ParamSet::Role::Student);
}

TEST_CASE("single-worker runs with one config and seed are identical") {
  auto c = tiny_config();
  c.teacher_dir = shared_teacher_dir();
  const std::string out1 = fresh_dir("det1");
  const std::string out2 = fresh_dir("det2");
  auto m1 = orch::train_hint(c, out1);
  auto m2 = orch::train_hint(c, out2);

  REQUIRE(m1.epochs.size() == m2.epochs.size());
  for (std::size_t i = 0; i < m1.epochs.size(); ++i) {
    const auto &a = m1.epochs[i], &b = m2.epochs[i];
    CHECK(a.cumulative_steps == b.cumulative_steps);
    CHECK(a.queries == b.queries);
    CHECK(a.rejected == b.rejected);
    CHECK(a.refine_steps == b.refine_steps);
    CHECK(a.row.success_rate == b.row.success_rate);
    CHECK(a.row.steps_taken == b.row.steps_taken);
    CHECK(a.row.teacher_success_rate == b.row.teacher_success_rate);
    for (const auto& [role, rel] : a.checkpoints)
      CHECK(slurp(out1 + "/" + rel) == slurp(out2 + "/" + rel));
  }
}

TEST_CASE("disabling teacher refinement freezes the teacher bit for bit") {
  auto c = tiny_config();
  c.teacher_dir = shared_teacher_dir();
  c.use_pseudo_rl = false;
  const std::string out = fresh_dir("no_pseudo");
  auto man = orch::train_hint(c, out);
  REQUIRE(man.epochs.size() >= 2);

  const std::string pretrained = slurp(shared_teacher_dir() + "/high.ckpt");
  for (const auto& e : man.epochs) {
    CHECK(phase_index(e, "refine") == -1);
    CHECK(e.refine_steps == 0);
    CHECK(slurp(out + "/" + e.checkpoints.at("teacher_high")) == pretrained);
    CHECK(slurp(out + "/" + e.checkpoints.at("teacher_value")) ==
          slurp(shared_teacher_dir() + "/value.ckpt"));
  }
}

TEST_CASE("with both switches off the loop degrades to plain aggregation") {
  auto c = tiny_config();
  c.teacher_dir = shared_teacher_dir();
  c.use_filter = false;
  c.use_pseudo_rl = false;
  const std::string out = fresh_dir("neither");
  auto man = orch::train_hint(c, out);
  REQUIRE(!man.epochs.empty());
  for (const auto& e : man.epochs) {
    CHECK(e.rejected == 0);  // every query accepted unvalidated
    CHECK(e.row.suboptimal_demo_rate == 0.0);
    CHECK(phase_index(e, "refine") == -1);
  }
}

TEST_CASE("a run resumes cleanly from its last recorded epoch") {
  auto c = tiny_config();
  c.teacher_dir = shared_teacher_dir();
  c.timestep_budget = 380;  // four epochs' worth
  const std::string out = fresh_dir("resume");
  auto full = orch::train_hint(c, out);
  REQUIRE(full.epochs.size() >= 3);

  // simulate an interruption after the second epoch: drop later epochs
  // from the manifest and delete their checkpoint directories
  auto truncated = full;
  truncated.epochs.resize(2);
  orch::save_manifest(truncated, out + "/manifest.json");
  for (std::size_t i = 2; i < full.epochs.size(); ++i)
    fs::remove_all(out + "/" +
                   fs::path(full.epochs[i].checkpoints.at("student"))
                       .parent_path()
                       .string());

  auto resumed = orch::train_hint(c, out);
  REQUIRE(resumed.epochs.size() >= full.epochs.size());
  // prior records are untouched and numbering continues without gaps
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(resumed.epochs[i].cumulative_steps ==
          full.epochs[i].cumulative_steps);
    CHECK(resumed.epochs[i].row.success_rate ==
          full.epochs[i].row.success_rate);
  }
  for (std::size_t i = 0; i < resumed.epochs.size(); ++i)
    CHECK(resumed.epochs[i].epoch == int(i) + 1);
  CHECK(resumed.epochs.back().cumulative_steps >= c.timestep_budget);
  for (const auto& [role, rel] : resumed.epochs.back().checkpoints)
    CHECK(fs::exists(out + "/" + rel));

  // a different configuration refuses to continue into the same directory
  auto other = c;
  other.seed += 99;
  CHECK_THROWS_AS(orch::train_hint(other, out), std::runtime_error);
}
