// Command-line driver: teacher pretraining, the interactive-distillation
// loop, evaluation, the ablation grid, state-distribution diagnostics, and
// dataset inspection.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "hint/orchestrator.hpp"

namespace fs = std::filesystem;
namespace orch = hint::orchestrator;
using nlohmann::json;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string preset;
  std::string out = "run";
  bool paper_scale = false;
  long long seed = -1;
  int workers = 0;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "configuration file (JSON)");
  cmd->add_option("--preset", o.preset,
                  "scenario preset (marine|fc × easy|medium|hard) used when "
                  "no config file is given");
  cmd->add_option("--out", o.out, "run directory; all outputs land here")
      ->required();
  cmd->add_flag("--paper-scale", o.paper_scale,
                "use full table budgets instead of the 10% desk scale");
  cmd->add_option("--seed", o.seed, "override the configured seed");
  cmd->add_option("--workers", o.workers,
                  "override the worker count (also: HINT_WORKERS)");
}

orch::HintConfig resolve_config(const CommonOpts& o) {
  orch::HintConfig cfg;
  if (!o.config_path.empty())
    cfg = orch::load_config(o.config_path);
  else if (!o.preset.empty())
    cfg = orch::default_config(o.preset, o.paper_scale);
  else
    throw std::runtime_error("either --config or --preset is required");
  if (o.seed >= 0) cfg.seed = std::uint64_t(o.seed);
  if (o.workers > 0) cfg.workers = o.workers;
  if (const char* env = std::getenv("HINT_WORKERS")) {
    const int w = std::atoi(env);
    if (w > 0) cfg.workers = w;
  }
  return cfg;
}

json report_json(const hint::metrics::EvalReport& rep) {
  json j;
  j["success_rate"] = rep.success_rate;
  j["steps_taken"] = rep.steps_taken;
  j["episodes_per_seed"] = rep.episodes;
  json per = json::array();
  for (const auto& s : rep.per_seed)
    per.push_back({{"seed", s.seed},
                   {"success_rate", s.success_rate},
                   {"steps_taken", s.steps_taken}});
  j["per_seed"] = per;
  return j;
}

int cmd_pretrain(const CommonOpts& o) {
  auto cfg = resolve_config(o);
  fs::create_directories(o.out);
  const std::string dir =
      cfg.teacher_dir.empty() ? o.out + "/teacher" : cfg.teacher_dir;
  auto p = orch::pretrain_and_save(cfg, dir);
  auto rep = orch::eval_teacher(cfg, p);
  json j;
  j["teacher_dir"] = dir;
  j["eval"] = report_json(rep);
  std::cout << j.dump(2) << std::endl;
  return 0;
}

int cmd_train(const CommonOpts& o) {
  auto cfg = resolve_config(o);
  auto man = orch::train_hint(cfg, o.out);
  json j;
  j["epochs"] = man.epochs.size();
  j["config_hash"] = man.config_hash;
  if (!man.epochs.empty()) {
    j["timesteps"] = man.epochs.back().cumulative_steps;
    j["final_success_rate"] = man.epochs.back().row.success_rate;
  }
  j["manifest"] = o.out + "/manifest.json";
  j["curve"] = o.out + "/curve.csv";
  std::cout << j.dump(2) << std::endl;
  return 0;
}

int cmd_eval(const CommonOpts& o, int episodes, int n_seeds,
             const std::string& policy) {
  auto cfg = resolve_config(o);
  if (episodes > 0) cfg.eval_episodes = episodes;
  if (n_seeds > 0) {
    cfg.eval_seeds.clear();
    for (int s = 0; s < n_seeds; ++s) cfg.eval_seeds.push_back(s);
  }
  hint::metrics::EvalReport rep;
  if (policy == "student") {
    rep = orch::eval_student(cfg, orch::load_student(o.out));
  } else if (policy == "teacher") {
    const std::string dir =
        cfg.teacher_dir.empty() ? o.out + "/teacher" : cfg.teacher_dir;
    auto p = orch::load_teacher(dir);
    rep = orch::eval_teacher(cfg, p);
  } else {
    throw std::runtime_error("unknown --policy: " + policy);
  }
  json j = report_json(rep);
  j["policy"] = policy;
  std::cout << j.dump(2) << std::endl;
  std::ofstream(o.out + "/eval_" + policy + ".json") << j.dump(2) << '\n';
  return 0;
}

int cmd_ablate(const CommonOpts& o) {
  auto base = resolve_config(o);
  fs::create_directories(o.out);
  const std::string teacher_dir =
      base.teacher_dir.empty() ? o.out + "/teacher" : base.teacher_dir;
  if (!fs::exists(teacher_dir + "/high.ckpt")) {
    std::cerr << "pretraining teacher into " << teacher_dir << "...\n";
    orch::pretrain_and_save(base, teacher_dir);
  }
  struct Variant {
    const char* name;
    bool filter, pseudo;
  };
  const Variant grid[] = {{"full", true, true},
                          {"no-filter", false, true},
                          {"no-pseudo", true, false},
                          {"neither", false, false}};
  json summary;
  for (const auto& v : grid) {
    auto cfg = base;
    cfg.use_filter = v.filter;
    cfg.use_pseudo_rl = v.pseudo;
    cfg.teacher_dir = teacher_dir;
    const std::string sub = o.out + "/" + v.name;
    auto man = orch::train_hint(cfg, sub);
    fs::copy_file(sub + "/curve.csv", o.out + "/" + v.name + ".csv",
                  fs::copy_options::overwrite_existing);
    summary[v.name] = {
        {"epochs", man.epochs.size()},
        {"final_success_rate",
         man.epochs.empty() ? 0.0 : man.epochs.back().row.success_rate},
        {"curve", o.out + "/" + v.name + ".csv"}};
  }
  std::cout << summary.dump(2) << std::endl;
  std::ofstream(o.out + "/ablate.json") << summary.dump(2) << '\n';
  return 0;
}

int cmd_diagnose(const CommonOpts& o, int states, int bins) {
  auto cfg = resolve_config(o);
  const auto ec = hint::env::preset(cfg.preset, cfg.seed);
  auto sc = cfg.student;
  sc.comm = hint::student::comm_mode_from_name(cfg.comm_mode);
  const std::string teacher_dir =
      cfg.teacher_dir.empty() ? o.out + "/teacher" : cfg.teacher_dir;
  auto tp = orch::load_teacher(teacher_dir);
  auto phi = orch::load_student(o.out);

  auto teacher_states = hint::metrics::collect_state_samples(
      [&] {
        return std::make_unique<hint::teacher::TeacherPolicy>(tp,
                                                              cfg.pretrain.k);
      },
      ec, states, cfg.seed);
  auto student_states = hint::metrics::collect_state_samples(
      [&] {
        return std::make_unique<hint::student::StudentPolicy>(phi, sc, ec);
      },
      ec, states, cfg.seed + 1);
  auto proj = hint::metrics::pca_project(teacher_states, student_states, 2);
  const double kl =
      hint::metrics::histogram_kl(proj.teacher, proj.student, bins);

  json j;
  j["kl"] = kl;
  j["direction"] = "student||teacher";
  j["bins"] = bins;
  j["states_per_policy"] = states;
  j["explained_variance"] = proj.basis.explained_variance;
  j["rank_deficient"] = proj.basis.rank_deficient;
  std::cout << j.dump(2) << std::endl;
  std::ofstream(o.out + "/diagnose.json") << j.dump(2) << '\n';
  return 0;
}

int cmd_inspect(const CommonOpts& o, std::string dataset_path) {
  auto cfg = resolve_config(o);
  if (dataset_path.empty()) {
    auto man = orch::load_manifest(o.out + "/manifest.json");
    if (man.epochs.empty())
      throw std::runtime_error("run has no recorded epochs: " + o.out);
    dataset_path =
        o.out + "/" + man.epochs.back().checkpoints.at("dataset");
  }
  auto ds = hint::dagger::AggregatedDataset::load(dataset_path,
                                                  cfg.dataset_budget);
  std::size_t steps = 0, accepted = 0;
  auto count = [&](const hint::distill::Trajectory& tr) {
    steps += tr.steps.size();
    accepted += tr.accepted_count();
  };
  for (const auto& tr : ds.initial()) count(tr);
  for (const auto& tr : ds.recent()) count(tr);
  json j;
  j["dataset"] = dataset_path;
  j["trajectories"] = ds.size();
  j["initial"] = ds.initial().size();
  j["recent"] = ds.recent().size();
  j["budget"] = ds.budget();
  j["steps"] = steps;
  j["accepted_pairs"] = accepted;
  j["mean_length"] = ds.size() ? double(steps) / double(ds.size()) : 0.0;
  std::cout << j.dump(2) << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "hint: hierarchical teacher pretraining and interactive distillation "
      "of decentralized students"};
  app.require_subcommand(1);

  CommonOpts pre_o, train_o, eval_o, abl_o, diag_o, insp_o;
  int eval_episodes = 0, eval_seed_count = 0;
  std::string eval_policy = "student";
  int diag_states = 2000, diag_bins = 50;
  std::string inspect_path;

  add_common(app.add_subcommand("pretrain-teacher",
                                "train both teacher stages and checkpoint"),
             pre_o);
  add_common(
      app.add_subcommand("train", "run the interactive-distillation loop"),
      train_o);
  auto* ev = app.add_subcommand("eval", "evaluate a checkpointed policy");
  add_common(ev, eval_o);
  ev->add_option("--episodes", eval_episodes, "episodes per seed");
  ev->add_option("--seeds", eval_seed_count, "number of evaluation seeds");
  ev->add_option("--policy", eval_policy, "student (default) or teacher");
  add_common(app.add_subcommand(
                 "ablate", "run the 4-variant switch grid, one CSV each"),
             abl_o);
  auto* dg = app.add_subcommand(
      "diagnose", "teacher/student state-distribution divergence");
  add_common(dg, diag_o);
  dg->add_option("--states", diag_states, "states sampled per policy");
  dg->add_option("--bins", diag_bins, "histogram bins per axis");
  auto* in = app.add_subcommand("inspect-dataset",
                                "summarize an aggregated demonstration set");
  add_common(in, insp_o);
  in->add_option("--dataset", inspect_path,
                 "dataset file (default: the run's latest)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("pretrain-teacher")) return cmd_pretrain(pre_o);
    if (app.got_subcommand("train")) return cmd_train(train_o);
    if (app.got_subcommand("eval"))
      return cmd_eval(eval_o, eval_episodes, eval_seed_count, eval_policy);
    if (app.got_subcommand("ablate")) return cmd_ablate(abl_o);
    if (app.got_subcommand("diagnose"))
      return cmd_diagnose(diag_o, diag_states, diag_bins);
    if (app.got_subcommand("inspect-dataset"))
      return cmd_inspect(insp_o, inspect_path);
  } catch (const std::exception& e) {
    json err;
    err["error"] = e.what();
    std::cerr << err.dump() << std::endl;
    return 1;
  }
  return 0;
}
