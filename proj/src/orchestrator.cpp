#include "hint/orchestrator.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace fs = std::filesystem;
using nlohmann::json;

namespace hint::orchestrator {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0,
                  std::uint64_t d = 0) {
  return splitmix(splitmix(splitmix(splitmix(a) ^ b) ^ c) ^ d);
}

// phase salts for seed derivation
constexpr std::uint64_t kInitSalt = 0x101;
constexpr std::uint64_t kDemoSalt = 0x202;
constexpr std::uint64_t kCollectSalt = 0x303;
constexpr std::uint64_t kDistillSalt = 0x404;
constexpr std::uint64_t kRefineSalt = 0x505;

struct PresetRow {
  long student_ts;      // total student env steps
  int n_query;          // expert-query episodes per epoch
  int n_pseudo;         // teacher-training episodes per epoch
  std::size_t dataset;  // trajectories retained
  int k;                // coordinator refresh interval
  long high_ts;         // pretraining budget, coordinator stage
  long low_ts;          // pretraining budget, executor stage
};

const std::map<std::string, PresetRow>& preset_rows() {
  static const std::map<std::string, PresetRow> rows = {
      {"marine-easy", {10000000, 20, 10, 2000, 1, 8000000, 1000000}},
      {"marine-medium", {20000000, 100, 150, 3000, 3, 10000000, 5000000}},
      {"marine-hard", {100000000, 200, 600, 6000, 5, 34000000, 6000000}},
      {"fc-easy", {10000000, 20, 10, 1000, 1, 2500000, 1500000}},
      {"fc-medium", {20000000, 50, 20, 2000, 3, 3000000, 5000000}},
      {"fc-hard", {70000000, 100, 40, 4000, 5, 5000000, 13000000}},
  };
  return rows;
}

}  // namespace

HintConfig default_config(const std::string& preset, bool paper_scale) {
  auto it = preset_rows().find(preset);
  if (it == preset_rows().end())
    throw std::invalid_argument("unknown preset: " + preset);
  const PresetRow& row = it->second;
  const long scale = paper_scale ? 1 : 10;  // desk scale: 10% of the tables

  HintConfig cfg;
  cfg.preset = preset;
  cfg.paper_scale = paper_scale;
  cfg.timestep_budget = row.student_ts / scale;
  cfg.n_query = row.n_query;
  cfg.dataset_budget = row.dataset;
  cfg.pseudo.n_pseudo = row.n_pseudo;
  cfg.pseudo.k = row.k;

  cfg.pretrain.preset = preset;
  cfg.pretrain.k = row.k;
  cfg.pretrain.high_timesteps = row.high_ts / scale;
  cfg.pretrain.low_timesteps = row.low_ts / scale;
  return cfg;
}

// --- JSON ------------------------------------------------------------------

std::string config_to_json_text(const HintConfig& c) {
  json j;
  j["preset"] = c.preset;
  j["paper_scale"] = c.paper_scale;
  j["pretrain"] = {{"k", c.pretrain.k},
                   {"gamma", c.pretrain.gamma},
                   {"lr", c.pretrain.lr},
                   {"entropy_coef", c.pretrain.entropy_coef},
                   {"workers_high", c.pretrain.workers_high},
                   {"workers_low", c.pretrain.workers_low},
                   {"low_timesteps", c.pretrain.low_timesteps},
                   {"high_timesteps", c.pretrain.high_timesteps},
                   {"rollout_len", c.pretrain.rollout_len}};
  j["distill"] = {{"alpha", c.distill.alpha},
                  {"lr", c.distill.lr},
                  {"capacity", c.distill.capacity},
                  {"entropy_sign", c.distill.entropy_sign}};
  j["kd_passes"] = c.kd_passes;
  j["pseudo"] = {{"n", c.pseudo.n},
                 {"gamma", c.pseudo.gamma},
                 {"n_pseudo", c.pseudo.n_pseudo},
                 {"lr_value", c.pseudo.lr_value},
                 {"lr_policy", c.pseudo.lr_policy},
                 {"k", c.pseudo.k}};
  j["n_query"] = c.n_query;
  j["dataset_budget"] = c.dataset_budget;
  j["initial_demos"] = c.initial_demos;
  j["filter_sims"] = c.filter_sims;
  j["accept_min"] = c.accept_min;
  j["demo_greedy"] = c.demo_greedy;
  j["collect_greedy"] = c.collect_greedy;
  j["lr_decay"] = c.lr_decay;
  j["use_filter"] = c.use_filter;
  j["use_pseudo_rl"] = c.use_pseudo_rl;
  j["comm_mode"] = c.comm_mode;
  j["student"] = {{"hidden", c.student.hidden}, {"message", c.student.message}};
  j["workers"] = c.workers;
  j["seed"] = c.seed;
  j["timestep_budget"] = c.timestep_budget;
  j["eval_episodes"] = c.eval_episodes;
  j["eval_seeds"] = c.eval_seeds;
  j["eval_greedy"] = c.eval_greedy;
  j["teacher_dir"] = c.teacher_dir;
  return j.dump(2);
}

HintConfig config_from_json_text(const std::string& text) {
  json j = json::parse(text);
  if (!j.contains("preset"))
    throw std::invalid_argument("config: missing required key 'preset'");
  HintConfig c = default_config(j["preset"].get<std::string>(),
                                j.value("paper_scale", false));
  if (j.contains("pretrain")) {
    const json& p = j["pretrain"];
    c.pretrain.k = p.value("k", c.pretrain.k);
    c.pretrain.gamma = p.value("gamma", c.pretrain.gamma);
    c.pretrain.lr = p.value("lr", c.pretrain.lr);
    c.pretrain.entropy_coef = p.value("entropy_coef", c.pretrain.entropy_coef);
    c.pretrain.workers_high = p.value("workers_high", c.pretrain.workers_high);
    c.pretrain.workers_low = p.value("workers_low", c.pretrain.workers_low);
    c.pretrain.low_timesteps =
        p.value("low_timesteps", c.pretrain.low_timesteps);
    c.pretrain.high_timesteps =
        p.value("high_timesteps", c.pretrain.high_timesteps);
    c.pretrain.rollout_len = p.value("rollout_len", c.pretrain.rollout_len);
  }
  if (j.contains("distill")) {
    const json& p = j["distill"];
    c.distill.alpha = p.value("alpha", c.distill.alpha);
    c.distill.lr = p.value("lr", c.distill.lr);
    c.distill.capacity = p.value("capacity", c.distill.capacity);
    c.distill.entropy_sign = p.value("entropy_sign", c.distill.entropy_sign);
  }
  c.kd_passes = j.value("kd_passes", c.kd_passes);
  if (j.contains("pseudo")) {
    const json& p = j["pseudo"];
    c.pseudo.n = p.value("n", c.pseudo.n);
    c.pseudo.gamma = p.value("gamma", c.pseudo.gamma);
    c.pseudo.n_pseudo = p.value("n_pseudo", c.pseudo.n_pseudo);
    c.pseudo.lr_value = p.value("lr_value", c.pseudo.lr_value);
    c.pseudo.lr_policy = p.value("lr_policy", c.pseudo.lr_policy);
    c.pseudo.k = p.value("k", c.pseudo.k);
  }
  c.n_query = j.value("n_query", c.n_query);
  c.dataset_budget = j.value("dataset_budget", c.dataset_budget);
  c.initial_demos = j.value("initial_demos", c.initial_demos);
  c.filter_sims = j.value("filter_sims", c.filter_sims);
  c.accept_min = j.value("accept_min", c.accept_min);
  c.demo_greedy = j.value("demo_greedy", c.demo_greedy);
  c.collect_greedy = j.value("collect_greedy", c.collect_greedy);
  c.lr_decay = j.value("lr_decay", c.lr_decay);
  c.use_filter = j.value("use_filter", c.use_filter);
  c.use_pseudo_rl = j.value("use_pseudo_rl", c.use_pseudo_rl);
  c.comm_mode = j.value("comm_mode", c.comm_mode);
  student::comm_mode_from_name(c.comm_mode);  // validate early
  if (j.contains("student")) {
    const json& p = j["student"];
    c.student.hidden = p.value("hidden", c.student.hidden);
    c.student.message = p.value("message", c.student.message);
  }
  c.workers = j.value("workers", c.workers);
  c.seed = j.value("seed", c.seed);
  c.timestep_budget = j.value("timestep_budget", c.timestep_budget);
  c.eval_episodes = j.value("eval_episodes", c.eval_episodes);
  if (j.contains("eval_seeds"))
    c.eval_seeds = j["eval_seeds"].get<std::vector<std::uint64_t>>();
  c.eval_greedy = j.value("eval_greedy", c.eval_greedy);
  c.teacher_dir = j.value("teacher_dir", c.teacher_dir);

  if (c.timestep_budget <= 0 || c.n_query <= 0 || c.initial_demos < 0 ||
      c.kd_passes <= 0 || c.filter_sims <= 0 || c.accept_min <= 0 ||
      c.workers <= 0)
    throw std::invalid_argument("config: budgets and counts must be positive");
  if (!(c.lr_decay > 0.0 && c.lr_decay <= 1.0))
    throw std::invalid_argument("config: lr_decay must be in (0, 1]");
  return c;
}

void save_config(const HintConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config: " + path);
  out << config_to_json_text(cfg) << '\n';
}

HintConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json_text(ss.str());
}

std::string config_hash(const HintConfig& cfg) {
  const std::string text = config_to_json_text(cfg);
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)h);
  return buf;
}

// --- manifest --------------------------------------------------------------

namespace {

json epoch_to_json(const EpochRecord& e) {
  json j;
  j["epoch"] = e.epoch;
  j["cumulative_steps"] = e.cumulative_steps;
  j["row"] = {{"timestep", e.row.timestep},
              {"success_rate", e.row.success_rate},
              {"steps_taken", e.row.steps_taken},
              {"suboptimal_demo_rate", e.row.suboptimal_demo_rate},
              {"teacher_success_rate", e.row.teacher_success_rate}};
  j["queries"] = e.queries;
  j["rejected"] = e.rejected;
  j["refine_steps"] = e.refine_steps;
  json phases = json::array();
  for (const auto& p : e.phases)
    phases.push_back({{"name", p.name}, {"seconds", p.seconds}});
  j["phases"] = phases;
  j["checkpoints"] = e.checkpoints;
  return j;
}

EpochRecord epoch_from_json(const json& j) {
  EpochRecord e;
  e.epoch = j.at("epoch").get<int>();
  e.cumulative_steps = j.at("cumulative_steps").get<long>();
  const json& r = j.at("row");
  e.row.timestep = r.at("timestep").get<long>();
  e.row.success_rate = r.at("success_rate").get<double>();
  e.row.steps_taken = r.at("steps_taken").get<double>();
  e.row.suboptimal_demo_rate = r.at("suboptimal_demo_rate").get<double>();
  e.row.teacher_success_rate = r.at("teacher_success_rate").get<double>();
  e.queries = j.at("queries").get<int>();
  e.rejected = j.at("rejected").get<int>();
  e.refine_steps = j.value("refine_steps", 0L);
  for (const auto& p : j.at("phases"))
    e.phases.push_back(
        {p.at("name").get<std::string>(), p.at("seconds").get<double>()});
  e.checkpoints =
      j.at("checkpoints").get<std::map<std::string, std::string>>();
  return e;
}

}  // namespace

void save_manifest(const RunManifest& m, const std::string& path) {
  json j;
  j["config_hash"] = m.config_hash;
  j["preset"] = m.preset;
  json epochs = json::array();
  for (const auto& e : m.epochs) epochs.push_back(epoch_to_json(e));
  j["epochs"] = epochs;
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write manifest: " + path);
    out << j.dump(2) << '\n';
  }
  fs::rename(tmp, path);
}

RunManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest: " + path);
  json j = json::parse(in);
  RunManifest m;
  m.config_hash = j.at("config_hash").get<std::string>();
  m.preset = j.at("preset").get<std::string>();
  for (const auto& e : j.at("epochs")) m.epochs.push_back(epoch_from_json(e));
  return m;
}

// --- teacher checkpoints ---------------------------------------------------

teacher::TeacherParams pretrain_and_save(const HintConfig& cfg,
                                         const std::string& dir) {
  fs::create_directories(dir);
  const env::EnvConfig ec = env::preset(cfg.preset, cfg.seed);
  Rng rng(mix(cfg.seed, kInitSalt, 1));
  teacher::TeacherParams p = teacher::init_teacher(ec, rng);

  teacher::PretrainConfig pc = cfg.pretrain;
  pc.preset = cfg.preset;
  pc.seed = cfg.seed;

  const auto t0 = std::chrono::steady_clock::now();
  teacher::pretrain_low_level(p, pc);
  const auto t1 = std::chrono::steady_clock::now();
  teacher::pretrain_high_level(p, pc);
  const auto t2 = std::chrono::steady_clock::now();

  save_paramset(p.high, dir + "/high.ckpt");
  save_paramset(p.low, dir + "/low.ckpt");
  save_paramset(p.value, dir + "/value.ckpt");

  json j;
  j["config_hash"] = config_hash(cfg);
  j["preset"] = cfg.preset;
  j["low_timesteps"] = pc.low_timesteps;
  j["high_timesteps"] = pc.high_timesteps;
  j["seconds_low"] = std::chrono::duration<double>(t1 - t0).count();
  j["seconds_high"] = std::chrono::duration<double>(t2 - t1).count();
  std::ofstream out(dir + "/pretrain.json");
  out << j.dump(2) << '\n';
  return p;
}

teacher::TeacherParams load_teacher(const std::string& dir) {
  for (const char* f : {"high.ckpt", "low.ckpt", "value.ckpt"})
    if (!fs::exists(dir + "/" + f))
      throw std::runtime_error(
          "teacher checkpoint missing: " + dir + "/" + f +
          "; run `hint pretrain-teacher --config <config> --out <run-dir>` "
          "to create it");
  teacher::TeacherParams p;
  p.high = load_paramset(dir + "/high.ckpt");
  p.low = load_paramset(dir + "/low.ckpt");
  p.value = load_paramset(dir + "/value.ckpt");
  return p;
}

// --- driver ----------------------------------------------------------------

namespace {

double seconds_since(std::chrono::steady_clock::time_point& mark) {
  const auto now = std::chrono::steady_clock::now();
  const double s = std::chrono::duration<double>(now - mark).count();
  mark = now;
  return s;
}

distill::Trajectory teacher_demo(const env::EnvConfig& cfg,
                                 const teacher::TeacherParams& p, int k,
                                 std::uint64_t seed, bool greedy) {
  env::EnvConfig c = cfg;
  c.seed = seed;
  auto [s, obs] = env::reset(c);
  Rng rng(mix(seed, kDemoSalt));
  teacher::Subgoals g;
  distill::Trajectory tr;
  tr.seed = seed;
  tr.partition = "initial";
  while (!s.terminated) {
    auto act = teacher::teacher_act(s, obs, p, k, g, rng, greedy);
    distill::TrajStep st;
    st.obs = obs;
    st.teacher_actions = act.actions;
    st.teacher_log_prob = act.log_prob;
    st.accepted = true;
    tr.steps.push_back(std::move(st));
    obs = env::step(s, act.actions).obs;
  }
  return tr;
}

bool params_finite(const ParamSet& p) {
  for (const auto& [name, t] : p)
    if (!t.all_finite()) return false;
  return true;
}

std::string epoch_dirname(int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "epoch_%04d", epoch);
  return buf;
}

}  // namespace

RunManifest train_hint(const HintConfig& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const env::EnvConfig ec = env::preset(cfg.preset, cfg.seed);
  student::StudentConfig sc = cfg.student;
  sc.comm = student::comm_mode_from_name(cfg.comm_mode);
  const int k = cfg.pretrain.k;
  const std::string teacher_dir =
      cfg.teacher_dir.empty() ? out_dir + "/teacher" : cfg.teacher_dir;
  teacher::TeacherParams tp = load_teacher(teacher_dir);

  const std::string hash = config_hash(cfg);
  save_config(cfg, out_dir + "/config.json");
  const std::string manifest_path = out_dir + "/manifest.json";

  RunManifest man;
  man.config_hash = hash;
  man.preset = cfg.preset;

  ParamSet phi;
  std::optional<dagger::AggregatedDataset> ds;
  AdamState adam_kd, adam_value, adam_policy;
  long steps = 0;
  int epoch = 1;

  if (fs::exists(manifest_path)) {
    man = load_manifest(manifest_path);
    if (man.config_hash != hash)
      throw std::runtime_error(
          "manifest in " + out_dir +
          " was produced by a different configuration; use a fresh --out "
          "directory or restore the original config");
    if (!man.epochs.empty()) {
      const EpochRecord& last = man.epochs.back();
      phi = load_paramset(out_dir + "/" + last.checkpoints.at("student"));
      tp.high =
          load_paramset(out_dir + "/" + last.checkpoints.at("teacher_high"));
      tp.low =
          load_paramset(out_dir + "/" + last.checkpoints.at("teacher_low"));
      tp.value =
          load_paramset(out_dir + "/" + last.checkpoints.at("teacher_value"));
      ds = dagger::AggregatedDataset::load(
          out_dir + "/" + last.checkpoints.at("dataset"), cfg.dataset_budget);
      steps = last.cumulative_steps;
      epoch = last.epoch + 1;
    }
  }
  if (!ds) {
    Rng rng(mix(cfg.seed, kInitSalt, 2));
    phi = student::init_student(ec, sc, rng);
    std::vector<distill::Trajectory> initial(cfg.initial_demos);
    for (int e = 0; e < cfg.initial_demos; ++e)
      initial[e] = teacher_demo(ec, tp, k, mix(cfg.seed, kDemoSalt, e),
                                cfg.demo_greedy);
    ds.emplace(std::move(initial), cfg.dataset_budget);
  }

  dagger::FilterConfig fc;
  fc.sims = cfg.filter_sims;
  fc.accept_min = cfg.accept_min;
  fc.use_filter = cfg.use_filter;

  while (steps < cfg.timestep_budget) {
    EpochRecord rec;
    rec.epoch = epoch;
    auto mark = std::chrono::steady_clock::now();
    const ParamSet phi_prev = phi;
    const ParamSet high_prev = tp.high, value_prev = tp.value;

    // collect: n_query filtered student episodes, seeds fixed up front so
    // the outcome is independent of the worker count
    std::vector<dagger::EpisodeResult> episodes(cfg.n_query);
    auto job = [&](int e) {
      dagger::TeacherDemonstrator demo(tp, k, cfg.demo_greedy);
      episodes[e] = dagger::collect_episode(
          ec, phi, sc, demo, fc, mix(cfg.seed, kCollectSalt, epoch, e),
          cfg.collect_greedy);
    };
    if (cfg.workers <= 1) {
      for (int e = 0; e < cfg.n_query; ++e) job(e);
    } else {
#pragma omp parallel for schedule(dynamic) num_threads(cfg.workers)
      for (int e = 0; e < cfg.n_query; ++e) job(e);
    }
    rec.phases.push_back({"collect", seconds_since(mark)});

    // aggregate in episode order
    for (auto& er : episodes) {
      steps += er.length;
      rec.queries += er.queries;
      rec.rejected += er.queries - er.accepted;
      ds->aggregate(std::move(er.traj));
    }
    rec.phases.push_back({"aggregate", seconds_since(mark)});

    // distill
    for (int pass = 0; pass < cfg.kd_passes; ++pass) {
      auto view = ds->epoch_view(mix(cfg.seed, kDistillSalt, epoch, pass));
      distill::DistillConfig dc = cfg.distill;
      dc.lr *= std::pow(cfg.lr_decay, double(epoch));
      dc.seed = mix(cfg.seed, kDistillSalt, epoch, 1000 + pass);
      distill::kd_update(phi, adam_kd, sc, ec, view, dc);
    }
    rec.phases.push_back({"distill", seconds_since(mark)});

    // refine
    if (cfg.use_pseudo_rl) {
      pseudorl::PseudoConfig pc = cfg.pseudo;
      pc.k = k;
      pc.workers = cfg.workers;
      pc.seed = mix(cfg.seed, kRefineSalt, epoch);
      auto stats =
          pseudorl::pseudo_update(tp, ec, phi, sc, pc, adam_value, adam_policy);
      rec.refine_steps = stats.steps;
      rec.phases.push_back({"refine", seconds_since(mark)});
    }

    // a diverged phase aborts the epoch; the previous parameters stand
    if (!params_finite(phi) || !params_finite(tp.high) ||
        !params_finite(tp.value)) {
      std::fprintf(stderr, "[train] epoch %d diverged; restoring previous\n",
                   epoch);
      phi = phi_prev;
      tp.high = high_prev;
      tp.value = value_prev;
      rec.phases.push_back({"aborted", 0.0});
    }

    // evaluate
    metrics::EvalConfig evc;
    evc.episodes = cfg.eval_episodes;
    evc.seeds = cfg.eval_seeds;
    evc.workers = cfg.workers;
    auto student_rep = metrics::evaluate(
        [&] {
          return std::make_unique<student::StudentPolicy>(phi, sc, ec,
                                                          cfg.eval_greedy);
        },
        ec, evc);
    auto teacher_rep = metrics::evaluate(
        [&] { return std::make_unique<teacher::TeacherPolicy>(tp, k); }, ec,
        evc);
    rec.phases.push_back({"eval", seconds_since(mark)});

    rec.cumulative_steps = steps;
    rec.row.timestep = steps;
    rec.row.success_rate = student_rep.success_rate;
    rec.row.steps_taken = student_rep.steps_taken;
    rec.row.suboptimal_demo_rate =
        dagger::suboptimal_demo_rate(rec.rejected, rec.queries);
    rec.row.teacher_success_rate = teacher_rep.success_rate;

    // checkpoint
    const std::string rel = epoch_dirname(epoch);
    fs::create_directories(out_dir + "/" + rel);
    save_paramset(phi, out_dir + "/" + rel + "/student.ckpt");
    save_paramset(tp.high, out_dir + "/" + rel + "/teacher_high.ckpt");
    save_paramset(tp.low, out_dir + "/" + rel + "/teacher_low.ckpt");
    save_paramset(tp.value, out_dir + "/" + rel + "/teacher_value.ckpt");
    ds->save(out_dir + "/" + rel + "/dataset.jsonl");
    rec.checkpoints = {{"student", rel + "/student.ckpt"},
                       {"teacher_high", rel + "/teacher_high.ckpt"},
                       {"teacher_low", rel + "/teacher_low.ckpt"},
                       {"teacher_value", rel + "/teacher_value.ckpt"},
                       {"dataset", rel + "/dataset.jsonl"}};
    rec.phases.push_back({"checkpoint", seconds_since(mark)});

    man.epochs.push_back(std::move(rec));
    save_manifest(man, manifest_path);
    std::vector<metrics::CurveRow> rows;
    for (const auto& e : man.epochs) rows.push_back(e.row);
    metrics::write_curve_csv(out_dir + "/curve.csv", rows);
    ++epoch;
  }
  return man;
}

ParamSet load_student(const std::string& out_dir) {
  RunManifest man = load_manifest(out_dir + "/manifest.json");
  if (man.epochs.empty())
    throw std::runtime_error("run has no recorded epochs: " + out_dir);
  return load_paramset(out_dir + "/" +
                       man.epochs.back().checkpoints.at("student"));
}

metrics::EvalReport eval_student(const HintConfig& cfg, const ParamSet& phi) {
  const env::EnvConfig ec = env::preset(cfg.preset, cfg.seed);
  student::StudentConfig sc = cfg.student;
  sc.comm = student::comm_mode_from_name(cfg.comm_mode);
  metrics::EvalConfig evc;
  evc.episodes = cfg.eval_episodes;
  evc.seeds = cfg.eval_seeds;
  evc.workers = cfg.workers;
  return metrics::evaluate(
      [&] {
        return std::make_unique<student::StudentPolicy>(phi, sc, ec,
                                                        cfg.eval_greedy);
      },
      ec, evc);
}

metrics::EvalReport eval_teacher(const HintConfig& cfg,
                                 const teacher::TeacherParams& p,
                                 bool greedy) {
  const env::EnvConfig ec = env::preset(cfg.preset, cfg.seed);
  metrics::EvalConfig evc;
  evc.episodes = cfg.eval_episodes;
  evc.seeds = cfg.eval_seeds;
  evc.workers = cfg.workers;
  return metrics::evaluate(
      [&] {
        return std::make_unique<teacher::TeacherPolicy>(p, cfg.pretrain.k,
                                                        greedy);
      },
      ec, evc);
}

}  // namespace hint::orchestrator
