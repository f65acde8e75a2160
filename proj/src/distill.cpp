#include "hint/distill.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <stdexcept>

#include <json.hpp>

namespace hint::distill {

using nlohmann::json;

void save_trajectories(const std::vector<Trajectory>& trajs,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const auto& tr : trajs) {
    json j;
    j["seed"] = tr.seed;
    j["switch_point"] = tr.switch_point;
    j["partition"] = tr.partition;
    json steps = json::array();
    for (const auto& s : tr.steps) {
      json js;
      json obs = json::array();
      for (const auto& o : s.obs)
        obs.push_back({{"c", o.agent_class}, {"f", o.features}});
      js["obs"] = std::move(obs);
      js["acc"] = s.accepted;
      if (s.accepted) {
        js["a"] = s.teacher_actions;
        js["lpT"] = s.teacher_log_prob;
      }
      steps.push_back(std::move(js));
    }
    j["steps"] = std::move(steps);
    out << j.dump() << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<Trajectory> load_trajectories(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::vector<Trajectory> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    Trajectory tr;
    tr.seed = j.at("seed").get<std::uint64_t>();
    tr.switch_point = j.at("switch_point").get<int>();
    tr.partition = j.at("partition").get<std::string>();
    for (const auto& js : j.at("steps")) {
      TrajStep s;
      for (const auto& jo : js.at("obs")) {
        env::AgentObservation o;
        o.agent_class = jo.at("c").get<int>();
        o.features = jo.at("f").get<std::vector<double>>();
        s.obs.push_back(std::move(o));
      }
      s.accepted = js.at("acc").get<bool>();
      if (s.accepted) {
        s.teacher_actions = js.at("a").get<std::vector<int>>();
        s.teacher_log_prob = js.at("lpT").get<double>();
      }
      tr.steps.push_back(std::move(s));
    }
    out.push_back(std::move(tr));
  }
  return out;
}

double kd_loss(const std::vector<KdSample>& batch, double alpha,
               int entropy_sign) {
  if (batch.empty()) throw std::invalid_argument("kd_loss: empty batch");
  double acc = 0.0;
  for (const auto& s : batch) {
    if (!std::isfinite(s.teacher_lp) || !std::isfinite(s.student_lp))
      throw std::invalid_argument("kd_loss: non-finite log-probability");
    acc += (s.teacher_lp - s.student_lp) +
           entropy_sign * alpha * s.student_entropy;
  }
  return acc / double(batch.size());
}

namespace {

// A pending accepted pair: nodes live on the tape that replayed its
// trajectory; the tape stays alive until every pair drawn from it has been
// flushed through an update.
struct PendingPair {
  std::shared_ptr<Tape> tape;
  Tape::Var student_lp;
  Tape::Var entropy;
  double teacher_lp;
};

void accumulate(std::map<std::string, Tensor>& into,
                const std::map<std::string, Tensor>& g) {
  for (const auto& [name, grad] : g) {
    auto it = into.find(name);
    if (it == into.end()) {
      into[name] = grad;
    } else {
      for (std::size_t i = 0; i < grad.size(); ++i)
        it->second.data[i] += grad.data[i];
    }
  }
}

void flush(std::vector<PendingPair>& buffer, ParamSet& phi, AdamState& adam,
           const DistillConfig& dc, KdStats& stats) {
  const double inv_n = 1.0 / double(buffer.size());
  double loss = 0.0, ent_sum = 0.0;

  // group pairs by tape so each tape is swept backward once; groups keep
  // buffer insertion order so the gradient summation order (and hence the
  // floating-point result) is independent of heap addresses
  std::vector<std::pair<Tape*, std::vector<const PendingPair*>>> by_tape;
  std::map<Tape*, std::size_t> tape_index;
  for (const auto& pp : buffer) {
    auto [it, inserted] = tape_index.try_emplace(pp.tape.get(), by_tape.size());
    if (inserted)
      by_tape.emplace_back(pp.tape.get(), std::vector<const PendingPair*>{});
    by_tape[it->second].second.push_back(&pp);
  }

  std::map<std::string, Tensor> grads;
  for (auto& [tape, pairs] : by_tape) {
    Tape::Var local = -1;
    for (const auto* pp : pairs) {
      // gradient part of (lpT - lpS) + sign*alpha*H : teacher term constant
      auto term = tape->add(
          tape->scale(pp->student_lp, -1.0),
          tape->scale(pp->entropy, dc.entropy_sign * dc.alpha));
      local = local < 0 ? term : tape->add(local, term);
      loss += inv_n * (pp->teacher_lp - tape->scalar(pp->student_lp) +
                       dc.entropy_sign * dc.alpha * tape->scalar(pp->entropy));
      ent_sum += tape->scalar(pp->entropy);
    }
    tape->backward(tape->scale(local, inv_n));
    accumulate(grads, tape->param_grads());
  }

  if (!std::isfinite(loss)) {
    ++stats.skipped;
    std::fprintf(stderr,
                 "[distill] non-finite loss, update skipped (update %d)\n",
                 stats.updates + stats.skipped);
  } else {
    adam_step(phi, grads, adam, dc.lr);
    ++stats.updates;
    stats.last_loss = loss;
    stats.pairs_trained += int(buffer.size());
    stats.mean_entropy += ent_sum;
  }
  buffer.clear();
}

}  // namespace

KdStats kd_update(ParamSet& phi, AdamState& adam,
                  const student::StudentConfig& sc,
                  const env::EnvConfig& cfg,
                  const std::vector<const Trajectory*>& trajectories,
                  const DistillConfig& dc) {
  if (dc.capacity < 1)
    throw std::invalid_argument("kd_update: capacity must be >= 1");
  KdStats stats;
  std::vector<PendingPair> buffer;
  buffer.reserve(dc.capacity);

  for (const Trajectory* tr : trajectories) {
    if (tr->steps.empty()) continue;
    auto tape = std::make_shared<Tape>(&phi);
    const std::size_t n = tr->steps[0].obs.size();
    std::vector<Tape::Var> hidden(n);
    for (std::size_t i = 0; i < n; ++i)
      hidden[i] = tape->constant(Tensor::zeros({std::size_t(sc.hidden)}));

    for (const auto& step : tr->steps) {
      auto fwd = student::student_forward(*tape, sc, cfg, step.obs, hidden);
      if (step.accepted) {
        Tape::Var lp = -1, ent = -1;
        for (std::size_t i = 0; i < n; ++i) {
          auto l = tape->log_prob(fwd.logits[i], step.teacher_actions[i]);
          auto e = tape->entropy(fwd.logits[i]);
          lp = lp < 0 ? l : tape->add(lp, l);
          ent = ent < 0 ? e : tape->add(ent, e);
        }
        buffer.push_back({tape, lp, ent, step.teacher_log_prob});
        ++stats.pairs_seen;
        if (int(buffer.size()) == dc.capacity)
          flush(buffer, phi, adam, dc, stats);
      }
      hidden = std::move(fwd.hidden);
    }
  }
  if (stats.pairs_trained > 0) stats.mean_entropy /= stats.pairs_trained;
  return stats;
}

std::vector<const Trajectory*> shuffled_view(
    const std::vector<Trajectory>& dataset, std::uint64_t seed) {
  std::vector<const Trajectory*> view;
  view.reserve(dataset.size());
  for (const auto& tr : dataset) view.push_back(&tr);
  Rng rng(seed);
  for (std::size_t i = dataset.size(); i > 1; --i)
    std::swap(view[i - 1], view[rng.uniform_int(i)]);
  return view;
}

KdStats behavior_clone(ParamSet& phi, AdamState& adam,
                       const student::StudentConfig& sc,
                       const env::EnvConfig& cfg,
                       const std::vector<Trajectory>& dataset,
                       const DistillConfig& dc, int passes) {
  KdStats total;
  for (int pass = 0; pass < passes; ++pass) {
    auto view = shuffled_view(dataset, dc.seed * 2654435761ull + pass);
    KdStats s = kd_update(phi, adam, sc, cfg, view, dc);
    total.updates += s.updates;
    total.pairs_seen += s.pairs_seen;
    total.pairs_trained += s.pairs_trained;
    total.skipped += s.skipped;
    total.last_loss = s.updates ? s.last_loss : total.last_loss;
    total.mean_entropy = s.mean_entropy;
  }
  return total;
}

}  // namespace hint::distill
