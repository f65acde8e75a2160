// Benchmark: the OpenMP episode workers against the serial reference path,
// for both policy evaluation and mixed-rollout collection. The parallel and
// serial paths must produce identical aggregate results; this reports the
// wall-clock ratio.

#include <chrono>
#include <cstdio>
#include <thread>

#include "hint/metrics.hpp"
#include "hint/teacher.hpp"
#include "hint/vtrace.hpp"

using namespace hint;

namespace {

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

int main(int argc, char** argv) {
  const char* preset = argc > 1 ? argv[1] : "fc-medium";
  const int episodes = argc > 2 ? std::atoi(argv[2]) : 200;
  const int hw = int(std::thread::hardware_concurrency());
  const int workers = hw > 0 ? hw : 4;

  const auto cfg = env::preset(preset, 0);
  std::printf("preset=%s episodes=%d workers=%d\n", preset, episodes, workers);

  // --- evaluation: serial reference vs parallel workers -------------------
  metrics::PolicyFactory factory = [] {
    return std::make_unique<GreedyPolicy>();
  };
  metrics::EvalConfig ec;
  ec.episodes = episodes;
  ec.seeds = {0};
  ec.workers = 1;
  double t0 = now_s();
  auto serial = metrics::evaluate(factory, cfg, ec);
  double serial_s = now_s() - t0;

  ec.workers = workers;
  t0 = now_s();
  auto parallel = metrics::evaluate(factory, cfg, ec);
  double parallel_s = now_s() - t0;

  std::printf("evaluate   serial %.3fs  parallel %.3fs  speedup %.2fx\n",
              serial_s, parallel_s, serial_s / parallel_s);
  if (serial.success_rate != parallel.success_rate ||
      serial.steps_taken != parallel.steps_taken) {
    std::printf("MISMATCH: parallel evaluation diverged from the serial "
                "reference\n");
    return 1;
  }
  std::printf("           success %.4f steps %.2f (identical both paths)\n",
              serial.success_rate, serial.steps_taken);

  // --- mixed-rollout collection ------------------------------------------
  Rng rng(1);
  auto tp = teacher::init_teacher(cfg, rng);
  student::StudentConfig sc;
  auto phi = student::init_student(cfg, sc, rng);

  t0 = now_s();
  long steps1 = 0;
  for (int e = 0; e < episodes; ++e)
    steps1 += long(pseudorl::rollout_mixed(cfg, phi, sc, tp, 3, e).steps.size());
  double roll_serial_s = now_s() - t0;

  t0 = now_s();
  long steps2 = 0;
#pragma omp parallel for schedule(dynamic) num_threads(workers) \
    reduction(+ : steps2)
  for (int e = 0; e < episodes; ++e)
    steps2 += long(pseudorl::rollout_mixed(cfg, phi, sc, tp, 3, e).steps.size());
  double roll_parallel_s = now_s() - t0;

  std::printf("rollouts   serial %.3fs  parallel %.3fs  speedup %.2fx\n",
              roll_serial_s, roll_parallel_s, roll_serial_s / roll_parallel_s);
  if (steps1 != steps2) {
    std::printf("MISMATCH: parallel rollout step count diverged\n");
    return 1;
  }
  std::printf("           %ld env steps (identical both paths)\n", steps1);
  return 0;
}
