#include <benchmark/benchmark.h>

#include <memory>

#include "irbridge/config.hpp"
#include "irbridge/engine.hpp"
#include "irbridge/path.hpp"
#include "irbridge/rng.hpp"
#include "irbridge/sde.hpp"
#include "irbridge/transition.hpp"

namespace {

using namespace irbridge;

BridgeParams bench_params() {
  BridgeParams p;
  p.lambda = 2.0;
  p.theta_bar_total = 2.0;
  return p;
}

void BM_GoubCoeffs(benchmark::State& state) {
  const BridgeParams p = bench_params();
  double tau = 0.0;
  for (auto _ : state) {
    tau += 1e-6;
    if (tau > 1.0) tau = 0.0;
    benchmark::DoNotOptimize(goub_coeffs(p, tau));
  }
}
BENCHMARK(BM_GoubCoeffs);

void BM_TransitionCoeffs(benchmark::State& state) {
  const PathCoefficients src{0.8, 0.1, 0.6};
  const PathCoefficients dst{0.5, 0.4, 0.9};
  const double sigma = sigma_range(src, dst).lo;
  for (auto _ : state) benchmark::DoNotOptimize(transition_coeffs(src, dst, sigma));
}
BENCHMARK(BM_TransitionCoeffs);

void BM_CriticalTimestep(benchmark::State& state) {
  const IrSdePath bridge(bench_params());
  const DdpmPath gen(DdpmSchedule::linear(1000), "ddpm-linear");
  const PathCoefficients src = bridge.coeffs(0.5);
  for (auto _ : state) benchmark::DoNotOptimize(critical_timestep(src, gen));
}
BENCHMARK(BM_CriticalTimestep);

void BM_EmSimulate(benchmark::State& state) {
  const BridgeParams p = bench_params();
  const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(1, 1.7);
  const Eigen::VectorXd x_lq = Eigen::VectorXd::Constant(1, 1.0);
  const EmTables tables = make_em_tables(BridgeKind::irsde, p, 2000);
  Rng rng(1, 0);
  const std::vector<int> record{2000};
  for (auto _ : state)
    benchmark::DoNotOptimize(em_simulate_record(tables, x0, x_lq, rng, record));
}
BENCHMARK(BM_EmSimulate);

void BM_OraclePosteriorMean256(benchmark::State& state) {
  const TaskInstance task = make_builtin_task("mask", 3);
  const auto cond = std::make_shared<Prior>(
      condition_prior(*task.prior, task.degradation, task.x_lq));
  PriorOps ops(cond);
  const PathCoefficients c{0.7, 0.0, 0.5};
  Rng rng(2, 0);
  const Eigen::VectorXd x_t = reparam_sample(c, task.x0, task.x_lq, rng.gaussian_vector(256));
  for (auto _ : state) benchmark::DoNotOptimize(ops.posterior_mean(x_t, c, task.x_lq));
}
BENCHMARK(BM_OraclePosteriorMean256);

void BM_IrBridgeRunStep(benchmark::State& state) {
  const AppConfig app = default_config();
  const IrSdePath bridge(make_bridge_params(app.bridge));
  const auto gen = make_gen_path(app.gen);
  const TaskInstance task = make_builtin_task("gmm", 5);
  const auto denoiser = make_denoiser(DenoiserKind::cond, task);
  ScheduleBuildOptions opts;
  const TimestepSchedule schedule = build_schedule(preset("setting8"), 25, bridge, *gen, opts);
  std::uint64_t run = 0;
  for (auto _ : state) {
    Rng rng(7, run++);
    benchmark::DoNotOptimize(
        irbridge_run(task, schedule, *denoiser, bridge, *gen, RunOptions{}, rng));
  }
}
BENCHMARK(BM_IrBridgeRunStep);

}  // namespace

BENCHMARK_MAIN();
