#include <doctest.h>

#include <cmath>
#include <memory>

#include "irbridge/config.hpp"
#include "irbridge/engine.hpp"
#include "irbridge/parallel.hpp"
#include "irbridge/rng.hpp"
#include "irbridge/schedule.hpp"

using namespace irbridge;

namespace {

struct EngineFixture {
  AppConfig app = default_config();
  BridgeParams params = make_bridge_params(app.bridge);
  IrSdePath irsde{params};
  GoubPath goub{params};
  std::unique_ptr<Path> gen = make_gen_path(app.gen);

  TimestepSchedule schedule(const Path& bridge, int n) const {
    ScheduleBuildOptions opts;
    opts.j_min = app.schedule.j_min;
    return build_schedule(preset("setting8"), n, bridge, *gen, opts);
  }
};

}  // namespace

TEST_CASE("mse and psnr: exact values and the naive-loop oracle") {
  const Eigen::VectorXd a = (Eigen::VectorXd(4) << 0.1, 0.4, 0.7, 1.0).finished();
  CHECK(mse(a, a) == 0.0);
  CHECK(std::isinf(psnr(a, a, 1.0)));

  const Eigen::VectorXd b = a.array() + 0.1;
  CHECK(mse(a, b) == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(psnr(a, b, 1.0) == doctest::Approx(20.0).epsilon(1e-12));

  Rng rng(12, 0);
  const Eigen::VectorXd u = rng.gaussian_vector(37);
  const Eigen::VectorXd v = rng.gaussian_vector(37);
  double acc = 0.0;
  for (int k = 0; k < 37; ++k) acc += (u[k] - v[k]) * (u[k] - v[k]);
  CHECK(std::abs(mse(u, v) - acc / 37.0) < 1e-12);

  CHECK_THROWS_AS(psnr(a, b, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(mse(a, Eigen::VectorXd::Zero(3)), std::invalid_argument);
}

TEST_CASE("perfect denoiser drives both bridges to the exact answer") {
  const EngineFixture fx;
  for (const char* task_name : {"gmm", "mask"}) {
    const TaskInstance task = make_builtin_task(task_name, 1234);
    const PerfectDenoiser denoiser(task.x0);
    for (const Path* bridge : {static_cast<const Path*>(&fx.irsde),
                               static_cast<const Path*>(&fx.goub)}) {
      const TimestepSchedule schedule = fx.schedule(*bridge, 20);
      Rng rng(1234, 7);
      const Trajectory traj =
          irbridge_run(task, schedule, denoiser, *bridge, *fx.gen, RunOptions{}, rng);
      INFO(task_name, " on ", bridge->name());
      CHECK(traj.final_mse <= 1e-10);
      CHECK(traj.steps.size() == schedule.size() - (bridge->name() == "goub" ? 1 : 0));
    }
  }
}

TEST_CASE("rectified flow as the generative side works end to end") {
  // The flow's noise-to-signal ratio is unbounded near its endpoint, so
  // every bridge state has a critical time inside the grid and the loop is
  // feasible for any bridge depth.
  const EngineFixture fx;
  const RectifiedFlowPath rf;
  ScheduleBuildOptions opts;
  opts.j_min = 0.001;
  const TimestepSchedule schedule = build_schedule(preset("setting8"), 30, fx.irsde, rf, opts);
  const FeasibilityReport report = validate_schedule(schedule, fx.irsde, rf);
  CHECK(report.forward_violations == 0);
  CHECK(report.reverse_violations == 0);

  const TaskInstance task = make_builtin_task("gmm", 314);
  const PerfectDenoiser perfect(task.x0);
  Rng rng(314, 1);
  const Trajectory exact =
      irbridge_run(task, schedule, perfect, fx.irsde, rf, RunOptions{}, rng);
  CHECK(exact.final_mse <= 1e-10);

  const auto cond = make_denoiser(DenoiserKind::cond, task);
  Rng rng2(314, 2);
  const Trajectory traj = irbridge_run(task, schedule, *cond, fx.irsde, rf, RunOptions{}, rng2);
  CHECK(traj.final_mse < mse(task.x_lq, task.x0));
}

TEST_CASE("pinned bridge start: hard error without the skip, finite run with it") {
  const EngineFixture fx;
  const TaskInstance task = make_builtin_task("dim", 99);
  const auto denoiser = make_denoiser(DenoiserKind::cond, task);
  const TimestepSchedule schedule = fx.schedule(fx.goub, 30);

  RunOptions no_skip;
  no_skip.skip_degenerate_initial = false;
  Rng rng1(99, 1);
  CHECK_THROWS_AS(
      irbridge_run(task, schedule, *denoiser, fx.goub, *fx.gen, no_skip, rng1),
      TransitionError);

  Rng rng2(99, 1);
  const Trajectory traj =
      irbridge_run(task, schedule, *denoiser, fx.goub, *fx.gen, RunOptions{}, rng2);
  CHECK(traj.skipped_initial);
  CHECK(std::isfinite(traj.final_mse));
}

TEST_CASE("trajectories are bit-identical for identical seeds") {
  const EngineFixture fx;
  const TaskInstance task = make_builtin_task("gmm", 55);
  const auto denoiser = make_denoiser(DenoiserKind::cond, task);
  const TimestepSchedule schedule = fx.schedule(fx.irsde, 25);
  Rng rng_a(55, 3), rng_b(55, 3);
  const Trajectory a =
      irbridge_run(task, schedule, *denoiser, fx.irsde, *fx.gen, RunOptions{}, rng_a);
  const Trajectory b =
      irbridge_run(task, schedule, *denoiser, fx.irsde, *fx.gen, RunOptions{}, rng_b);
  REQUIRE(a.steps.size() == b.steps.size());
  CHECK(a.final_estimate == b.final_estimate);
  for (std::size_t k = 0; k < a.steps.size(); ++k) {
    CHECK(a.steps[k].state == b.steps[k].state);
    CHECK(a.steps[k].x_hat0 == b.steps[k].x_hat0);
  }
}

TEST_CASE("bridge MSE trend: windowed mean nonincreasing over the last half") {
  const EngineFixture fx;
  const TaskInstance task = make_builtin_task("mask", 2024);
  const auto denoiser = make_denoiser(DenoiserKind::cond, task);
  const TimestepSchedule schedule = fx.schedule(fx.irsde, 100);
  Rng rng(2024, 5);
  const Trajectory traj =
      irbridge_run(task, schedule, *denoiser, fx.irsde, *fx.gen, RunOptions{}, rng);
  const int n = static_cast<int>(traj.steps.size());
  const int w = 10;
  auto window_mean = [&](int start) {
    double acc = 0.0;
    for (int k = start; k < start + w; ++k) acc += traj.steps[static_cast<std::size_t>(k)].mse_xhat;
    return acc / w;
  };
  // Nonincreasing up to plateau jitter: once converged the windowed MSE
  // fluctuates in its 4th significant digit, so allow 1% slack.
  double prev = window_mean(n / 2);
  for (int start = n / 2 + 1; start + w <= n; ++start) {
    const double cur = window_mean(start);
    CHECK(cur <= prev * 1.01);
    prev = cur;
  }
}

TEST_CASE("generative baseline: perfect denoiser collapses immediately") {
  const EngineFixture fx;
  const TaskInstance task = make_builtin_task("gmm", 77);
  const PerfectDenoiser denoiser(task.x0);
  Rng rng(77, 2);
  const Trajectory traj = generative_run(task, 50, denoiser, *fx.gen, 0.001, rng);
  CHECK(traj.final_mse == 0.0);
  CHECK(traj.steps.size() == 50);
}

TEST_CASE("generative baseline targets the conditional posterior law on a unimodal task") {
  // The deterministic x0-anchored rule is a probability-flow transport: with
  // an exact conditional denoiser its finals are distributed like the
  // posterior (centered on the posterior mean with the posterior spread),
  // they do not collapse onto the mean itself.
  const EngineFixture fx;
  Gmm single;
  single.components.push_back(
      {1.0, Eigen::Vector2d(1.2, -0.8),
       (Eigen::Matrix2d() << 0.2, 0.04, 0.04, 0.15).finished()});
  auto prior = std::make_shared<Prior>(Prior::from_gmm(single));
  Rng task_rng(31, 0);
  const TaskInstance task =
      make_task(prior, LinearDegradation::dimming(2, 0.4, 0.1), 4.0, "uni", task_rng);
  const auto denoiser = make_denoiser(DenoiserKind::cond, task);
  const Prior posterior = condition_prior(*task.prior, task.degradation, task.x_lq);
  const Eigen::VectorXd post_mean = posterior.mean();
  const Eigen::MatrixXd post_cov = posterior.gmm.components[0].cov;

  const int n = 1500;
  Eigen::Vector2d acc = Eigen::Vector2d::Zero();
  Eigen::Vector2d acc_sq = Eigen::Vector2d::Zero();
  for (int s = 0; s < n; ++s) {
    Rng rng(31, stream_id(0xAD, static_cast<std::uint32_t>(s)));
    const Trajectory traj = generative_run(task, 400, *denoiser, *fx.gen, 1e-4, rng);
    acc += traj.final_estimate;
    acc_sq += traj.final_estimate.cwiseProduct(Eigen::Vector2d(traj.final_estimate));
  }
  acc /= n;
  acc_sq = acc_sq / n - acc.cwiseProduct(acc);
  for (int d = 0; d < 2; ++d) {
    const double sd = std::sqrt(post_cov(d, d));
    CHECK(std::abs(acc[d] - post_mean[d]) < 4.0 * sd / std::sqrt(static_cast<double>(n)));
    CHECK(std::sqrt(acc_sq[d]) > 0.7 * sd);
    CHECK(std::sqrt(acc_sq[d]) < 1.3 * sd);
  }
}

TEST_CASE("reverse-SDE alternative: frozen dynamics and posterior-matched terminal law") {
  // Zero drift freezes the state.
  BridgeParams still;
  still.lambda = 0.5;
  still.theta_bar_total = 0.0;
  Rng rng0(1, 1);
  const Eigen::VectorXd x = (Eigen::VectorXd(2) << 0.4, -0.2).finished();
  const Eigen::VectorXd x_lq = (Eigen::VectorXd(2) << 0.1, 0.1).finished();
  const auto frozen = bridge_native_reverse_step(
      x, x_lq, 0.5, 0.01, still, [](const Eigen::VectorXd& v, double) { return v; }, rng0);
  CHECK(frozen == x);

  // Full reverse run on a unimodal task: terminal moments match the
  // conditional posterior. Small lambda keeps the reverse SDE non-stiff.
  BridgeParams params;
  params.lambda = 0.5;
  params.theta_bar_total = 2.0;
  Gmm single;
  single.components.push_back(
      {1.0, Eigen::Vector2d(0.9, -0.5),
       (Eigen::Matrix2d() << 0.2, 0.0, 0.0, 0.2).finished()});
  auto prior = std::make_shared<Prior>(Prior::from_gmm(single));
  Rng task_rng(41, 0);
  const TaskInstance task =
      make_task(prior, LinearDegradation::dimming(2, 0.5, 0.3), 4.0, "uni", task_rng);
  auto cond_prior =
      std::make_shared<Prior>(condition_prior(*task.prior, task.degradation, task.x_lq));
  const ScoreFn score_fn = make_score_fn(cond_prior, params, task.x_lq);

  const Prior& posterior = *cond_prior;
  const Eigen::VectorXd post_mean = posterior.mean();
  const Eigen::MatrixXd post_cov = posterior.gmm.components[0].cov;

  const int n_traj = 12000;
  const int n_steps = 1600;
  const int chunks = 64;
  std::vector<Eigen::Vector2d> mean_parts(chunks, Eigen::Vector2d::Zero());
  std::vector<Eigen::Vector2d> sq_parts(chunks, Eigen::Vector2d::Zero());
  for_chunks(chunks, 0, [&](int chunk) {
    const int begin = chunk * n_traj / chunks;
    const int end = (chunk + 1) * n_traj / chunks;
    for (int s = begin; s < end; ++s) {
      Rng rng(41, stream_id(0xBB, static_cast<std::uint32_t>(s)));
      const Trajectory traj =
          bridge_native_run(task, n_steps, params, score_fn, RunOptions{}, rng);
      mean_parts[static_cast<std::size_t>(chunk)] += traj.final_estimate;
      sq_parts[static_cast<std::size_t>(chunk)] +=
          traj.final_estimate.cwiseProduct(Eigen::Vector2d(traj.final_estimate));
    }
  });
  Eigen::Vector2d mean_acc = Eigen::Vector2d::Zero();
  Eigen::Vector2d sq_acc = Eigen::Vector2d::Zero();
  for (int c = 0; c < chunks; ++c) {
    mean_acc += mean_parts[static_cast<std::size_t>(c)];
    sq_acc += sq_parts[static_cast<std::size_t>(c)];
  }
  mean_acc /= n_traj;
  sq_acc = sq_acc / n_traj - mean_acc.cwiseProduct(mean_acc);
  for (int d = 0; d < 2; ++d) {
    // Mean error standardized by the posterior spread (the means themselves
    // can sit near zero); variance compared relatively.
    CHECK(std::abs(mean_acc[d] - post_mean[d]) / std::sqrt(post_cov(d, d)) < 0.03);
    CHECK(std::abs(sq_acc[d] - post_cov(d, d)) / post_cov(d, d) < 0.03);
  }
}

TEST_CASE("run variants do not interfere under a shared seed") {
  const EngineFixture fx;
  const TaskInstance task = make_builtin_task("gmm", 66);
  const auto denoiser = make_denoiser(DenoiserKind::cond, task);
  const TimestepSchedule schedule = fx.schedule(fx.irsde, 20);

  Rng rng_a(66, 4);
  const Trajectory first =
      irbridge_run(task, schedule, *denoiser, fx.irsde, *fx.gen, RunOptions{}, rng_a);

  auto cond_prior =
      std::make_shared<Prior>(condition_prior(*task.prior, task.degradation, task.x_lq));
  const ScoreFn score_fn = make_score_fn(cond_prior, fx.params, task.x_lq);
  Rng rng_b(66, 5);
  (void)bridge_native_run(task, 50, fx.params, score_fn, RunOptions{}, rng_b);

  Rng rng_c(66, 4);
  const Trajectory again =
      irbridge_run(task, schedule, *denoiser, fx.irsde, *fx.gen, RunOptions{}, rng_c);
  CHECK(first.final_estimate == again.final_estimate);
}
