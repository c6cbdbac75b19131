#include "irbridge/engine.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "irbridge/transition.hpp"

namespace irbridge {

double mse(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw std::invalid_argument("mse: dimension mismatch");
  if (a.size() == 0) throw std::invalid_argument("mse: empty vectors");
  return (a - b).squaredNorm() / static_cast<double>(a.size());
}

double psnr(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double peak) {
  if (!(peak > 0.0)) throw std::invalid_argument("psnr: peak must be positive");
  const double err = mse(a, b);
  if (err == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / err);
}

std::unique_ptr<Denoiser> make_denoiser(DenoiserKind kind, const TaskInstance& task) {
  switch (kind) {
    case DenoiserKind::perfect:
      return std::make_unique<PerfectDenoiser>(task.x0);
    case DenoiserKind::uncond:
      return std::make_unique<OracleDenoiser>(task.prior);
    case DenoiserKind::cond: {
      auto conditioned = std::make_shared<Prior>(
          condition_prior(*task.prior, task.degradation, task.x_lq));
      return std::make_unique<OracleDenoiser>(std::move(conditioned));
    }
  }
  throw std::invalid_argument("make_denoiser: unknown kind");
}

namespace {

void fill_metrics(StepRecord& rec, const TaskInstance& task) {
  rec.mse_xhat = mse(rec.x_hat0, task.x0);
  rec.psnr_xhat = psnr(rec.x_hat0, task.x0, task.psnr_peak);
  rec.mse_state = mse(rec.state, task.x0);
  rec.psnr_state = psnr(rec.state, task.x0, task.psnr_peak);
}

void finalize(Trajectory& traj, const TaskInstance& task, Eigen::VectorXd final_estimate) {
  traj.final_estimate = std::move(final_estimate);
  traj.final_mse = mse(traj.final_estimate, task.x0);
  traj.final_psnr = psnr(traj.final_estimate, task.x0, task.psnr_peak);
}

}  // namespace

Trajectory irbridge_run(const TaskInstance& task, const TimestepSchedule& schedule,
                        const Denoiser& denoiser, const Path& bridge_path, const Path& gen_path,
                        const RunOptions& options, Rng& rng) {
  if (schedule.empty()) throw std::invalid_argument("irbridge_run: empty schedule");
  Trajectory traj;
  traj.steps.reserve(schedule.size());

  std::size_t k0 = 0;
  Eigen::VectorXd x;
  const PathCoefficients start = bridge_path.coeffs(schedule.steps[0].i);
  if (start.sigma == 0.0) {
    // Pinned start: the state at the first time is x_lq itself and the
    // transition there is undefined; skip to the next schedule entry.
    if (!options.skip_degenerate_initial)
      throw TransitionError(TransitionErrc::source_degenerate,
                            "initial bridge state has sigma == 0 and skipping is disabled");
    if (schedule.size() < 2)
      throw std::invalid_argument("irbridge_run: nothing left after skipping the initial step");
    x = task.x_lq;
    k0 = 1;
    traj.skipped_initial = true;
  } else {
    x = task.x_lq;
    if (!options.mean_init) x += start.sigma * rng.gaussian_vector(task.x_lq.size());
  }

  for (std::size_t k = k0; k < schedule.size(); ++k) {
    const double i_time = schedule.steps[k].i;
    const double j_time = schedule.steps[k].j;
    const PathCoefficients src = bridge_path.coeffs(i_time);
    const PathCoefficients dst = gen_path.coeffs(j_time);
    const Eigen::VectorXd x_gen = forward_transition(x, src, dst, task.x_lq, rng);
    StepRecord rec;
    rec.j = j_time;
    rec.x_hat0 = denoiser.estimate(x_gen, dst, task.x_lq);
    rec.i = schedule.next_i(k);
    const PathCoefficients next = bridge_path.coeffs(rec.i);
    x = reverse_transition(x_gen, dst, next, rec.x_hat0, task.x_lq);
    rec.state = x;
    fill_metrics(rec, task);
    traj.steps.push_back(std::move(rec));
  }
  finalize(traj, task, x);
  return traj;
}

Trajectory generative_run(const TaskInstance& task, int n_steps, const Denoiser& denoiser,
                          const Path& gen_path, double j_min, Rng& rng) {
  if (n_steps < 2) throw std::invalid_argument("generative_run: n_steps must be >= 2");
  if (!(j_min > 0.0 && j_min < 1.0))
    throw std::invalid_argument("generative_run: j_min must lie in (0,1)");
  Trajectory traj;
  traj.steps.reserve(static_cast<std::size_t>(n_steps));
  Eigen::VectorXd x = rng.gaussian_vector(task.x0.size());
  Eigen::VectorXd xhat;
  for (int k = 0; k < n_steps; ++k) {
    const double u = static_cast<double>(k) / (n_steps - 1);
    const double j_time = 1.0 + (j_min - 1.0) * u;
    const PathCoefficients c = gen_path.coeffs(j_time);
    xhat = denoiser.estimate(x, c, task.x_lq);
    StepRecord rec;
    rec.j = j_time;
    rec.x_hat0 = xhat;
    if (k + 1 < n_steps) {
      const double u_next = static_cast<double>(k + 1) / (n_steps - 1);
      const PathCoefficients cn = gen_path.coeffs(1.0 + (j_min - 1.0) * u_next);
      const Eigen::VectorXd noise_part = x - c.f * xhat - c.b_mul * task.x_lq;
      x = cn.f * xhat + cn.b_mul * task.x_lq + (cn.sigma / c.sigma) * noise_part;
    }
    rec.state = x;
    fill_metrics(rec, task);
    traj.steps.push_back(std::move(rec));
  }
  finalize(traj, task, xhat);
  return traj;
}

Eigen::VectorXd bridge_native_reverse_step(const Eigen::VectorXd& x, const Eigen::VectorXd& x_lq,
                                           double t, double dt, const BridgeParams& params,
                                           const ScoreFn& score_fn, Rng& rng) {
  if (!(dt > 0.0)) throw std::invalid_argument("bridge_native_reverse_step: dt must be positive");
  if (x.size() != x_lq.size())
    throw std::invalid_argument("bridge_native_reverse_step: dimension mismatch");
  const double theta = params.theta(t);
  const double g_sq = params.g_sq(t);
  Eigen::VectorXd out = x - dt * (theta * (x_lq - x));
  if (g_sq > 0.0) {
    out += dt * g_sq * score_fn(x, t);
    const double g_sqrt_dt = std::sqrt(g_sq * dt);
    for (Eigen::Index d = 0; d < out.size(); ++d) out[d] += g_sqrt_dt * rng.gaussian();
  }
  return out;
}

ScoreFn make_score_fn(std::shared_ptr<const Prior> prior, const BridgeParams& params,
                      Eigen::VectorXd x_lq) {
  auto ops = std::make_shared<PriorOps>(std::move(prior));
  return [ops, params, x_lq = std::move(x_lq)](const Eigen::VectorXd& x, double t) {
    return ops->score(x, irsde_coeffs(params, t), x_lq);
  };
}

Trajectory bridge_native_run(const TaskInstance& task, int n_steps, const BridgeParams& params,
                             const ScoreFn& score_fn, const RunOptions& options, Rng& rng) {
  if (n_steps < 2) throw std::invalid_argument("bridge_native_run: n_steps must be >= 2");
  Trajectory traj;
  const double T = params.horizon;
  const double h = T / n_steps;
  const PathCoefficients terminal = irsde_coeffs(params, T);
  Eigen::VectorXd x = task.x_lq;
  if (!options.mean_init) x += terminal.sigma * rng.gaussian_vector(task.x_lq.size());
  // Integrate down to t = h; the marginal at t = 0 is degenerate, so the run
  // stops one step early.
  for (int k = 0; k < n_steps - 1; ++k) {
    const double t = T - k * h;
    x = bridge_native_reverse_step(x, task.x_lq, t, h, params, score_fn, rng);
    StepRecord rec;
    rec.i = t - h;
    rec.j = t;
    rec.state = x;
    rec.x_hat0 = x;
    fill_metrics(rec, task);
    traj.steps.push_back(std::move(rec));
  }
  finalize(traj, task, x);
  return traj;
}

}  // namespace irbridge
