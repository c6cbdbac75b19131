#pragma once

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "irbridge/path.hpp"
#include "irbridge/rng.hpp"
#include "irbridge/schedule.hpp"
#include "irbridge/sde.hpp"
#include "irbridge/synthetic.hpp"

namespace irbridge {

double mse(const Eigen::VectorXd& a, const Eigen::VectorXd& b);
/// 10 * log10(peak^2 / mse); +inf when mse == 0.
double psnr(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double peak);

/// x0 estimator consumed by the inference loops.
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual Eigen::VectorXd estimate(const Eigen::VectorXd& x, const PathCoefficients& coeffs,
                                   const Eigen::VectorXd& x_lq) const = 0;
};

/// Returns the task's true x0 regardless of the state.
class PerfectDenoiser final : public Denoiser {
 public:
  explicit PerfectDenoiser(Eigen::VectorXd x0) : x0_(std::move(x0)) {}
  Eigen::VectorXd estimate(const Eigen::VectorXd&, const PathCoefficients&,
                           const Eigen::VectorXd&) const override {
    return x0_;
  }

 private:
  Eigen::VectorXd x0_;
};

/// Exact posterior mean under a prior (optionally pre-conditioned on the
/// degradation observation, which is what makes it "conditional").
class OracleDenoiser final : public Denoiser {
 public:
  explicit OracleDenoiser(std::shared_ptr<const Prior> prior) : ops_(std::move(prior)) {}
  Eigen::VectorXd estimate(const Eigen::VectorXd& x, const PathCoefficients& coeffs,
                           const Eigen::VectorXd& x_lq) const override {
    return ops_.posterior_mean(x, coeffs, x_lq);
  }

 private:
  PriorOps ops_;
};

enum class DenoiserKind { perfect, cond, uncond };
std::unique_ptr<Denoiser> make_denoiser(DenoiserKind kind, const TaskInstance& task);

struct StepRecord {
  double i = 0.0;  // bridge time the reverse transition lands on (0 at the end)
  double j = 0.0;  // generative time the state was denoised at
  Eigen::VectorXd state;   // bridge state after the reverse transition
  Eigen::VectorXd x_hat0;  // denoiser estimate at j
  double mse_xhat = 0.0, psnr_xhat = 0.0;
  double mse_state = 0.0, psnr_state = 0.0;
};

struct Trajectory {
  std::vector<StepRecord> steps;
  Eigen::VectorXd final_estimate;
  double final_mse = 0.0;
  double final_psnr = 0.0;
  std::uint64_t seed = 0;
  bool skipped_initial = false;
};

struct RunOptions {
  bool skip_degenerate_initial = true;  // pinned-endpoint bridges skip step 0
  bool mean_init = false;               // init at x_lq instead of the terminal draw
};

/// The iterative restoration loop: initialize at the bridge terminal law,
/// then per schedule step run forward transition -> denoise -> reverse
/// transition to the next bridge time (exactly 0 after the last step).
Trajectory irbridge_run(const TaskInstance& task, const TimestepSchedule& schedule,
                        const Denoiser& denoiser, const Path& bridge_path, const Path& gen_path,
                        const RunOptions& options, Rng& rng);

/// Deterministic x0-anchored sampler from pure noise over a descending
/// generative grid (the zero-extra-noise ancestral rule); the baseline the
/// bridge loop is compared against.
Trajectory generative_run(const TaskInstance& task, int n_steps, const Denoiser& denoiser,
                          const Path& gen_path, double j_min, Rng& rng);

using ScoreFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&, double t)>;

/// One Euler-Maruyama step of the reverse-time mean-reverting SDE at time t
/// (step size dt > 0, moving toward 0) using an exact score:
///   x' = x - dt * [theta_t (x_lq - x) - g_t^2 score(x, t)] + g_t sqrt(dt) xi.
Eigen::VectorXd bridge_native_reverse_step(const Eigen::VectorXd& x, const Eigen::VectorXd& x_lq,
                                           double t, double dt, const BridgeParams& params,
                                           const ScoreFn& score_fn, Rng& rng);

/// Full reverse integration from the terminal law down to t = T/n_steps
/// (one step short of the degenerate marginal at t = 0).
Trajectory bridge_native_run(const TaskInstance& task, int n_steps, const BridgeParams& params,
                             const ScoreFn& score_fn, const RunOptions& options, Rng& rng);

/// Score of the path marginal for a prior, as a ScoreFn over bridge time.
ScoreFn make_score_fn(std::shared_ptr<const Prior> prior, const BridgeParams& params,
                      Eigen::VectorXd x_lq);

}  // namespace irbridge
