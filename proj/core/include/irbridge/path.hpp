#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace irbridge {

/// Coefficients of a linear-Gaussian marginal at one time:
///   x_t = f * x0 + b_mul * x_lq + sigma * eps,  eps ~ N(0, I).
///
/// sigma is a standard deviation everywhere in this library; process
/// definitions that are naturally variance-form are converted at the source.
struct PathCoefficients {
  double f = 1.0;
  double b_mul = 0.0;
  double sigma = 0.0;

  /// sigma/f; +inf when f == 0 and sigma > 0, NaN when both vanish.
  double noise_to_signal() const;
};

/// Applies the reparameterized form elementwise. noise is a caller-supplied
/// standard-normal draw of matching dimension.
Eigen::VectorXd reparam_sample(const PathCoefficients& coeffs, const Eigen::VectorXd& x0,
                               const Eigen::VectorXd& x_lq, const Eigen::VectorXd& noise);

// ---------------------------------------------------------------------------
// Variance-preserving noising chain (DDPM-style).

struct DdpmSchedule {
  int n_steps = 0;
  std::vector<double> betas;       // betas[k] is the rate of step k+1, in (0,1)
  std::vector<double> alpha_bars;  // alpha_bars[k] = prod_{s<=k} (1 - betas[s])

  static DdpmSchedule from_betas(std::vector<double> betas);
  /// betas linearly spaced between beta_min and beta_max.
  static DdpmSchedule linear(int n_steps, double beta_min = 1e-4, double beta_max = 0.02);
  /// betas linearly spaced in sqrt space (the scaled-linear variant used by
  /// latent-diffusion checkpoints).
  static DdpmSchedule sqrt_linear(int n_steps, double beta_first = 0.00085,
                                  double beta_last = 0.012);
};

/// Coefficients at an integer step in [0, n_steps]; step 0 is the identity.
PathCoefficients ddpm_coeffs(const DdpmSchedule& schedule, int step);

/// Rectified-flow interpolation, t in [0, 1]: (1 - t, 0, t).
PathCoefficients rectified_flow_coeffs(double t);

// ---------------------------------------------------------------------------
// Mean-reverting bridges toward the conditioning image.

enum class ThetaSchedule { constant, cosine };

/// Parameters of the Ornstein-Uhlenbeck family used by the restoration
/// bridges: drift rate theta_t with cumulative theta_bar(t), stationary
/// standard deviation lambda, horizon T. The diffusion is tied to the drift by
/// g_t^2 = 2 * lambda^2 * theta_t and is never stored independently.
struct BridgeParams {
  double lambda = 2.0;
  double theta_bar_total = 2.0;
  double horizon = 1.0;
  ThetaSchedule theta_schedule = ThetaSchedule::constant;

  double theta_bar(double t) const;  // integral of theta over [0, t]
  double theta(double t) const;
  double g_sq(double t) const { return 2.0 * lambda * lambda * theta(t); }
  /// lambda^2 * (1 - exp(-2 * (theta_bar(t) - theta_bar(s)))), s <= t.
  double sigma_bar_sq(double s, double t) const;
};

/// Marginal of the mean-reverting SDE: mean x_lq + (x0 - x_lq) e^{-theta_bar},
/// variance lambda^2 (1 - e^{-2 theta_bar}).
PathCoefficients irsde_coeffs(const BridgeParams& params, double t);

/// Marginal of the endpoint-pinned (h-transformed) process. Pins x_T = x_lq
/// exactly: sigma(T) = 0 and f + b_mul = 1 for all t.
PathCoefficients goub_coeffs(const BridgeParams& params, double t);

// ---------------------------------------------------------------------------
// Residual-shift chains (RDDM / DiffUIR reparameterizations).

/// Caller-supplied residual schedule. Entries are indexed 0..n_steps with
/// alpha_bars[0] == 0 so that step 0 is the identity. beta_bars are variances.
struct ResidualSchedule {
  int n_steps = 0;
  std::vector<double> alpha_bars;
  std::vector<double> beta_bars;
  std::vector<double> delta_bars;  // required for DiffUIR only

  /// Simple linear ramps, shipped for registry completeness; the canonical
  /// schedules live in the respective original works.
  static ResidualSchedule default_linear(int n_steps, bool with_delta);
};

PathCoefficients rddm_coeffs(const ResidualSchedule& schedule, int step);
PathCoefficients diffuir_coeffs(const ResidualSchedule& schedule, int step);

// ---------------------------------------------------------------------------
// Uniform continuous-time view. All cross-process operations address a
// process by normalized time tau in [0, 1]; discrete chains map step k to
// tau = k / n_steps and interpolate alpha_bar linearly between steps.

class Path {
 public:
  virtual ~Path() = default;
  virtual PathCoefficients coeffs(double tau) const = 0;
  virtual std::string name() const = 0;
};

class DdpmPath final : public Path {
 public:
  DdpmPath(DdpmSchedule schedule, std::string name);
  PathCoefficients coeffs(double tau) const override;
  std::string name() const override { return name_; }
  const DdpmSchedule& schedule() const { return schedule_; }

 private:
  DdpmSchedule schedule_;
  std::string name_;
};

class RectifiedFlowPath final : public Path {
 public:
  PathCoefficients coeffs(double tau) const override { return rectified_flow_coeffs(tau); }
  std::string name() const override { return "rf"; }
};

class IrSdePath final : public Path {
 public:
  explicit IrSdePath(BridgeParams params) : params_(params) {}
  PathCoefficients coeffs(double tau) const override;
  std::string name() const override { return "irsde"; }
  const BridgeParams& params() const { return params_; }

 private:
  BridgeParams params_;
};

class GoubPath final : public Path {
 public:
  explicit GoubPath(BridgeParams params);
  PathCoefficients coeffs(double tau) const override;
  std::string name() const override { return "goub"; }
  const BridgeParams& params() const { return params_; }

 private:
  BridgeParams params_;
};

class ResidualPath final : public Path {
 public:
  ResidualPath(ResidualSchedule schedule, bool diffuir);
  PathCoefficients coeffs(double tau) const override;
  std::string name() const override { return diffuir_ ? "diffuir" : "rddm"; }

 private:
  ResidualSchedule schedule_;
  bool diffuir_;
};

}  // namespace irbridge
