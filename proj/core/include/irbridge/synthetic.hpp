#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "irbridge/path.hpp"
#include "irbridge/rng.hpp"

namespace irbridge {

struct GaussianComponent {
  double weight = 1.0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

struct Gmm {
  std::vector<GaussianComponent> components;

  int dim() const;
  /// Weights must already sum to 1 within 1e-12; rescales the residual.
  void normalize_weights();
};

/// Mixture prior behind an affine embedding: x0 = base + basis * z with
/// z ~ Gmm and basis orthonormal-columned. Fresh priors have base = 0 and
/// basis = I; exact (noise-free) conditioning collapses observed directions
/// into base and shrinks the latent rank.
struct Prior {
  Eigen::VectorXd base;
  Eigen::MatrixXd basis;
  Gmm gmm;

  int dim() const { return static_cast<int>(base.size()); }
  int latent_dim() const { return static_cast<int>(basis.cols()); }
  Eigen::VectorXd mean() const;

  static Prior from_gmm(Gmm gmm);
  /// Stationary RBF covariance on an h x w pixel lattice with constant mean;
  /// jitter keeps the matrix positive definite.
  static Prior gaussian_field(int height, int width, double length_scale, double variance,
                              double mean_value, double jitter = 1e-8);
};

/// y = A x0 + c + noise_std * eps. A is square here (degraded images live in
/// the clean image's space, as the bridge endpoint requires).
struct LinearDegradation {
  Eigen::MatrixXd A;
  Eigen::VectorXd c;
  double noise_std = 0.0;

  static LinearDegradation identity(int dim, double noise_std = 0.0);
  static LinearDegradation dimming(int dim, double a, double noise_std);
  /// keep[k] in {0,1}; dropped pixels get all-zero rows.
  static LinearDegradation mask(const std::vector<int>& keep, double noise_std);
  static LinearDegradation random_mask(int dim, double keep_prob, double noise_std, Rng& rng);
  /// k x k uniform blur on an h x w lattice, in-bounds neighbors averaged.
  static LinearDegradation uniform_blur(int height, int width, int ksize, double noise_std);
};

struct TaskInstance {
  std::shared_ptr<const Prior> prior;
  LinearDegradation degradation;
  Eigen::VectorXd x0;
  Eigen::VectorXd x_lq;
  double psnr_peak = 1.0;
  std::string name;
};

Eigen::VectorXd sample_prior(const Prior& prior, Rng& rng);
Eigen::VectorXd degrade(const Eigen::VectorXd& x0, const LinearDegradation& degradation, Rng& rng);
TaskInstance make_task(std::shared_ptr<const Prior> prior, LinearDegradation degradation,
                       double psnr_peak, std::string name, Rng& rng);

/// Conditions the prior on an observation y of the degradation model. A
/// positive noise_std keeps every component full rank (the mixture stays a
/// mixture); noise_std == 0 pins the observed subspace exactly via SVD and
/// returns a prior of smaller latent rank.
Prior condition_prior(const Prior& prior, const LinearDegradation& degradation,
                      const Eigen::VectorXd& y);

/// E[x0 | y]: mixture mean of the conditioned prior. Closed form, no
/// diffusion machinery involved; serves as the restoration floor.
Eigen::VectorXd bayes_posterior_mean(const Prior& prior, const LinearDegradation& degradation,
                                     const Eigen::VectorXd& y);

/// Posterior and score evaluations of a prior pushed through a path marginal
/// x_t = f x0 + b_mul x_lq + sigma eps. Caches per-component spectral
/// decompositions so per-step calls cost O(r^2).
class PriorOps {
 public:
  explicit PriorOps(std::shared_ptr<const Prior> prior);

  const Prior& prior() const { return *prior_; }

  /// E[x0 | x_t]. A degenerate marginal (sigma == 0) cannot be conditioned;
  /// the state is inverted through f instead (or the prior mean when f == 0)
  /// and *degenerate is set.
  Eigen::VectorXd posterior_mean(const Eigen::VectorXd& x_t, const PathCoefficients& coeffs,
                                 const Eigen::VectorXd& x_lq, bool* degenerate = nullptr) const;

  /// Gradient of log p_t at x; requires sigma > 0.
  Eigen::VectorXd score(const Eigen::VectorXd& x, const PathCoefficients& coeffs,
                        const Eigen::VectorXd& x_lq) const;

  /// log p_t(x); requires sigma > 0.
  double log_density(const Eigen::VectorXd& x, const PathCoefficients& coeffs,
                     const Eigen::VectorXd& x_lq) const;

 private:
  struct Component {
    double log_weight;
    Eigen::VectorXd mean;      // latent mean
    Eigen::MatrixXd q;         // cov = q * diag(evals) * q^T
    Eigen::VectorXd evals;
    Eigen::VectorXd mean_rot;  // q^T mean
  };

  std::shared_ptr<const Prior> prior_;
  std::vector<Component> comps_;
};

Eigen::VectorXd posterior_mean_uncond(const Prior& prior, const Eigen::VectorXd& x_t,
                                      const PathCoefficients& coeffs, const Eigen::VectorXd& x_lq);

/// Conditions on the degradation observation first, then conditions on x_t.
Eigen::VectorXd posterior_mean_cond(const Prior& prior, const LinearDegradation& degradation,
                                    const Eigen::VectorXd& x_t, const PathCoefficients& coeffs,
                                    const Eigen::VectorXd& x_lq);

Eigen::VectorXd score(const Prior& prior, const Eigen::VectorXd& x,
                      const PathCoefficients& coeffs, const Eigen::VectorXd& x_lq);

/// Noise-prediction view of an x0 estimate: (x_t - f xhat - b_mul x_lq) / sigma.
Eigen::VectorXd eps_from_xhat(const Eigen::VectorXd& x_t, const PathCoefficients& coeffs,
                              const Eigen::VectorXd& x_lq, const Eigen::VectorXd& xhat);

}  // namespace irbridge
