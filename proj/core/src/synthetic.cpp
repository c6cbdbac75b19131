#include "irbridge/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace irbridge {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)

double logsumexp(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

int Gmm::dim() const {
  return components.empty() ? 0 : static_cast<int>(components.front().mean.size());
}

void Gmm::normalize_weights() {
  double sum = 0.0;
  for (const auto& c : components) {
    if (!(c.weight > 0.0)) throw std::invalid_argument("Gmm: weights must be positive");
    sum += c.weight;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    if (sum <= 0.0) throw std::invalid_argument("Gmm: weights must sum to 1");
    for (auto& c : components) c.weight /= sum;
  }
}

Eigen::VectorXd Prior::mean() const {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(latent_dim());
  for (const auto& c : gmm.components) m += c.weight * c.mean;
  return base + basis * m;
}

Prior Prior::from_gmm(Gmm gmm) {
  if (gmm.components.empty()) throw std::invalid_argument("Prior: empty mixture");
  const int d = gmm.dim();
  for (const auto& c : gmm.components) {
    if (c.mean.size() != d || c.cov.rows() != d || c.cov.cols() != d)
      throw std::invalid_argument("Prior: inconsistent component dimensions");
  }
  gmm.normalize_weights();
  Prior prior;
  prior.base = Eigen::VectorXd::Zero(d);
  prior.basis = Eigen::MatrixXd::Identity(d, d);
  prior.gmm = std::move(gmm);
  return prior;
}

Prior Prior::gaussian_field(int height, int width, double length_scale, double variance,
                            double mean_value, double jitter) {
  if (height < 1 || width < 1) throw std::invalid_argument("gaussian_field: bad lattice");
  const int d = height * width;
  Eigen::MatrixXd cov(d, d);
  for (int p = 0; p < d; ++p) {
    const double pr = p / width, pc = p % width;
    for (int q = 0; q <= p; ++q) {
      const double qr = q / width, qc = q % width;
      const double dist_sq = (pr - qr) * (pr - qr) + (pc - qc) * (pc - qc);
      const double k = variance * std::exp(-dist_sq / (2.0 * length_scale * length_scale));
      cov(p, q) = k;
      cov(q, p) = k;
    }
  }
  if (variance > 0.0) cov.diagonal().array() += jitter;
  GaussianComponent comp;
  comp.weight = 1.0;
  comp.mean = Eigen::VectorXd::Zero(d);
  comp.cov = std::move(cov);
  Gmm gmm;
  gmm.components.push_back(std::move(comp));
  Prior prior = from_gmm(std::move(gmm));
  prior.base = Eigen::VectorXd::Constant(d, mean_value);
  return prior;
}

// ---------------------------------------------------------------------------

LinearDegradation LinearDegradation::identity(int dim, double noise_std) {
  return {Eigen::MatrixXd::Identity(dim, dim), Eigen::VectorXd::Zero(dim), noise_std};
}

LinearDegradation LinearDegradation::dimming(int dim, double a, double noise_std) {
  if (!(a > 0.0 && a <= 1.0)) throw std::invalid_argument("dimming: a must lie in (0,1]");
  return {a * Eigen::MatrixXd::Identity(dim, dim), Eigen::VectorXd::Zero(dim), noise_std};
}

LinearDegradation LinearDegradation::mask(const std::vector<int>& keep, double noise_std) {
  const int d = static_cast<int>(keep.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(d, d);
  for (int k = 0; k < d; ++k)
    if (keep[static_cast<std::size_t>(k)]) A(k, k) = 1.0;
  return {std::move(A), Eigen::VectorXd::Zero(d), noise_std};
}

LinearDegradation LinearDegradation::random_mask(int dim, double keep_prob, double noise_std,
                                                 Rng& rng) {
  std::vector<int> keep(static_cast<std::size_t>(dim));
  for (auto& k : keep) k = rng.uniform() < keep_prob ? 1 : 0;
  return mask(keep, noise_std);
}

LinearDegradation LinearDegradation::uniform_blur(int height, int width, int ksize,
                                                  double noise_std) {
  if (ksize < 1 || ksize % 2 == 0) throw std::invalid_argument("uniform_blur: odd ksize required");
  const int d = height * width;
  const int half = ksize / 2;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(d, d);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      int count = 0;
      for (int dr = -half; dr <= half; ++dr)
        for (int dc = -half; dc <= half; ++dc) {
          const int rr = r + dr, cc = c + dc;
          if (rr >= 0 && rr < height && cc >= 0 && cc < width) ++count;
        }
      for (int dr = -half; dr <= half; ++dr)
        for (int dc = -half; dc <= half; ++dc) {
          const int rr = r + dr, cc = c + dc;
          if (rr >= 0 && rr < height && cc >= 0 && cc < width)
            A(r * width + c, rr * width + cc) = 1.0 / count;
        }
    }
  }
  return {std::move(A), Eigen::VectorXd::Zero(d), noise_std};
}

// ---------------------------------------------------------------------------

Eigen::VectorXd sample_prior(const Prior& prior, Rng& rng) {
  const auto& comps = prior.gmm.components;
  double u = rng.uniform();
  std::size_t pick = comps.size() - 1;
  double acc = 0.0;
  for (std::size_t k = 0; k < comps.size(); ++k) {
    acc += comps[k].weight;
    if (u < acc) {
      pick = k;
      break;
    }
  }
  const auto& comp = comps[pick];
  const int r = static_cast<int>(comp.mean.size());
  if (r == 0) return prior.base;
  // LDLT instead of LLT: semidefinite covariances (a point-mass component)
  // are legitimate here.
  Eigen::LDLT<Eigen::MatrixXd> ldlt(comp.cov);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("sample_prior: component covariance not positive semidefinite");
  const Eigen::VectorXd scale = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt();
  Eigen::VectorXd w = scale.cwiseProduct(rng.gaussian_vector(r));
  w = ldlt.matrixL() * w;
  const Eigen::VectorXd z = comp.mean + ldlt.transpositionsP().transpose() * w;
  return prior.base + prior.basis * z;
}

Eigen::VectorXd degrade(const Eigen::VectorXd& x0, const LinearDegradation& degradation,
                        Rng& rng) {
  if (degradation.A.cols() != x0.size() || degradation.c.size() != degradation.A.rows())
    throw std::invalid_argument("degrade: dimension mismatch");
  Eigen::VectorXd y = degradation.A * x0 + degradation.c;
  if (degradation.noise_std > 0.0) y += degradation.noise_std * rng.gaussian_vector(y.size());
  return y;
}

TaskInstance make_task(std::shared_ptr<const Prior> prior, LinearDegradation degradation,
                       double psnr_peak, std::string name, Rng& rng) {
  if (degradation.A.rows() != prior->dim())
    throw std::invalid_argument("make_task: degradation must map into the clean-image space");
  TaskInstance task;
  task.x0 = sample_prior(*prior, rng);
  task.x_lq = degrade(task.x0, degradation, rng);
  task.prior = std::move(prior);
  task.degradation = std::move(degradation);
  task.psnr_peak = psnr_peak;
  task.name = std::move(name);
  return task;
}

// ---------------------------------------------------------------------------

namespace {

double gaussian_logpdf(const Eigen::VectorXd& resid, const Eigen::LLT<Eigen::MatrixXd>& llt) {
  const Eigen::VectorXd half = llt.matrixL().solve(resid);
  const double logdet = llt.matrixLLT().diagonal().array().log().sum();
  return -0.5 * (half.squaredNorm() + static_cast<double>(resid.size()) * kLog2Pi) - logdet;
}

void renormalize_log_weights(Gmm& gmm, std::vector<double>& log_w) {
  const double lse = logsumexp(log_w);
  if (!std::isfinite(lse))
    throw std::runtime_error("condition_prior: all component weights vanished");
  for (std::size_t k = 0; k < log_w.size(); ++k)
    gmm.components[k].weight = std::exp(log_w[k] - lse);
}

}  // namespace

Prior condition_prior(const Prior& prior, const LinearDegradation& degradation,
                      const Eigen::VectorXd& y) {
  if (degradation.A.cols() != prior.dim() || y.size() != degradation.A.rows() ||
      degradation.c.size() != degradation.A.rows())
    throw std::invalid_argument("condition_prior: dimension mismatch");
  const Eigen::VectorXd resid0 = y - degradation.c - degradation.A * prior.base;
  const Eigen::MatrixXd M = degradation.A * prior.basis;  // obs x r
  const int r = prior.latent_dim();

  if (degradation.noise_std > 0.0) {
    const double nv = degradation.noise_std * degradation.noise_std;
    Prior out = prior;
    std::vector<double> log_w(prior.gmm.components.size());
    for (std::size_t k = 0; k < prior.gmm.components.size(); ++k) {
      const auto& comp = prior.gmm.components[k];
      auto& comp_out = out.gmm.components[k];
      const Eigen::MatrixXd G = M * comp.cov;  // obs x r
      Eigen::MatrixXd C = G * M.transpose();
      C.diagonal().array() += nv;
      C = 0.5 * (C + C.transpose());
      Eigen::LLT<Eigen::MatrixXd> llt(C);
      if (llt.info() != Eigen::Success)
        throw std::runtime_error("condition_prior: observation covariance not SPD");
      const Eigen::VectorXd resid = resid0 - M * comp.mean;
      comp_out.mean = comp.mean + G.transpose() * llt.solve(resid);
      Eigen::MatrixXd S = comp.cov - G.transpose() * llt.solve(G);
      comp_out.cov = 0.5 * (S + S.transpose());
      log_w[k] = std::log(comp.weight) + gaussian_logpdf(resid, llt);
    }
    renormalize_log_weights(out.gmm, log_w);
    return out;
  }

  // Noise-free observation: collapse the observed subspace exactly.
  Eigen::BDCSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double tol =
      sv.size() == 0 ? 0.0 : sv(0) * std::max(M.rows(), M.cols()) * 1e-12;
  int rank = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k)
    if (sv(k) > tol) ++rank;
  if (rank == 0) return prior;

  const Eigen::MatrixXd V1 = svd.matrixV().leftCols(rank);
  const Eigen::MatrixXd V2 = svd.matrixV().rightCols(r - rank);
  Eigen::VectorXd a = svd.matrixU().leftCols(rank).transpose() * resid0;
  for (int k = 0; k < rank; ++k) a(k) /= sv(k);

  Prior out;
  out.base = prior.base + prior.basis * (V1 * a);
  out.basis = prior.basis * V2;
  out.gmm.components.resize(prior.gmm.components.size());
  std::vector<double> log_w(prior.gmm.components.size());
  for (std::size_t k = 0; k < prior.gmm.components.size(); ++k) {
    const auto& comp = prior.gmm.components[k];
    auto& comp_out = out.gmm.components[k];
    const Eigen::VectorXd m_a = V1.transpose() * comp.mean;
    const Eigen::MatrixXd S_aa = V1.transpose() * comp.cov * V1;
    Eigen::LLT<Eigen::MatrixXd> llt(S_aa);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("condition_prior: observed-block covariance not SPD");
    const Eigen::VectorXd da = a - m_a;
    if (r - rank == 0) {
      comp_out.mean = Eigen::VectorXd(0);
      comp_out.cov = Eigen::MatrixXd(0, 0);
    } else {
      const Eigen::MatrixXd S_ab = V1.transpose() * comp.cov * V2;
      const Eigen::MatrixXd S_bb = V2.transpose() * comp.cov * V2;
      comp_out.mean = V2.transpose() * comp.mean + S_ab.transpose() * llt.solve(da);
      Eigen::MatrixXd S = S_bb - S_ab.transpose() * llt.solve(S_ab);
      comp_out.cov = 0.5 * (S + S.transpose());
    }
    log_w[k] = std::log(comp.weight) + gaussian_logpdf(da, llt);
  }
  renormalize_log_weights(out.gmm, log_w);
  return out;
}

Eigen::VectorXd bayes_posterior_mean(const Prior& prior, const LinearDegradation& degradation,
                                     const Eigen::VectorXd& y) {
  return condition_prior(prior, degradation, y).mean();
}

// ---------------------------------------------------------------------------

PriorOps::PriorOps(std::shared_ptr<const Prior> prior) : prior_(std::move(prior)) {
  const auto& comps = prior_->gmm.components;
  comps_.resize(comps.size());
  for (std::size_t k = 0; k < comps.size(); ++k) {
    const auto& src = comps[k];
    auto& dst = comps_[k];
    dst.log_weight = std::log(src.weight);
    dst.mean = src.mean;
    if (src.mean.size() == 0) {
      dst.q = Eigen::MatrixXd(0, 0);
      dst.evals = Eigen::VectorXd(0);
      dst.mean_rot = Eigen::VectorXd(0);
      continue;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(src.cov);
    if (eig.info() != Eigen::Success)
      throw std::runtime_error("PriorOps: eigendecomposition failed");
    dst.q = eig.eigenvectors();
    dst.evals = eig.eigenvalues().cwiseMax(0.0);
    dst.mean_rot = dst.q.transpose() * src.mean;
  }
}

Eigen::VectorXd PriorOps::posterior_mean(const Eigen::VectorXd& x_t,
                                         const PathCoefficients& coeffs,
                                         const Eigen::VectorXd& x_lq, bool* degenerate) const {
  if (x_t.size() != prior_->dim() || x_lq.size() != prior_->dim())
    throw std::invalid_argument("posterior_mean: dimension mismatch");
  if (degenerate) *degenerate = false;
  if (coeffs.sigma == 0.0) {
    if (degenerate) *degenerate = true;
    if (coeffs.f > 0.0) return (x_t - coeffs.b_mul * x_lq) / coeffs.f;
    return prior_->mean();
  }
  const int r = prior_->latent_dim();
  if (r == 0) return prior_->base;

  const double f = coeffs.f;
  const double var = coeffs.sigma * coeffs.sigma;
  const Eigen::VectorXd y = x_t - coeffs.b_mul * x_lq - f * prior_->base;
  const Eigen::VectorXd yproj = prior_->basis.transpose() * y;

  std::vector<double> log_post(comps_.size());
  std::vector<Eigen::VectorXd> comp_mean(comps_.size());
  for (std::size_t k = 0; k < comps_.size(); ++k) {
    const auto& c = comps_[k];
    const Eigen::VectorXd u = c.q.transpose() * yproj;
    double quad = 0.0, logdet = 0.0;
    Eigen::VectorXd gain(r);
    for (int i = 0; i < r; ++i) {
      const double denom = f * f * c.evals(i) + var;
      const double resid = u(i) - f * c.mean_rot(i);
      quad += resid * resid / denom;
      logdet += std::log(denom);
      gain(i) = f * c.evals(i) / denom * resid;
    }
    log_post[k] = c.log_weight - 0.5 * (quad + logdet);
    comp_mean[k] = c.mean + c.q * gain;
  }
  const double lse = logsumexp(log_post);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(r);
  for (std::size_t k = 0; k < comps_.size(); ++k)
    z += std::exp(log_post[k] - lse) * comp_mean[k];
  return prior_->base + prior_->basis * z;
}

Eigen::VectorXd PriorOps::score(const Eigen::VectorXd& x, const PathCoefficients& coeffs,
                                const Eigen::VectorXd& x_lq) const {
  if (coeffs.sigma == 0.0) throw std::invalid_argument("score: sigma == 0");
  if (x.size() != prior_->dim() || x_lq.size() != prior_->dim())
    throw std::invalid_argument("score: dimension mismatch");
  const double f = coeffs.f;
  const double var = coeffs.sigma * coeffs.sigma;
  const int r = prior_->latent_dim();
  const Eigen::VectorXd y = x - coeffs.b_mul * x_lq - f * prior_->base;
  if (r == 0) return -y / var;
  const Eigen::VectorXd yproj = prior_->basis.transpose() * y;

  std::vector<double> log_post(comps_.size());
  std::vector<Eigen::VectorXd> comp_grad(comps_.size());
  for (std::size_t k = 0; k < comps_.size(); ++k) {
    const auto& c = comps_[k];
    const Eigen::VectorXd u = c.q.transpose() * yproj;
    double quad = 0.0, logdet = 0.0;
    Eigen::VectorXd grad_rot(r);
    for (int i = 0; i < r; ++i) {
      const double denom = f * f * c.evals(i) + var;
      const double resid = u(i) - f * c.mean_rot(i);
      quad += resid * resid / denom;
      logdet += std::log(denom);
      grad_rot(i) = -resid / denom;
    }
    log_post[k] = c.log_weight - 0.5 * (quad + logdet);
    comp_grad[k] = c.q * grad_rot;
  }
  const double lse = logsumexp(log_post);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(r);
  for (std::size_t k = 0; k < comps_.size(); ++k)
    g += std::exp(log_post[k] - lse) * comp_grad[k];
  return prior_->basis * g - (y - prior_->basis * yproj) / var;
}

double PriorOps::log_density(const Eigen::VectorXd& x, const PathCoefficients& coeffs,
                             const Eigen::VectorXd& x_lq) const {
  if (coeffs.sigma == 0.0) throw std::invalid_argument("log_density: sigma == 0");
  const double f = coeffs.f;
  const double var = coeffs.sigma * coeffs.sigma;
  const int d = prior_->dim();
  const int r = prior_->latent_dim();
  const Eigen::VectorXd y = x - coeffs.b_mul * x_lq - f * prior_->base;
  const Eigen::VectorXd yproj = prior_->basis.transpose() * y;
  const double perp_sq = std::max(0.0, y.squaredNorm() - yproj.squaredNorm());
  const double perp_part =
      -0.5 * (perp_sq / var + (d - r) * std::log(var) + d * kLog2Pi);

  if (r == 0) return perp_part;
  std::vector<double> log_terms(comps_.size());
  for (std::size_t k = 0; k < comps_.size(); ++k) {
    const auto& c = comps_[k];
    const Eigen::VectorXd u = c.q.transpose() * yproj;
    double quad = 0.0, logdet = 0.0;
    for (int i = 0; i < r; ++i) {
      const double denom = f * f * c.evals(i) + var;
      const double resid = u(i) - f * c.mean_rot(i);
      quad += resid * resid / denom;
      logdet += std::log(denom);
    }
    log_terms[k] = c.log_weight - 0.5 * (quad + logdet);
  }
  return logsumexp(log_terms) + perp_part;
}

// ---------------------------------------------------------------------------

Eigen::VectorXd posterior_mean_uncond(const Prior& prior, const Eigen::VectorXd& x_t,
                                      const PathCoefficients& coeffs,
                                      const Eigen::VectorXd& x_lq) {
  return PriorOps(std::make_shared<Prior>(prior)).posterior_mean(x_t, coeffs, x_lq);
}

Eigen::VectorXd posterior_mean_cond(const Prior& prior, const LinearDegradation& degradation,
                                    const Eigen::VectorXd& x_t, const PathCoefficients& coeffs,
                                    const Eigen::VectorXd& x_lq) {
  const Prior conditioned = condition_prior(prior, degradation, x_lq);
  return PriorOps(std::make_shared<Prior>(conditioned)).posterior_mean(x_t, coeffs, x_lq);
}

Eigen::VectorXd score(const Prior& prior, const Eigen::VectorXd& x,
                      const PathCoefficients& coeffs, const Eigen::VectorXd& x_lq) {
  return PriorOps(std::make_shared<Prior>(prior)).score(x, coeffs, x_lq);
}

Eigen::VectorXd eps_from_xhat(const Eigen::VectorXd& x_t, const PathCoefficients& coeffs,
                              const Eigen::VectorXd& x_lq, const Eigen::VectorXd& xhat) {
  if (coeffs.sigma == 0.0) throw std::invalid_argument("eps_from_xhat: sigma == 0");
  return (x_t - coeffs.f * xhat - coeffs.b_mul * x_lq) / coeffs.sigma;
}

}  // namespace irbridge
