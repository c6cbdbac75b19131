#include <doctest.h>

#include <cmath>
#include <memory>
#include <numbers>

#include "irbridge/rng.hpp"
#include "irbridge/synthetic.hpp"

using namespace irbridge;

namespace {

Prior two_sided_gmm(double sep = 1.5) {
  Gmm gmm;
  GaussianComponent a, b;
  a.weight = 0.5;
  a.mean = Eigen::Vector2d(sep, -0.5 * sep);
  a.cov = (Eigen::Matrix2d() << 0.3, 0.1, 0.1, 0.2).finished();
  b.weight = 0.5;
  b.mean = -a.mean;
  b.cov = a.cov;
  gmm.components = {a, b};
  return Prior::from_gmm(std::move(gmm));
}

Prior three_comp_gmm() {
  Gmm gmm;
  GaussianComponent a, b, c;
  a.weight = 0.5;
  a.mean = Eigen::Vector2d(-1.2, 0.4);
  a.cov = (Eigen::Matrix2d() << 0.25, 0.05, 0.05, 0.2).finished();
  b.weight = 0.3;
  b.mean = Eigen::Vector2d(1.0, 0.8);
  b.cov = (Eigen::Matrix2d() << 0.3, -0.04, -0.04, 0.25).finished();
  c.weight = 0.2;
  c.mean = Eigen::Vector2d(0.2, -1.1);
  c.cov = (Eigen::Matrix2d() << 0.2, 0.0, 0.0, 0.3).finished();
  gmm.components = {a, b, c};
  return Prior::from_gmm(std::move(gmm));
}

}  // namespace

TEST_CASE("prior sampling: point mass, mixture moments, flat field") {
  Rng rng(3, 0);

  Gmm point;
  point.components.push_back({1.0, Eigen::Vector2d(0.7, -0.2), Eigen::Matrix2d::Zero()});
  const Prior point_prior = Prior::from_gmm(point);
  CHECK(sample_prior(point_prior, rng) == Eigen::Vector2d(0.7, -0.2));

  const Prior gmm = three_comp_gmm();
  Eigen::Vector2d expected = Eigen::Vector2d::Zero();
  Eigen::Vector2d second = Eigen::Vector2d::Zero();
  for (const auto& comp : gmm.gmm.components) {
    expected += comp.weight * comp.mean;
    second += comp.weight * (comp.cov.diagonal() + comp.mean.cwiseProduct(comp.mean));
  }
  const Eigen::Vector2d var = second - expected.cwiseProduct(expected);
  const int n = 100000;
  Eigen::Vector2d acc = Eigen::Vector2d::Zero();
  for (int k = 0; k < n; ++k) acc += sample_prior(gmm, rng);
  acc /= n;
  for (int d = 0; d < 2; ++d)
    CHECK(std::abs(acc[d] - expected[d]) < 4.0 * std::sqrt(var[d] / n));

  const Prior flat = Prior::gaussian_field(4, 4, 2.0, 0.0, 0.25);
  const Eigen::VectorXd image = sample_prior(flat, rng);
  CHECK(image == Eigen::VectorXd::Constant(16, 0.25));
}

TEST_CASE("degradations: identity, masking, dimming") {
  Rng rng(4, 0);
  const Prior field = Prior::gaussian_field(4, 4, 1.5, 0.04, 1.0);
  const Eigen::VectorXd x0 = sample_prior(field, rng);

  CHECK(degrade(x0, LinearDegradation::identity(16), rng) == x0);

  std::vector<int> keep(16, 1);
  keep[3] = keep[7] = keep[12] = 0;
  const LinearDegradation mask = LinearDegradation::mask(keep, 0.0);
  const Eigen::VectorXd masked = degrade(x0, mask, rng);
  for (int k = 0; k < 16; ++k)
    CHECK(masked[k] == (keep[static_cast<std::size_t>(k)] ? x0[k] : 0.0));

  // Dimming a mean-1 field lands near mean 0.3.
  const LinearDegradation dim = LinearDegradation::dimming(16, 0.3, 0.0);
  double mean = 0.0;
  const int reps = 200;
  for (int k = 0; k < reps; ++k) mean += degrade(sample_prior(field, rng), dim, rng).mean();
  mean /= reps;
  CHECK(std::abs(mean - 0.3) < 0.02);

  CHECK_THROWS_AS(degrade(Eigen::VectorXd::Zero(4), dim, rng), std::invalid_argument);
}

TEST_CASE("posterior mean: textbook single-Gaussian identity") {
  Rng rng(5, 0);
  Gmm gmm;
  Eigen::Matrix3d cov;
  cov << 0.5, 0.1, 0.0, 0.1, 0.4, -0.05, 0.0, -0.05, 0.3;
  gmm.components.push_back({1.0, Eigen::Vector3d(0.2, -0.4, 1.0), cov});
  const Prior prior = Prior::from_gmm(gmm);
  const PathCoefficients c{0.8, 0.3, 0.6};
  const Eigen::VectorXd x_lq = (Eigen::VectorXd(3) << 0.5, 0.1, -0.2).finished();
  const Eigen::VectorXd x_t = (Eigen::VectorXd(3) << 0.9, -0.1, 0.4).finished();

  const Eigen::VectorXd got = posterior_mean_uncond(prior, x_t, c, x_lq);
  const Eigen::VectorXd y = x_t - c.b_mul * x_lq;
  const Eigen::Matrix3d gram = c.f * c.f * cov + c.sigma * c.sigma * Eigen::Matrix3d::Identity();
  const Eigen::VectorXd expected =
      gmm.components[0].mean +
      c.f * cov * gram.ldlt().solve(y - c.f * gmm.components[0].mean);
  CHECK((got - expected).norm() < 1e-10);
}

TEST_CASE("posterior mean: symmetric mixture cancels at the center") {
  const Prior prior = two_sided_gmm();
  const PathCoefficients c{0.6, 0.2, 0.7};
  const Eigen::VectorXd x_lq = (Eigen::VectorXd(2) << 0.3, -0.1).finished();
  const Eigen::VectorXd x_t = c.b_mul * x_lq;  // centered state
  const Eigen::VectorXd got = posterior_mean_uncond(prior, x_t, c, x_lq);
  CHECK(got.norm() < 1e-12);
}

TEST_CASE("posterior mean matches a quadrature oracle on a 2-d mixture") {
  const Prior prior = three_comp_gmm();
  const PathCoefficients c{0.7, 0.25, 0.5};
  const Eigen::VectorXd x_lq = (Eigen::VectorXd(2) << 0.4, 0.6).finished();
  const Eigen::VectorXd x_t = (Eigen::VectorXd(2) << 0.35, -0.3).finished();
  const Eigen::VectorXd y = x_t - c.b_mul * x_lq;

  // Brute-force posterior mean on a grid: E[x0 | y] with y = f x0 + sigma eps.
  auto prior_pdf = [&](const Eigen::Vector2d& z) {
    double p = 0.0;
    for (const auto& comp : prior.gmm.components) {
      const Eigen::Vector2d r = z - Eigen::Vector2d(comp.mean);
      const Eigen::Matrix2d S = comp.cov;
      const double det = S(0, 0) * S(1, 1) - S(0, 1) * S(1, 0);
      const Eigen::Matrix2d inv =
          (Eigen::Matrix2d() << S(1, 1), -S(0, 1), -S(1, 0), S(0, 0)).finished() / det;
      p += comp.weight * std::exp(-0.5 * r.dot(inv * r)) /
           (2.0 * std::numbers::pi * std::sqrt(det));
    }
    return p;
  };
  const double lo = -5.0, hi = 5.0;
  const int grid = 400;
  const double step = (hi - lo) / grid;
  Eigen::Vector2d num = Eigen::Vector2d::Zero();
  double den = 0.0;
  for (int a = 0; a <= grid; ++a) {
    for (int b = 0; b <= grid; ++b) {
      const Eigen::Vector2d z(lo + a * step, lo + b * step);
      const double lik =
          std::exp(-0.5 * (y - c.f * z).squaredNorm() / (c.sigma * c.sigma));
      const double w = prior_pdf(z) * lik;
      num += w * z;
      den += w;
    }
  }
  const Eigen::Vector2d oracle = num / den;
  const Eigen::VectorXd got = posterior_mean_uncond(prior, x_t, c, x_lq);
  CHECK((got - oracle).norm() < 1e-4);
}

TEST_CASE("degenerate marginal is flagged and inverted through f") {
  const Prior prior = two_sided_gmm();
  const PathCoefficients c{0.5, 0.5, 0.0};
  const Eigen::VectorXd x_lq = (Eigen::VectorXd(2) << 0.2, 0.2).finished();
  const Eigen::VectorXd x_t = (Eigen::VectorXd(2) << 0.6, -0.4).finished();
  PriorOps ops(std::make_shared<Prior>(prior));
  bool degenerate = false;
  const Eigen::VectorXd got = ops.posterior_mean(x_t, c, x_lq, &degenerate);
  CHECK(degenerate);
  CHECK((got - (x_t - c.b_mul * x_lq) / c.f).norm() < 1e-14);
}

TEST_CASE("conditioning keeps the mixture valid and sharpens estimates") {
  Rng rng(6, 0);
  const Prior prior = three_comp_gmm();
  const LinearDegradation dim = LinearDegradation::dimming(2, 0.4, 0.1);
  const Eigen::VectorXd x0 = sample_prior(prior, rng);
  const Eigen::VectorXd y = degrade(x0, dim, rng);

  const Prior cond = condition_prior(prior, dim, y);
  double wsum = 0.0;
  for (const auto& comp : cond.gmm.components) {
    wsum += comp.weight;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(comp.cov);
    CHECK(eig.eigenvalues().minCoeff() > 0.0);
  }
  CHECK(wsum == doctest::Approx(1.0).epsilon(1e-12));

  // A zero observation matrix is no information at all.
  LinearDegradation blind;
  blind.A = Eigen::MatrixXd::Zero(2, 2);
  blind.c = Eigen::VectorXd::Zero(2);
  blind.noise_std = 0.1;
  const Prior uncond = condition_prior(prior, blind, Eigen::VectorXd::Zero(2));
  const PathCoefficients c{0.7, 0.0, 0.5};
  const Eigen::VectorXd probe = (Eigen::VectorXd(2) << 0.3, 0.1).finished();
  const Eigen::VectorXd a = posterior_mean_uncond(uncond, probe, c, probe);
  const Eigen::VectorXd b = posterior_mean_uncond(prior, probe, c, probe);
  CHECK((a - b).norm() < 1e-10);
}

TEST_CASE("noise-free identity observation pins the sample exactly") {
  Rng rng(7, 0);
  const Prior field = Prior::gaussian_field(4, 4, 1.5, 0.04, 0.5);
  const Eigen::VectorXd x0 = sample_prior(field, rng);
  const LinearDegradation identity = LinearDegradation::identity(16, 0.0);

  const Prior cond = condition_prior(field, identity, x0);
  CHECK(cond.latent_dim() == 0);
  CHECK((cond.mean() - x0).norm() < 1e-9);

  // The posterior mean no longer depends on the diffused state.
  const PathCoefficients c{0.6, 0.2, 0.8};
  PriorOps ops(std::make_shared<Prior>(cond));
  const Eigen::VectorXd probe1 = Eigen::VectorXd::Random(16);
  const Eigen::VectorXd probe2 = Eigen::VectorXd::Random(16);
  const Eigen::VectorXd e1 = ops.posterior_mean(probe1, c, x0);
  const Eigen::VectorXd e2 = ops.posterior_mean(probe2, c, x0);
  CHECK((e1 - e2).norm() == 0.0);
  CHECK((e1 - x0).norm() < 1e-9);
}

TEST_CASE("masked conditioning: conditional beats unconditional on squared error") {
  Rng rng(8, 0);
  auto field = std::make_shared<Prior>(Prior::gaussian_field(8, 8, 2.0, 0.0625, 0.5));
  Rng mask_rng(8, 99);
  const LinearDegradation mask = LinearDegradation::random_mask(64, 0.5, 0.0, mask_rng);
  const Eigen::VectorXd x0_obs = sample_prior(*field, rng);
  const Eigen::VectorXd y = degrade(x0_obs, mask, rng);

  PriorOps uncond(field);
  PriorOps cond(std::make_shared<Prior>(condition_prior(*field, mask, y)));
  const PathCoefficients c{0.75, 0.1, 0.4};
  const Eigen::VectorXd x_lq = y;

  int cond_wins = 0;
  const int trials = 1000;
  for (int k = 0; k < trials; ++k) {
    // States diffused from the observed sample.
    const Eigen::VectorXd x_t =
        reparam_sample(c, x0_obs, x_lq, rng.gaussian_vector(64));
    const double err_c = (cond.posterior_mean(x_t, c, x_lq) - x0_obs).squaredNorm();
    const double err_u = (uncond.posterior_mean(x_t, c, x_lq) - x0_obs).squaredNorm();
    if (err_c <= err_u) ++cond_wins;
  }
  CHECK(cond_wins == trials);
}

TEST_CASE("score: closed form, stationarity, finite differences, Tweedie") {
  const Prior prior = two_sided_gmm();
  const PathCoefficients c{0.65, 0.2, 0.55};
  const Eigen::VectorXd x_lq = (Eigen::VectorXd(2) << -0.1, 0.25).finished();
  PriorOps ops(std::make_shared<Prior>(prior));

  // Single Gaussian: score is the usual precision-weighted residual.
  Gmm single;
  single.components.push_back(
      {1.0, Eigen::Vector2d(0.4, -0.6),
       (Eigen::Matrix2d() << 0.3, 0.08, 0.08, 0.25).finished()});
  const Prior sp = Prior::from_gmm(single);
  PriorOps sops(std::make_shared<Prior>(sp));
  const Eigen::VectorXd x = (Eigen::VectorXd(2) << 0.7, 0.1).finished();
  const Eigen::Matrix2d gram = c.f * c.f * Eigen::Matrix2d(single.components[0].cov) +
                               c.sigma * c.sigma * Eigen::Matrix2d::Identity();
  const Eigen::VectorXd expected = -gram.ldlt().solve(
      x - c.f * Eigen::Vector2d(single.components[0].mean) - c.b_mul * x_lq);
  CHECK((sops.score(x, c, x_lq) - expected).norm() < 1e-10);

  // Symmetry point of the two-sided mixture.
  const Eigen::VectorXd center = c.b_mul * x_lq;
  CHECK(ops.score(center, c, x_lq).norm() < 1e-12);

  // Central finite differences of the log-density.
  const double h = 1e-4;
  for (const auto& probe : {Eigen::Vector2d(0.9, -0.2), Eigen::Vector2d(-1.4, 0.7)}) {
    const Eigen::VectorXd s = ops.score(probe, c, x_lq);
    for (int d = 0; d < 2; ++d) {
      Eigen::VectorXd hi = probe, lo = probe;
      hi[d] += h;
      lo[d] -= h;
      const double fd =
          (ops.log_density(hi, c, x_lq) - ops.log_density(lo, c, x_lq)) / (2.0 * h);
      CHECK(std::abs(s[d] - fd) < 1e-5);
    }
  }

  // Tweedie consistency ties the posterior mean to the score.
  for (const auto& probe : {Eigen::Vector2d(0.3, 0.4), Eigen::Vector2d(-0.8, -1.1)}) {
    const Eigen::VectorXd xhat = ops.posterior_mean(probe, c, x_lq);
    const Eigen::VectorXd via_score =
        (probe - c.b_mul * x_lq + c.sigma * c.sigma * ops.score(probe, c, x_lq)) / c.f;
    CHECK((xhat - via_score).norm() / xhat.norm() < 1e-8);
  }

  CHECK_THROWS_AS(ops.score(x, PathCoefficients{1.0, 0.0, 0.0}, x_lq),
                  std::invalid_argument);
}

TEST_CASE("noise-prediction adapter round-trips the reparameterization") {
  Rng rng(9, 0);
  const PathCoefficients c{0.72, 0.18, 0.61};
  const Eigen::VectorXd x0 = rng.gaussian_vector(5);
  const Eigen::VectorXd x_lq = rng.gaussian_vector(5);
  const Eigen::VectorXd xhat = rng.gaussian_vector(5);
  const Eigen::VectorXd x_t = reparam_sample(c, x0, x_lq, rng.gaussian_vector(5));
  const Eigen::VectorXd eps = eps_from_xhat(x_t, c, x_lq, xhat);
  const Eigen::VectorXd back = c.f * xhat + c.b_mul * x_lq + c.sigma * eps;
  CHECK((back - x_t).norm() < 1e-12);
}
