#include "irbridge/verify.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "irbridge/csv.hpp"
#include "irbridge/numerics.hpp"
#include "irbridge/parallel.hpp"
#include "irbridge/rng.hpp"

namespace irbridge {

void MomentStats::init(Eigen::Index dim) {
  n = 0;
  sum = Eigen::VectorXd::Zero(dim);
  sum_sq = Eigen::VectorXd::Zero(dim);
}

void MomentStats::add(const Eigen::VectorXd& v) {
  ++n;
  sum += v;
  sum_sq += v.cwiseProduct(v);
}

void MomentStats::merge(const MomentStats& other) {
  n += other.n;
  sum += other.sum;
  sum_sq += other.sum_sq;
}

Eigen::VectorXd MomentStats::mean() const { return sum / static_cast<double>(n); }

Eigen::VectorXd MomentStats::variance() const {
  const Eigen::VectorXd m = mean();
  return (sum_sq - static_cast<double>(n) * m.cwiseProduct(m)) / static_cast<double>(n - 1);
}

MomentTestResult moment_test(const MomentStats& stats, const Eigen::VectorXd& expected_mean,
                             const Eigen::VectorXd& expected_var, double n_sigma,
                             double var_tol) {
  if (stats.n < 1000)
    throw std::invalid_argument("moment_test: needs at least 1000 samples");
  if (expected_mean.size() != stats.sum.size() || expected_var.size() != stats.sum.size())
    throw std::invalid_argument("moment_test: dimension mismatch");
  const Eigen::VectorXd m = stats.mean();
  const Eigen::VectorXd v = stats.variance();
  MomentTestResult result;
  result.pass = true;
  for (Eigen::Index d = 0; d < m.size(); ++d) {
    const double se = std::sqrt(expected_var[d] / static_cast<double>(stats.n));
    const double z = se > 0.0 ? std::abs(m[d] - expected_mean[d]) / se
                              : (m[d] == expected_mean[d] ? 0.0 : INFINITY);
    result.max_abs_z = std::max(result.max_abs_z, z);
    if (z > n_sigma) result.pass = false;
    if (expected_var[d] > 0.0) {
      const double rel = std::abs(v[d] - expected_var[d]) / expected_var[d];
      result.max_var_rel_err = std::max(result.max_var_rel_err, rel);
      if (rel > var_tol) result.pass = false;
    } else if (std::abs(v[d]) > 1e-12) {
      result.max_var_rel_err = INFINITY;
      result.pass = false;
    }
  }
  return result;
}

bool Report::all_pass() const {
  for (const auto& line : lines)
    if (!line.pass && !line.skipped) return false;
  return true;
}

std::string Report::to_text() const {
  std::string out;
  for (const auto& line : lines) {
    out += line.skipped ? "SKIP" : (line.pass ? "PASS" : "FAIL");
    out += ' ';
    out += line.name;
    if (!line.detail.empty()) {
      out += " (";
      out += line.detail;
      out += ')';
    }
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr int kChunks = 128;

std::string stat_detail(const MomentTestResult& r) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "max|z|=%.3g, max var rel err=%.3g", r.max_abs_z,
                r.max_var_rel_err);
  return buf;
}

}  // namespace

Report transition_marginal_test(const Path& src_path, const Path& dst_path,
                                const MarginalTestConfig& config) {
  if (config.x0.size() == 0 || config.x0.size() != config.x_lq.size())
    throw std::invalid_argument("transition_marginal_test: bad fixture vectors");
  Report report;
  const Eigen::Index d = config.x0.size();
  std::uint32_t stream_index = 0;
  for (const auto& [i_time, j_time] : config.pairs) {
    const PathCoefficients src = src_path.coeffs(i_time);
    const PathCoefficients dst = dst_path.coeffs(j_time);
    const SigmaRange range = sigma_range(src, dst);
    std::vector<double> sigmas;
    if (!config.explicit_sigmas.empty()) {
      sigmas = config.explicit_sigmas;
    } else {
      const int m = std::max(2, config.sigmas_per_pair);
      for (int s = 0; s < m; ++s)
        sigmas.push_back(range.lo + (range.hi - range.lo) * s / (m - 1));
    }
    for (double sig : sigmas) {
      char name[128];
      std::snprintf(name, sizeof(name), "%s(i=%.3g) -> %s(j=%.3g), sigma=%.6g",
                    src_path.name().c_str(), i_time, dst_path.name().c_str(), j_time, sig);
      CheckLine line;
      line.name = name;
      if (sig < range.lo || sig > range.hi) {
        line.skipped = true;
        char det[96];
        std::snprintf(det, sizeof(det), "sigma outside [%.6g, %.6g]", range.lo, range.hi);
        line.detail = det;
        report.lines.push_back(std::move(line));
        continue;
      }
      const TransitionCoefficients tc = transition_coeffs(src, dst, sig);
      const std::int64_t per_chunk = (config.n_samples + kChunks - 1) / kChunks;
      std::vector<MomentStats> stats(kChunks);
      const std::uint32_t stream_base = stream_index;
      stream_index += kChunks;
      for_chunks(kChunks, config.threads, [&](int chunk) {
        Rng rng(config.seed, stream_id(config.stream_tag, stream_base + chunk));
        MomentStats& acc = stats[static_cast<std::size_t>(chunk)];
        acc.init(d);
        const std::int64_t begin = chunk * per_chunk;
        const std::int64_t end = std::min<std::int64_t>(config.n_samples, begin + per_chunk);
        for (std::int64_t s = begin; s < end; ++s) {
          const Eigen::VectorXd x_src =
              reparam_sample(src, config.x0, config.x_lq, rng.gaussian_vector(d));
          Eigen::VectorXd x_dst =
              tc.alpha * x_src + tc.beta * config.x0 + tc.gamma_mul * config.x_lq;
          if (tc.sigma > 0.0) x_dst += tc.sigma * rng.gaussian_vector(d);
          acc.add(x_dst);
        }
      });
      MomentStats total;
      total.init(d);
      for (const auto& s : stats) total.merge(s);
      const Eigen::VectorXd expected_mean = dst.f * config.x0 + dst.b_mul * config.x_lq;
      const Eigen::VectorXd expected_var =
          Eigen::VectorXd::Constant(d, dst.sigma * dst.sigma);
      const MomentTestResult r =
          moment_test(total, expected_mean, expected_var, config.n_sigma, config.var_tol);
      line.pass = r.pass;
      line.detail = stat_detail(r);
      report.lines.push_back(std::move(line));
    }
  }
  return report;
}

// ---------------------------------------------------------------------------

Report sde_crosscheck(BridgeKind kind, const BridgeParams& params,
                      const SdeCrosscheckConfig& config) {
  Report report;
  const int n = config.n_steps;
  std::vector<int> record_steps;
  for (double c : config.checkpoints) {
    const int k = static_cast<int>(std::lround(c * n));
    if (k < 1 || k > n) throw std::invalid_argument("sde_crosscheck: checkpoint outside (0, T]");
    record_steps.push_back(k);
  }
  const bool pinned = kind == BridgeKind::goub;
  if (pinned) record_steps.push_back(n);
  std::sort(record_steps.begin(), record_steps.end());
  record_steps.erase(std::unique(record_steps.begin(), record_steps.end()), record_steps.end());
  const auto n_rec = static_cast<Eigen::Index>(record_steps.size());

  const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(1, config.x0);
  const Eigen::VectorXd x_lq = Eigen::VectorXd::Constant(1, config.x_lq);

  const EmTables tables = make_em_tables(kind, params, n);
  const std::int64_t per_chunk = (config.n_trajectories + kChunks - 1) / kChunks;
  std::vector<MomentStats> stats(kChunks);
  std::vector<double> max_pin_dev(kChunks, 0.0);
  for_chunks(kChunks, config.threads, [&](int chunk) {
    Rng rng(config.seed, stream_id(config.stream_tag, static_cast<std::uint32_t>(chunk)));
    MomentStats& acc = stats[static_cast<std::size_t>(chunk)];
    acc.init(n_rec);
    const std::int64_t begin = chunk * per_chunk;
    const std::int64_t end = std::min<std::int64_t>(config.n_trajectories, begin + per_chunk);
    for (std::int64_t traj = begin; traj < end; ++traj) {
      const Eigen::MatrixXd states = em_simulate_record(tables, x0, x_lq, rng, record_steps);
      Eigen::VectorXd flat(n_rec);
      for (Eigen::Index r = 0; r < n_rec; ++r) flat[r] = states(r, 0);
      acc.add(flat);
      if (pinned) {
        const double dev = std::abs(states(n_rec - 1, 0) - config.x_lq);
        max_pin_dev[static_cast<std::size_t>(chunk)] =
            std::max(max_pin_dev[static_cast<std::size_t>(chunk)], dev);
      }
    }
  });
  MomentStats total;
  total.init(n_rec);
  for (const auto& s : stats) total.merge(s);

  const double T = params.horizon;
  const Eigen::VectorXd emp_mean = total.mean();
  const Eigen::VectorXd emp_var = total.variance();
  for (Eigen::Index r = 0; r < n_rec; ++r) {
    const int step = record_steps[static_cast<std::size_t>(r)];
    const double t = T * step / n;
    const PathCoefficients c =
        kind == BridgeKind::irsde ? irsde_coeffs(params, t) : goub_coeffs(params, t);
    const double mean_exp = c.f * config.x0 + c.b_mul * config.x_lq;
    const double var_exp = c.sigma * c.sigma;
    CheckLine line;
    char name[96];
    std::snprintf(name, sizeof(name), "%s t=%.6g moments",
                  kind == BridgeKind::irsde ? "irsde" : "goub", t);
    line.name = name;
    if (step == n && pinned) {
      double dev = 0.0;
      for (double v : max_pin_dev) dev = std::max(dev, v);
      line.pass = dev < config.pin_tolerance;
      char det[96];
      std::snprintf(det, sizeof(det), "terminal max|x - x_lq|=%.3g", dev);
      line.detail = det;
    } else {
      // Absolute floors keep degenerate checkpoints (exactly-known moments,
      // e.g. the zero-drift process) from dividing roundoff by zero.
      const double mean_err = std::abs(emp_mean[r] - mean_exp) / std::max(1e-12, std::abs(mean_exp));
      const double var_err = std::abs(emp_var[r] - var_exp) / std::max(1e-12, var_exp);
      line.pass = mean_err <= config.tolerance && var_err <= config.tolerance;
      char det[96];
      std::snprintf(det, sizeof(det), "mean rel err=%.3g, var rel err=%.3g", mean_err, var_err);
      line.detail = det;
    }
    report.lines.push_back(std::move(line));
  }
  return report;
}

// ---------------------------------------------------------------------------

CriticalCurve critical_curve(BridgeKind kind, const BridgeParams& base_params,
                             const Path& gen_path, const std::vector<double>& lambdas,
                             int grid_points) {
  if (grid_points < 2) throw std::invalid_argument("critical_curve: bad grid");
  CriticalCurve curve;
  curve.points.reserve(lambdas.size() * static_cast<std::size_t>(grid_points + 1));
  for (double lambda : lambdas) {
    BridgeParams params = base_params;
    params.lambda = lambda;
    for (int k = 0; k <= grid_points; ++k) {
      const double tau = static_cast<double>(k) / grid_points;
      const double t = tau * params.horizon;
      const PathCoefficients src =
          kind == BridgeKind::irsde ? irsde_coeffs(params, t) : goub_coeffs(params, t);
      CriticalCurvePoint point;
      point.lambda = lambda;
      point.tau = tau;
      if (src.sigma == 0.0 && src.f == 0.0) {
        // Pinned endpoint: the source state is degenerate in both coordinates.
        point.result.status = CriticalResult::Status::above_grid;
      } else {
        point.result = critical_timestep(src, gen_path);
      }
      curve.points.push_back(point);
    }
  }
  return curve;
}

std::string CriticalCurve::to_csv() const {
  CsvWriter csv({"lambda", "tau", "t_critical", "residual", "status"});
  for (const auto& p : points) {
    std::string status;
    switch (p.result.status) {
      case CriticalResult::Status::found: status = "found"; break;
      case CriticalResult::Status::below_grid: status = "below_grid"; break;
      case CriticalResult::Status::above_grid: status = "above_grid"; break;
    }
    csv.add_row_mixed({format_g17(p.lambda), format_g17(p.tau),
                       p.result.found() ? format_g17(p.result.value) : "nan",
                       p.result.found() ? format_g17(p.result.residual) : "nan", status});
  }
  return csv.str();
}

}  // namespace irbridge
