#include "irbridge/sde.hpp"

#include <cmath>
#include <stdexcept>

namespace irbridge {

EmTables make_em_tables(BridgeKind kind, const BridgeParams& params, int n_steps) {
  if (n_steps < 1) throw std::invalid_argument("make_em_tables: n_steps must be positive");
  const double T = params.horizon;
  const double h = T / n_steps;
  EmTables tables;
  tables.n_steps = n_steps;
  tables.drift_h.resize(n_steps);
  tables.g_sqrt_h.resize(n_steps);
  tables.pin_final = (kind == BridgeKind::goub);
  if (kind == BridgeKind::goub && !(params.sigma_bar_sq(0.0, T) > 0.0))
    throw std::invalid_argument("make_em_tables: degenerate horizon for pinned bridge");
  const double theta_bar_T = params.theta_bar(T);
  for (int k = 0; k < n_steps; ++k) {
    const double t = k * h;
    double a = params.theta(t);
    if (kind == BridgeKind::goub) {
      const double s_tT = params.sigma_bar_sq(t, T);
      const double e_tT = std::exp(-2.0 * (theta_bar_T - params.theta_bar(t)));
      a += params.g_sq(t) * e_tT / s_tT;
    }
    tables.drift_h[k] = a * h;
    tables.g_sqrt_h[k] = std::sqrt(params.g_sq(t) * h);
  }
  return tables;
}

namespace {

void check_dims(const Eigen::VectorXd& x0, const Eigen::VectorXd& x_lq) {
  if (x0.size() != x_lq.size()) throw std::invalid_argument("em_simulate: dimension mismatch");
}

}  // namespace

Eigen::VectorXd em_simulate(BridgeKind kind, const BridgeParams& params,
                            const Eigen::VectorXd& x0, const Eigen::VectorXd& x_lq,
                            int n_steps, Rng& rng) {
  const std::vector<int> record{n_steps};
  return em_simulate_record(kind, params, x0, x_lq, n_steps, rng, record).row(0);
}

Eigen::MatrixXd em_simulate_record(BridgeKind kind, const BridgeParams& params,
                                   const Eigen::VectorXd& x0, const Eigen::VectorXd& x_lq,
                                   int n_steps, Rng& rng, const std::vector<int>& record_steps) {
  return em_simulate_record(make_em_tables(kind, params, n_steps), x0, x_lq, rng, record_steps);
}

Eigen::MatrixXd em_simulate_record(const EmTables& tables, const Eigen::VectorXd& x0,
                                   const Eigen::VectorXd& x_lq, Rng& rng,
                                   const std::vector<int>& record_steps) {
  check_dims(x0, x_lq);
  const int n_steps = tables.n_steps;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(record_steps.size()), x0.size());
  Eigen::VectorXd x = x0;
  std::size_t r = 0;
  auto maybe_record = [&](int step) {
    while (r < record_steps.size() && record_steps[r] == step) {
      out.row(static_cast<Eigen::Index>(r)) = x;
      ++r;
    }
  };
  maybe_record(0);
  for (int k = 0; k < n_steps; ++k) {
    if (tables.pin_final && k == n_steps - 1) {
      x = x_lq;
    } else {
      const double ah = tables.drift_h[k];
      const double gs = tables.g_sqrt_h[k];
      for (Eigen::Index d = 0; d < x.size(); ++d)
        x[d] += ah * (x_lq[d] - x[d]) + gs * rng.gaussian();
    }
    maybe_record(k + 1);
  }
  if (r != record_steps.size())
    throw std::invalid_argument("em_simulate_record: record_steps must be ascending in [0, n_steps]");
  return out;
}

}  // namespace irbridge
