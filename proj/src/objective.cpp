#include "ggmcp/objective.hpp"

#include <cmath>

namespace ggmcp {

namespace {

double side_weight(Side side, int tau, int T) {
  return (side == Side::Left) ? 0.5 * tau / T : 0.5 * (T - tau) / T;
}

}  // namespace

double g_value(Side side, int tau, const SpdMatrix& theta, const Dataset& d) {
  const SymMatrix s = scatter(side, tau, d);
  const double tr = SymMatrix::inner_full(theta.sym(), s);
  return side_weight(side, tau, d.T()) * (-theta.logdet() + tr);
}

SymMatrix loss_gradient(Side side, int tau, const SpdMatrix& theta,
                        const Dataset& d, const PenaltyConfig& cfg) {
  SymMatrix g = scatter(side, tau, d);
  g -= theta.inverse();
  if (cfg.grad == GradientScaling::WeightedTau) {
    g.scale(side_weight(side, tau, d.T()));
  }
  return g;
}

ObjectiveBreakdown objective_H(int tau, const SpdMatrix& theta1,
                               const SpdMatrix& theta2, const Dataset& d,
                               const PenaltyConfig& cfg) {
  ObjectiveBreakdown out;
  out.g1 = g_value(Side::Left, tau, theta1, d);
  out.g2 = g_value(Side::Right, tau, theta2, d);
  out.pen1 = lambda_at(Side::Left, tau, cfg, d) * penalty(theta1.sym(), cfg);
  out.pen2 = lambda_at(Side::Right, tau, cfg, d) * penalty(theta2.sym(), cfg);
  out.total = out.g1 + out.pen1 + out.g2 + out.pen2;
  return out;
}

std::vector<double> quadratic_forms(const SymMatrix& theta, const Dataset& d) {
  const Eigen::MatrixXd full = theta.to_full();
  // One GEMM, then rowwise dot: q(t) = x_t theta x_t'.
  const Eigen::MatrixXd prod = d.rows() * full;
  std::vector<double> q(d.T());
  for (int t = 0; t < d.T(); ++t) {
    q[t] = prod.row(t).dot(d.rows().row(t));
  }
  return q;
}

int argmin_smallest_tie(std::span<const double> values) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(values.size()); ++i) {
    const double v = values[i];
    const double b = values[best];
    const double tie = 1e-12 * std::max({std::abs(v), std::abs(b), 1.0});
    if (v < b - tie) best = i;
  }
  return best;
}

LineSearchResult line_search_H(const SpdMatrix& theta1, const SpdMatrix& theta2,
                               const Dataset& d, const PenaltyConfig& cfg,
                               const SearchWindow& window) {
  const int T = d.T();
  const int p = d.p();
  const std::vector<double> q1 = quadratic_forms(theta1.sym(), d);
  const std::vector<double> q2 = quadratic_forms(theta2.sym(), d);

  // Compensated prefix sums: P_j[t] = sum_{s<=t} q_j(s), P_j[0] = 0.
  std::vector<double> P1(T + 1), P2(T + 1);
  CompensatedSum a1, a2;
  P1[0] = 0.0;
  P2[0] = 0.0;
  for (int t = 1; t <= T; ++t) {
    a1.add(q1[t - 1]);
    a2.add(q2[t - 1]);
    P1[t] = a1.value();
    P2[t] = a2.value();
  }

  const double L1 = theta1.logdet();
  const double L2 = theta2.logdet();
  const double pen1 = penalty(theta1.sym(), cfg);
  const double pen2 = penalty(theta2.sym(), cfg);
  const double inv2T = 0.5 / T;

  LineSearchResult out;
  out.values.resize(window.size());
  for (int t = window.lo; t <= window.hi; ++t) {
    // Grouped as P2[T] + (P1[t] - P2[t]) so identical theta yields exact
    // cancellation and a constant profile.
    const double quad = P2[T] + (P1[t] - P2[t]);
    const double gsum = inv2T * (-t * L1 - (T - t) * L2 + quad);
    const double pen = lambda_at(Side::Left, t, cfg, T, p) * pen1 +
                       lambda_at(Side::Right, t, cfg, T, p) * pen2;
    out.values[t - window.lo] = gsum + pen;
  }
  out.tau_hat = window.lo + argmin_smallest_tie(out.values);
  return out;
}

}  // namespace ggmcp
