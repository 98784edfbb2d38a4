#include "ggmcp/penalty.hpp"

#include <cmath>
#include <string>

namespace ggmcp {

void PenaltyConfig::validate() const {
  if (!(alpha >= 0.0) || !(alpha < 1.0)) {
    throw Error("PenaltyConfig: alpha must lie in [0, 1)");
  }
  if (!(lambda_base >= 0.0)) {
    throw Error("PenaltyConfig: lambda_base must be nonnegative");
  }
  if (schedule == LambdaSchedule::Theory && !theory_kappa_bar.has_value()) {
    throw MissingKappa("PenaltyConfig: Theory schedule needs kappa_bar");
  }
}

double lambda_at(Side side, int tau, const PenaltyConfig& cfg, int T, int p) {
  if (tau < 1 || tau > T - 1) {
    throw OutOfWindow("lambda_at: tau=" + std::to_string(tau) +
                      " outside [1, " + std::to_string(T - 1) + "]");
  }
  const double n = (side == Side::Left) ? static_cast<double>(tau)
                                        : static_cast<double>(T - tau);
  if (cfg.schedule == LambdaSchedule::Experimental) {
    return cfg.lambda_base * std::sqrt(std::log(static_cast<double>(p)) / n);
  }
  if (!cfg.theory_kappa_bar.has_value()) {
    throw MissingKappa("lambda_at: Theory schedule needs kappa_bar");
  }
  if (!(cfg.alpha > 0.0)) {
    throw Error("lambda_at: Theory schedule needs alpha > 0");
  }
  const double kappa = *cfg.theory_kappa_bar;
  return kappa / (cfg.alpha * T) *
         std::sqrt(48.0 * n * std::log(static_cast<double>(p) * T));
}

double lambda_at(Side side, int tau, const PenaltyConfig& cfg,
                 const Dataset& d) {
  return lambda_at(side, tau, cfg, d.T(), d.p());
}

double penalty(const SymMatrix& theta, const PenaltyConfig& cfg) {
  const bool upper = cfg.frob == FrobConvention::UpperTriangle;
  const double l1 = upper ? theta.l1_upper(cfg.penalize_diagonal)
                          : theta.l1_full(cfg.penalize_diagonal);
  const double f2 = upper ? theta.frob2_upper() : theta.frob2_full();
  return cfg.alpha * l1 + 0.5 * (1.0 - cfg.alpha) * f2;
}

}  // namespace ggmcp
