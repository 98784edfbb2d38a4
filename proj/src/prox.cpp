#include "ggmcp/prox.hpp"

#include <cmath>
#include <string>

namespace ggmcp {

double prox_scalar(double x, double gamma_lambda, double alpha) {
  const double threshold = alpha * gamma_lambda;
  if (std::abs(x) < threshold) return 0.0;
  const double shrink = 1.0 + (1.0 - alpha) * gamma_lambda;
  if (x >= threshold) return (x - threshold) / shrink;
  return (x + threshold) / shrink;
}

SymMatrix prox_elastic_net(const SymMatrix& theta, double gamma_lambda,
                           double alpha, bool penalize_diagonal) {
  if (!(gamma_lambda >= 0.0)) {
    throw Error("prox_elastic_net: gamma*lambda must be nonnegative");
  }
  if (!(alpha >= 0.0) || !(alpha < 1.0)) {
    throw Error("prox_elastic_net: alpha must lie in [0, 1)");
  }
  const int p = theta.dim();
  SymMatrix out(p);
  const double shrink = 1.0 + (1.0 - alpha) * gamma_lambda;
  int k = 0;
  for (int i = 0; i < p; ++i) {
    for (int j = i; j < p; ++j, ++k) {
      const double x = theta.upper()[k];
      if (i == j && !penalize_diagonal) {
        out.upper()[k] = x / shrink;  // ridge only on the exempt diagonal
      } else {
        out.upper()[k] = prox_scalar(x, gamma_lambda, alpha);
      }
    }
  }
  return out;
}

SymMatrix prox_step_kernel(const SpdMatrix& theta, const SymMatrix& scatter_avg,
                           double loss_weight, double gamma, double lambda,
                           const PenaltyConfig& cfg) {
  const int p = theta.dim();
  const SymMatrix inv = theta.inverse();
  const double w =
      (cfg.grad == GradientScaling::WeightedTau) ? loss_weight : 1.0;
  SymMatrix y(p);
  for (int k = 0; k < y.stored_size(); ++k) {
    const double grad = w * (scatter_avg.upper()[k] - inv.upper()[k]);
    y.upper()[k] = theta.sym().upper()[k] - gamma * grad;
  }
  return prox_elastic_net(y, gamma * lambda, cfg.alpha, cfg.penalize_diagonal);
}

SymMatrix prox_gradient_step(Side side, int tau, const SpdMatrix& theta,
                             double gamma, const Dataset& d,
                             const PenaltyConfig& cfg) {
  const SymMatrix s = scatter(side, tau, d);
  const double w = (side == Side::Left) ? 0.5 * tau / d.T()
                                        : 0.5 * (d.T() - tau) / d.T();
  const double lambda = lambda_at(side, tau, cfg, d);
  return prox_step_kernel(theta, s, w, gamma, lambda, cfg);
}

double lower_radius(double mu, double lambda_bar, double alpha,
                    double n0_over_T) {
  const double a = (1.0 - alpha) * lambda_bar;
  if (a <= 0.0) {
    // Pure l1 (alpha -> 1) or lambda -> 0 degenerates to the linear root.
    return n0_over_T / (2.0 * mu);
  }
  return (-mu + std::sqrt(mu * mu + 2.0 * a * n0_over_T)) / (2.0 * a);
}

double upper_radius(double mu, double lambda_under, double alpha) {
  const double a = (1.0 - alpha) * lambda_under;
  if (a <= 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  return (mu + std::sqrt(mu * mu + 2.0 * a)) / (2.0 * a);
}

StepSizeBounds stepsize_bounds(const Dataset& d, const PenaltyConfig& cfg,
                               const SearchWindow& window,
                               const BoundsOptions& opts) {
  cfg.validate();
  const int T = d.T();
  const int p = d.p();
  const int count = window.size();
  int stride = 1;
  double inflate = 1.0;
  if (!opts.exact_scan && count > opts.max_grid) {
    stride = count / opts.max_grid;
    inflate = opts.stride_inflation;
  }

  StepSizeBounds out;
  out.lambda_bar1 = out.lambda_bar2 = 0.0;
  out.lambda_under1 = out.lambda_under2 =
      std::numeric_limits<double>::infinity();
  double mu1 = 0.0, mu2 = 0.0;

  // lambda extremes are cheap: scan every tau.
  for (int t = window.lo; t <= window.hi; ++t) {
    const double l1 = lambda_at(Side::Left, t, cfg, T, p);
    const double l2 = lambda_at(Side::Right, t, cfg, T, p);
    out.lambda_bar1 = std::max(out.lambda_bar1, l1);
    out.lambda_bar2 = std::max(out.lambda_bar2, l2);
    out.lambda_under1 = std::min(out.lambda_under1, l1);
    out.lambda_under2 = std::min(out.lambda_under2, l2);
  }

  // mu_j = max_tau [ ||S_j(tau)||_2 / 2 + alpha p lambda_{j,tau} ], scanned on
  // the stride grid (window ends always included).
  ScatterTracker tracker(d, window.lo);
  auto visit = [&](int t) {
    tracker.move_to(t);
    const double s1 = spectral_norm(tracker.left_avg());
    const double s2 = spectral_norm(tracker.right_avg());
    mu1 = std::max(mu1, 0.5 * s1 +
                            cfg.alpha * p * lambda_at(Side::Left, t, cfg, T, p));
    mu2 = std::max(mu2, 0.5 * s2 +
                            cfg.alpha * p * lambda_at(Side::Right, t, cfg, T, p));
  };
  for (int t = window.lo; t <= window.hi; t += stride) visit(t);
  if ((count - 1) % stride != 0) visit(window.hi);

  out.mu1 = mu1 * inflate;
  out.mu2 = mu2 * inflate;
  const double n0_over_T = static_cast<double>(window.n0) / T;
  out.b1 = lower_radius(out.mu1, out.lambda_bar1, cfg.alpha, n0_over_T);
  out.b2 = lower_radius(out.mu2, out.lambda_bar2, cfg.alpha, n0_over_T);
  out.B1 = upper_radius(out.mu1, out.lambda_under1, cfg.alpha);
  out.B2 = upper_radius(out.mu2, out.lambda_under2, cfg.alpha);
  return out;
}

GlassoResult glasso_solve_kernel(const SymMatrix& scatter_avg,
                                 double loss_weight, double lambda,
                                 const SpdMatrix& theta0,
                                 const GlassoSettings& settings,
                                 const PenaltyConfig& cfg, int tau_hint) {
  cfg.validate();
  auto objective = [&](const SpdMatrix& th) {
    return loss_weight *
               (-th.logdet() + SymMatrix::inner_full(th.sym(), scatter_avg)) +
           lambda * penalty(th.sym(), cfg);
  };

  double gamma = settings.gamma;
  for (int attempt = 0; attempt <= settings.max_restarts; ++attempt) {
    SpdMatrix theta = theta0;
    int iters = 0;
    bool diverged = false;
    // The objective must be non-increasing along prox steps; an uptick means
    // gamma exceeds the stability bound even though iterates stayed SPD, so
    // it takes the same restart path as leaving the cone.
    double obj_prev = objective(theta);
    for (int k = 1; k <= settings.max_iter; ++k) {
      SymMatrix next =
          prox_step_kernel(theta, scatter_avg, loss_weight, gamma, lambda, cfg);
      SpdMatrix next_spd;
      try {
        next_spd = SpdMatrix::cholesky(next);
      } catch (const NotPositiveDefinite&) {
        diverged = true;
        break;
      }
      const double obj_k = objective(next_spd);
      if (obj_k > obj_prev + 1e-8) {
        diverged = true;
        break;
      }
      obj_prev = obj_k;
      SymMatrix diff = next;
      diff -= theta.sym();
      const double rel =
          diff.frob_full() / std::max(1.0, theta.sym().frob_full());
      theta = std::move(next_spd);
      iters = k;
      if (rel < settings.tol) break;
    }
    if (!diverged) {
      GlassoResult out;
      out.objective = objective(theta);
      out.theta = std::move(theta);
      out.iters = iters;
      out.gamma_used = gamma;
      out.restarts = attempt;
      return out;
    }
    gamma *= 0.5;
  }
  throw Diverged("glasso_solve: iterate left the SPD cone after " +
                     std::to_string(settings.max_restarts) + " restarts",
                 tau_hint);
}

GlassoResult glasso_solve(Side side, int tau, const SpdMatrix& theta0,
                          const GlassoSettings& settings, const Dataset& d,
                          const PenaltyConfig& cfg) {
  const SymMatrix s = scatter(side, tau, d);
  const double w = (side == Side::Left) ? 0.5 * tau / d.T()
                                        : 0.5 * (d.T() - tau) / d.T();
  const double lambda = lambda_at(side, tau, cfg, d);
  return glasso_solve_kernel(s, w, lambda, theta0, settings, cfg, tau);
}

}  // namespace ggmcp
