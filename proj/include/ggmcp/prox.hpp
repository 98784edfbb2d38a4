#pragma once

#include "ggmcp/dataset.hpp"
#include "ggmcp/objective.hpp"
#include "ggmcp/penalty.hpp"
#include "ggmcp/sym_matrix.hpp"

namespace ggmcp {

// Scalar elastic-net prox: argmin_u (u - x)^2 / (2 gl) + alpha|u| +
// (1 - alpha) u^2 / 2 scaled by gl, i.e. soft-threshold at alpha*gl then
// shrink by 1/(1 + (1-alpha) gl).
double prox_scalar(double x, double gamma_lambda, double alpha);

// Entrywise prox applied to each stored upper-triangle entry (diagonal
// included unless penalize_diagonal is off, which then skips only the
// threshold part on the diagonal).
SymMatrix prox_elastic_net(const SymMatrix& theta, double gamma_lambda,
                           double alpha, bool penalize_diagonal = true);

// One proximal-gradient step Prox_{gamma lambda}(theta - gamma grad g) with
// the side loss gradient from loss_gradient().
SymMatrix prox_gradient_step(Side side, int tau, const SpdMatrix& theta,
                             double gamma, const Dataset& d,
                             const PenaltyConfig& cfg);

// Internal step kernel used by the solvers: scatter average and lambda are
// supplied by the caller so fixed-tau iterations avoid O(T p^2) rescans.
SymMatrix prox_step_kernel(const SpdMatrix& theta, const SymMatrix& scatter_avg,
                           double loss_weight, double gamma, double lambda,
                           const PenaltyConfig& cfg);

// Iterate-confinement constants: with gamma <= min(b1^2, b2^2) and starting
// points in M_p^+(b_j, B_j), prox-gradient iterates keep all eigenvalues in
// [b_j, B_j].
struct StepSizeBounds {
  double mu1 = 0.0, mu2 = 0.0;
  double lambda_bar1 = 0.0, lambda_bar2 = 0.0;    // max over the window
  double lambda_under1 = 0.0, lambda_under2 = 0.0;  // min over the window
  double b1 = 0.0, B1 = 0.0;
  double b2 = 0.0, B2 = 0.0;
  double gamma_max() const { return std::min(b1 * b1, b2 * b2); }
};

// Roots of (1-a) lb b^2 + mu b - n0/(2T) = 0 and (1-a) lu B^2 - mu B - 1/2 = 0.
// Exposed for direct checking; stepsize_bounds() fills them per side.
double lower_radius(double mu, double lambda_bar, double alpha,
                    double n0_over_T);
double upper_radius(double mu, double lambda_under, double alpha);

struct BoundsOptions {
  // mu_j needs max_tau ||S_j(tau)||_2; by default the window is scanned on a
  // stride of ~|window|/max_grid points and the result inflated by 5% as a
  // guard. exact_scan visits every tau with no inflation.
  bool exact_scan = false;
  int max_grid = 256;
  double stride_inflation = 1.05;
};

StepSizeBounds stepsize_bounds(const Dataset& d, const PenaltyConfig& cfg,
                               const SearchWindow& window,
                               const BoundsOptions& opts = {});

struct GlassoSettings {
  double gamma = 0.25;
  double tol = 1e-7;     // relative Frobenius change of the iterate
  int max_iter = 500;
  int max_restarts = 10; // gamma/2 restarts from theta0 before giving up
};

struct GlassoResult {
  SpdMatrix theta;
  int iters = 0;
  double objective = 0.0;   // g + lambda * penalty at the returned iterate
  double gamma_used = 0.0;
  int restarts = 0;
};

// Penalized one-block fit by prox-gradient iteration at fixed tau. Restarts
// from theta0 with gamma halved whenever an iterate leaves the SPD cone;
// throws Diverged once restarts are exhausted.
GlassoResult glasso_solve(Side side, int tau, const SpdMatrix& theta0,
                          const GlassoSettings& settings, const Dataset& d,
                          const PenaltyConfig& cfg);

// Same iteration with caller-supplied scatter/weight/lambda.
GlassoResult glasso_solve_kernel(const SymMatrix& scatter_avg,
                                 double loss_weight, double lambda,
                                 const SpdMatrix& theta0,
                                 const GlassoSettings& settings,
                                 const PenaltyConfig& cfg, int tau_hint = -1);

}  // namespace ggmcp
