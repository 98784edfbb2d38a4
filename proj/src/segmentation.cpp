#include "ggmcp/segmentation.hpp"

#include <cmath>
#include <utility>

#include "ggmcp/objective.hpp"

namespace ggmcp {

namespace {

int local_n0(const SegmentationConfig& cfg, int len) {
  return std::max(static_cast<int>(std::ceil(cfg.window_frac * len)),
                  cfg.n0_floor);
}

double guard_norm2(const SpdMatrix& th, bool frobenius) {
  const double n = frobenius ? th.sym().frob_full() : spectral_norm(th.sym());
  return n * n;
}

GlassoSettings inner_settings(const SegmentationConfig& cfg) {
  GlassoSettings s;
  s.gamma = cfg.gamma;
  s.tol = cfg.rule.practical_tol;
  s.max_iter = cfg.rule.max_iter;
  s.max_restarts = cfg.max_restarts;
  return s;
}

SpdMatrix ridged_inverse(SymMatrix s, int rows) {
  const double eps = (s.dim() < rows) ? 0.0 : 0.2;
  try {
    SymMatrix r = s;
    r.add_scaled_identity(eps);
    return SpdMatrix::cholesky(SpdMatrix::cholesky(r).inverse());
  } catch (const NotPositiveDefinite&) {
    s.add_scaled_identity(0.2);
    return SpdMatrix::cholesky(SpdMatrix::cholesky(s).inverse());
  }
}

// refine_iters extra prox steps at a fixed split; NotPositiveDefinite
// propagates to the caller, which treats it as reject-split.  Without an
// explicit refine_gamma the refinement continues at the step size the solver
// actually stabilized on, not the possibly too large initial one.
std::pair<SpdMatrix, SpdMatrix> refine_pair(const Dataset& seg,
                                            const SegmentationConfig& cfg,
                                            int tau, SpdMatrix th1,
                                            SpdMatrix th2, double gamma_used) {
  return refine_at(seg, cfg.penalty, tau, std::move(th1), std::move(th2),
                   cfg.refine_gamma.value_or(gamma_used), cfg.refine_iters);
}

// Lambda weight for the unsplit fit: the two schedule values at the midpoint,
// or both sides indexed by the full segment length.
double unsplit_lambda_weight(const Dataset& seg, const SegmentationConfig& cfg) {
  const int len = seg.T();
  const int p = seg.p();
  if (cfg.unsplit_lambda == UnsplitLambda::FullLength) {
    // lambda_1 at tau = len would fall outside [1, T-1]; index a phantom
    // series of length 2*len at its midpoint so both sides count len rows.
    return lambda_at(Side::Left, len, cfg.penalty, 2 * len, p) +
           lambda_at(Side::Right, len, cfg.penalty, 2 * len, p);
  }
  const int mid = std::max(1, std::min(len - 1, len / 2));
  return lambda_at(Side::Left, mid, cfg.penalty, len, p) +
         lambda_at(Side::Right, mid, cfg.penalty, len, p);
}

struct UnsplitFit {
  SpdMatrix theta;
  double ell = 0.0;
};

// Single-block fit on the whole segment, polished with the same number of
// extra prox steps the split fit receives, evaluated on the H scale with both
// blocks tied.
UnsplitFit fit_unsplit(const Dataset& seg, const SegmentationConfig& cfg) {
  const int len = seg.T();
  SymMatrix scat = SymMatrix::from_full(
      seg.rows().transpose() * seg.rows() / len, 1e-6);
  const double lam = unsplit_lambda_weight(seg, cfg);
  SpdMatrix theta0 = ridged_inverse(scat, len);
  GlassoResult fit = glasso_solve_kernel(scat, 0.5, lam, theta0,
                                         inner_settings(cfg), cfg.penalty);
  SpdMatrix theta = fit.theta;
  const double g = cfg.refine_gamma.value_or(fit.gamma_used);
  for (int k = 0; k < cfg.refine_iters; ++k) {
    theta = SpdMatrix::cholesky(
        prox_step_kernel(theta, scat, 0.5, g, lam, cfg.penalty));
  }
  UnsplitFit out;
  // len H is the summed penalized negative log-likelihood of the segment,
  // the scale on which the C p complexity penalty is comparable.
  out.ell = len *
            (0.5 * (-theta.logdet() + SymMatrix::inner_full(theta.sym(), scat)) +
             lam * penalty(theta.sym(), cfg.penalty));
  out.theta = std::move(theta);
  return out;
}

struct SplitFit {
  int tau = 0;  // segment-local
  SpdMatrix theta1, theta2;
  double ell = 0.0;
};

// Single-change-point solve on the segment plus refinement; throws Diverged
// when the solver gives up or the norm guard trips mid-run, and
// NotPositiveDefinite when refinement leaves the cone.
SplitFit fit_split(const Dataset& seg, const SegmentationConfig& cfg,
                   const SearchWindow& window, uint64_t node_seed) {
  SolverState state0;
  try {
    state0 = initialize(seg, cfg.penalty, window, node_seed);
  } catch (const NotPositiveDefinite&) {
    state0 = initialize(seg, cfg.penalty, window, node_seed, 0.2);
  }
  IterObserver guard = [&cfg](const SolverState& s) {
    if (guard_norm2(s.theta1, cfg.guard_frobenius) > cfg.guard ||
        guard_norm2(s.theta2, cfg.guard_frobenius) > cfg.guard) {
      throw Diverged("segmentation: norm guard tripped", s.tau);
    }
  };
  SolverState state;
  if (cfg.solver == SegmentSolver::ApproxMM) {
    state = mm_approx(seg, cfg.penalty, window, std::move(state0), cfg.gamma,
                      cfg.rule, guard, cfg.max_restarts);
  } else {
    KernelSpec kernel = cfg.kernel;
    if (kernel.sigma <= 0.0) kernel.sigma = std::max(2.0, 0.02 * seg.T());
    state = sa_solve(seg, cfg.penalty, window, std::move(state0), cfg.gamma,
                     kernel, cfg.cooling, nullptr, guard, cfg.max_restarts);
  }
  SplitFit out;
  out.tau = state.tau;
  auto [th1, th2] = refine_pair(seg, cfg, state.tau, state.theta1,
                                state.theta2, state.gamma_used);
  if (guard_norm2(th1, cfg.guard_frobenius) > cfg.guard ||
      guard_norm2(th2, cfg.guard_frobenius) > cfg.guard) {
    throw Diverged("segmentation: norm guard tripped after refinement",
                   state.tau);
  }
  out.ell =
      seg.T() * objective_H(out.tau, th1, th2, seg, cfg.penalty).total;
  out.theta1 = std::move(th1);
  out.theta2 = std::move(th2);
  return out;
}

std::unique_ptr<SegmentNode> build(const Dataset& d,
                                   const SegmentationConfig& cfg, int lo,
                                   int hi) {
  auto node = std::make_unique<SegmentNode>();
  node->lo = lo;
  node->hi = hi;
  const int len = hi - lo + 1;
  const Dataset seg(d.rows().middleRows(lo - 1, len));
  const int n0 = local_n0(cfg, len);

  bool split_ok = false;
  SplitFit split;
  if (len >= 2 * n0 + 1) {
    const SearchWindow window(n0, len);
    const uint64_t node_seed = Rng::mix(
        cfg.seed, Rng::mix(static_cast<uint64_t>(lo), static_cast<uint64_t>(hi)));
    try {
      split = fit_split(seg, cfg, window, node_seed);
      split_ok = true;
    } catch (const Diverged&) {
      node->diverged = true;
    } catch (const NotPositiveDefinite&) {
      node->diverged = true;
    }
  }

  UnsplitFit unsplit;
  bool unsplit_ok = false;
  try {
    unsplit = fit_unsplit(seg, cfg);
    unsplit_ok = true;
    node->ell_F = unsplit.ell;
  } catch (const NotPositiveDefinite&) {
    node->diverged = true;
  } catch (const Diverged&) {
    node->diverged = true;
  }

  if (split_ok && unsplit_ok) {
    node->ell_tau = split.ell;
    if (split.ell + cfg.C * seg.p() < unsplit.ell) {
      node->tau = lo - 1 + split.tau;
      node->theta_left = std::move(split.theta1);
      node->theta_right = std::move(split.theta2);
      node->left = build(d, cfg, lo, *node->tau);
      node->right = build(d, cfg, *node->tau + 1, hi);
      return node;
    }
  }
  if (unsplit_ok) node->theta_left = std::move(unsplit.theta);
  return node;
}

void collect(const SegmentNode& node, ChangePointSet* out) {
  if (node.tau && node.left && node.right) {
    collect(*node.left, out);
    out->taus.push_back(*node.tau);
    collect(*node.right, out);
    return;
  }
  if (node.theta_left) {
    out->segments.push_back({node.lo, node.hi, *node.theta_left});
  }
}

}  // namespace

SegmentationResult binary_segmentation(const Dataset& d,
                                       const SegmentationConfig& cfg) {
  cfg.penalty.validate();
  if (cfg.C < 0.0) throw Error("binary_segmentation: C must be nonnegative");
  if (cfg.refine_iters < 0) {
    throw Error("binary_segmentation: refine_iters must be nonnegative");
  }
  if (cfg.rule.kind != StopKind::Practical) {
    throw Error("binary_segmentation: inner solver uses the practical rule");
  }
  SegmentationResult out;
  out.tree = build(d, cfg, 1, d.T());
  collect(*out.tree, &out.points);
  return out;
}

double penalized_nll(const Dataset& segment, std::optional<int> split,
                     const SegmentationConfig& cfg) {
  cfg.penalty.validate();
  if (!split) return fit_unsplit(segment, cfg).ell;

  const int len = segment.T();
  const SearchWindow window(local_n0(cfg, len), len);
  if (!window.contains(*split)) {
    throw OutOfWindow("penalized_nll: split outside the segment window");
  }
  const int tau = *split;
  const GlassoSettings settings = inner_settings(cfg);
  SymMatrix s1 = scatter(Side::Left, tau, segment);
  SymMatrix s2 = scatter(Side::Right, tau, segment);
  GlassoResult r1 = glasso_solve(Side::Left, tau, ridged_inverse(s1, tau),
                                 settings, segment, cfg.penalty);
  GlassoResult r2 = glasso_solve(Side::Right, tau, ridged_inverse(s2, len - tau),
                                 settings, segment, cfg.penalty);
  auto [th1, th2] = refine_pair(segment, cfg, tau, r1.theta, r2.theta,
                                std::min(r1.gamma_used, r2.gamma_used));
  return len * objective_H(tau, th1, th2, segment, cfg.penalty).total;
}

}  // namespace ggmcp
