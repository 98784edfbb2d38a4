#include "ggmcp/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace ggmcp {

namespace {

double side_weight(Side side, int tau, int T) {
  return (side == Side::Left) ? 0.5 * tau / T : 0.5 * (T - tau) / T;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double rel_change(const SymMatrix& next, const SymMatrix& prev) {
  SymMatrix diff = next;
  diff -= prev;
  return diff.frob_full() / std::max(1.0, prev.frob_full());
}

}  // namespace

bool check_stop(const SolverState& state, const StoppingRule& rule, int T) {
  switch (rule.kind) {
    case StopKind::V2: {
      if (!rule.true_tau) {
        throw MissingReference("check_stop: V2 needs true_tau");
      }
      return std::abs(state.tau - *rule.true_tau) <
             rule.tau_tol * static_cast<double>(T);
    }
    case StopKind::V1: {
      if (!rule.true_tau || !rule.reference_thetas) {
        throw MissingReference("check_stop: V1 needs true_tau and references");
      }
      if (std::abs(state.tau - *rule.true_tau) >=
          rule.tau_tol * static_cast<double>(T)) {
        return false;
      }
      const auto& [ref1, ref2] = *rule.reference_thetas;
      SymMatrix d1 = state.theta1.sym();
      d1 -= ref1.sym();
      SymMatrix d2 = state.theta2.sym();
      d2 -= ref2.sym();
      const double dist = d1.frob_full() / ref1.sym().frob_full() +
                          d2.frob_full() / ref2.sym().frob_full();
      return dist < rule.theta_tol;
    }
    case StopKind::Practical:
      return state.stable_streak >= rule.practical_window ||
             state.k >= rule.max_iter;
  }
  return false;
}

SolverState initialize_at(const Dataset& d, const PenaltyConfig& cfg, int tau,
                          std::optional<double> epsilon) {
  cfg.validate();
  double eps;
  if (epsilon.has_value()) {
    eps = *epsilon;
  } else {
    eps = (d.p() < std::min(tau, d.T() - tau)) ? 0.0 : 0.2;
  }
  SolverState state;
  state.tau = tau;
  for (Side side : {Side::Left, Side::Right}) {
    SymMatrix s = scatter(side, tau, d);
    s.add_scaled_identity(eps);
    const SpdMatrix ridged = SpdMatrix::cholesky(s);  // throws when singular
    const SpdMatrix theta = SpdMatrix::cholesky(ridged.inverse());
    if (side == Side::Left) {
      state.theta1 = theta;
    } else {
      state.theta2 = theta;
    }
  }
  return state;
}

SolverState initialize(const Dataset& d, const PenaltyConfig& cfg,
                       const SearchWindow& window, uint64_t seed,
                       std::optional<double> epsilon) {
  Rng rng(seed);
  const int tau0 = rng.uniform_int(window.lo, window.hi);
  SolverState state = initialize_at(d, cfg, tau0, epsilon);
  state.rng_seed = seed;
  return state;
}

std::pair<SpdMatrix, SpdMatrix> refine_at(const Dataset& d,
                                          const PenaltyConfig& cfg, int tau,
                                          SpdMatrix theta1, SpdMatrix theta2,
                                          double gamma, int iters) {
  const int T = d.T();
  const double w1 = side_weight(Side::Left, tau, T);
  const double w2 = side_weight(Side::Right, tau, T);
  const double l1 = lambda_at(Side::Left, tau, cfg, d);
  const double l2 = lambda_at(Side::Right, tau, cfg, d);
  ScatterTracker tracker(d, tau);
  for (int k = 0; k < iters; ++k) {
    SymMatrix n1 =
        prox_step_kernel(theta1, tracker.left_avg(), w1, gamma, l1, cfg);
    SymMatrix n2 =
        prox_step_kernel(theta2, tracker.right_avg(), w2, gamma, l2, cfg);
    theta1 = SpdMatrix::cholesky(n1);
    theta2 = SpdMatrix::cholesky(n2);
  }
  return {std::move(theta1), std::move(theta2)};
}

BruteForceResult brute_force(const Dataset& d, const PenaltyConfig& cfg,
                             const SearchWindow& window,
                             const GlassoSettings& inner,
                             const SolverState& state0) {
  cfg.validate();
  const int T = d.T();
  ScatterTracker tracker(d, window.lo);
  SpdMatrix th1 = state0.theta1;
  SpdMatrix th2 = state0.theta2;

  BruteForceResult out;
  out.G_profile.reserve(window.size());
  double best = std::numeric_limits<double>::infinity();
  for (int t = window.lo; t <= window.hi; ++t) {
    tracker.move_to(t);
    GlassoResult r1 = glasso_solve_kernel(
        tracker.left_avg(), side_weight(Side::Left, t, T),
        lambda_at(Side::Left, t, cfg, d), th1, inner, cfg, t);
    GlassoResult r2 = glasso_solve_kernel(
        tracker.right_avg(), side_weight(Side::Right, t, T),
        lambda_at(Side::Right, t, cfg, d), th2, inner, cfg, t);
    th1 = r1.theta;  // warm start for the next candidate
    th2 = r2.theta;
    const double G = r1.objective + r2.objective;
    // Same comparison as argmin_smallest_tie so the stored pair matches.
    const double tie = 1e-12 * std::max({std::abs(G), std::abs(best), 1.0});
    if (out.G_profile.empty() || G < best - tie) {
      best = G;
      out.tau_hat = t;
      out.theta1 = r1.theta;
      out.theta2 = r2.theta;
    }
    out.G_profile.push_back(G);
  }
  return out;
}

SolverState mm_exact(const Dataset& d, const PenaltyConfig& cfg,
                     const SearchWindow& window, SolverState state0,
                     const GlassoSettings& inner, int max_outer) {
  cfg.validate();
  const int T = d.T();
  SolverState state = std::move(state0);
  if (!window.contains(state.tau)) {
    throw OutOfWindow("mm_exact: state tau outside the window");
  }
  ScatterTracker tracker(d, state.tau);
  state.gamma_used = inner.gamma;
  for (int outer = 1; outer <= max_outer; ++outer) {
    GlassoResult r1 = glasso_solve_kernel(
        tracker.left_avg(), side_weight(Side::Left, state.tau, T),
        lambda_at(Side::Left, state.tau, cfg, d), state.theta1, inner, cfg,
        state.tau);
    GlassoResult r2 = glasso_solve_kernel(
        tracker.right_avg(), side_weight(Side::Right, state.tau, T),
        lambda_at(Side::Right, state.tau, cfg, d), state.theta2, inner, cfg,
        state.tau);
    state.theta1 = r1.theta;
    state.theta2 = r2.theta;
    state.k = outer;
    state.tau_trace.push_back(state.tau);
    state.objective_trace.push_back(r1.objective + r2.objective);

    const LineSearchResult ls =
        line_search_H(state.theta1, state.theta2, d, cfg, window);
    if (ls.tau_hat == state.tau) {
      state.stop_reason = "stationary";
      return state;
    }
    if (outer == max_outer) break;
    state.tau = ls.tau_hat;
    tracker.move_to(state.tau);
  }
  state.stop_reason = "max_outer";
  return state;
}

SolverState mm_approx(const Dataset& d, const PenaltyConfig& cfg,
                      const SearchWindow& window, SolverState state0,
                      double gamma, const StoppingRule& rule,
                      const IterObserver& observer, int max_restarts) {
  cfg.validate();
  if (!window.contains(state0.tau)) {
    throw OutOfWindow("mm_approx: state tau outside the window");
  }
  const int T = d.T();
  for (int attempt = 0; attempt <= max_restarts; ++attempt) {
    const double g = gamma * std::pow(0.5, attempt);
    SolverState state = state0;
    state.gamma_used = g;
    state.restarts = attempt;
    ScatterTracker tracker(d, state.tau);
    bool diverged = false;
    // F_k must be non-increasing; an uptick means gamma exceeds the stability
    // bound even though iterates stayed SPD, so it takes the same restart path.
    double f_prev =
        objective_H(state.tau, state.theta1, state.theta2, d, cfg).total;
    for (int k = 1; k <= rule.max_iter; ++k) {
      const int tau_prev = state.tau;
      SymMatrix next1 = prox_step_kernel(
          state.theta1, tracker.left_avg(),
          side_weight(Side::Left, tau_prev, T), g,
          lambda_at(Side::Left, tau_prev, cfg, d), cfg);
      SymMatrix next2 = prox_step_kernel(
          state.theta2, tracker.right_avg(),
          side_weight(Side::Right, tau_prev, T), g,
          lambda_at(Side::Right, tau_prev, cfg, d), cfg);
      SpdMatrix th1, th2;
      try {
        th1 = SpdMatrix::cholesky(next1);
        th2 = SpdMatrix::cholesky(next2);
      } catch (const NotPositiveDefinite&) {
        diverged = true;
        break;
      }
      const LineSearchResult ls = line_search_H(th1, th2, d, cfg, window);
      const double f_k = ls.values[ls.tau_hat - window.lo];
      if (f_k > f_prev + 1e-8) {
        diverged = true;
        break;
      }
      f_prev = f_k;

      const double d1 = rel_change(th1.sym(), state.theta1.sym());
      const double d2 = rel_change(th2.sym(), state.theta2.sym());
      const double dt =
          std::abs(ls.tau_hat - tau_prev) / static_cast<double>(T);
      if (d1 < rule.practical_tol && d2 < rule.practical_tol &&
          dt < rule.practical_tol) {
        ++state.stable_streak;
      } else {
        state.stable_streak = 0;
      }

      state.theta1 = std::move(th1);
      state.theta2 = std::move(th2);
      state.tau = ls.tau_hat;
      state.k = k;
      state.tau_trace.push_back(state.tau);
      state.objective_trace.push_back(ls.values[state.tau - window.lo]);
      tracker.move_to(state.tau);
      if (observer) observer(state);

      if (rule.kind != StopKind::Practical && check_stop(state, rule, T)) {
        state.stop_reason = rule.kind == StopKind::V1 ? "v1" : "v2";
        return state;
      }
      if (rule.kind == StopKind::Practical &&
          state.stable_streak >= rule.practical_window) {
        state.stop_reason = "practical";
        return state;
      }
    }
    if (!diverged) {
      state.stop_reason = "max_iter";
      return state;
    }
  }
  throw Diverged("mm_approx: divergence persisted after " +
                     std::to_string(max_restarts) + " gamma restarts",
                 state0.tau);
}

MhSampler::MhSampler(const Dataset& d, const PenaltyConfig& cfg,
                     const SearchWindow& window, int tau0, SpdMatrix theta1,
                     SpdMatrix theta2)
    : d_(&d),
      cfg_(cfg),
      window_(window),
      tracker_(d, tau0),
      th1_(std::move(theta1)),
      th2_(std::move(theta2)) {
  if (!window.contains(tau0)) {
    throw OutOfWindow("MhSampler: tau0 outside the window");
  }
  refresh_caches();
}

void MhSampler::set_thetas(SpdMatrix theta1, SpdMatrix theta2) {
  th1_ = std::move(theta1);
  th2_ = std::move(theta2);
  refresh_caches();
}

void MhSampler::refresh_caches() {
  th1_full_ = th1_.sym().to_full();
  th2_full_ = th2_.sym().to_full();
  pen1_ = penalty(th1_.sym(), cfg_);
  pen2_ = penalty(th2_.sym(), cfg_);
  A1_ = th1_full_.cwiseProduct(tracker_.left_sum()).sum();
  A2_ = th2_full_.cwiseProduct(tracker_.total_sum() - tracker_.left_sum()).sum();
  H_cur_ = assemble_H(tracker_.tau(), A1_, A2_);
}

double MhSampler::assemble_H(int tau_prime, double a1, double a2) const {
  const int T = d_->T();
  const double inv2T = 0.5 / T;
  const double gsum = inv2T * (-tau_prime * th1_.logdet() + a1) +
                      inv2T * (-(T - tau_prime) * th2_.logdet() + a2);
  return gsum + lambda_at(Side::Left, tau_prime, cfg_, *d_) * pen1_ +
         lambda_at(Side::Right, tau_prime, cfg_, *d_) * pen2_;
}

void MhSampler::gap_sums(int tau_prime, double* a1, double* a2) const {
  *a1 = A1_;
  *a2 = A2_;
  const int tau = tracker_.tau();
  const int lo = std::min(tau, tau_prime) + 1;
  const int hi = std::max(tau, tau_prime);
  const double sign = (tau_prime > tau) ? 1.0 : -1.0;
  for (int s = lo; s <= hi; ++s) {
    const Eigen::VectorXd x = d_->row_t(s).transpose();
    *a1 += sign * x.dot(th1_full_ * x);
    *a2 -= sign * x.dot(th2_full_ * x);
  }
}

double MhSampler::H_at(int tau_prime) const {
  if (!window_.contains(tau_prime)) {
    throw OutOfWindow("MhSampler::H_at: tau outside the window");
  }
  double a1, a2;
  gap_sums(tau_prime, &a1, &a2);
  return assemble_H(tau_prime, a1, a2);
}

MhSampler::Proposal MhSampler::propose(const KernelSpec& kernel, Rng& rng) {
  KernelKind kind = kernel.kind;
  if (kind == KernelKind::Mixture) {
    kind = (rng.uniform() < kernel.mix_weight)
               ? KernelKind::IndependenceUniform
               : KernelKind::RandomWalkTruncGauss;
  }
  Proposal prop;
  if (kind == KernelKind::IndependenceUniform) {
    prop.tau = rng.uniform_int(window_.lo, window_.hi);
    prop.log_ratio = 0.0;
    prop.valid = true;
    return prop;
  }
  // Continuous Gaussian step rounded to the nearest integer, re-proposed
  // while it lands outside the window. The discrete proposal mass of t is
  // Phi((t - tau + 1/2)/sigma) - Phi((t - tau - 1/2)/sigma) normalized over
  // the window; displaced masses are symmetric in t - tau, so the MH ratio
  // reduces to the normalizer ratio Z(tau)/Z(tau').
  const double sigma = kernel.sigma;
  const int tau = tracker_.tau();
  for (int attempt = 0; attempt < 100; ++attempt) {
    const double z = rng.normal();
    const long t = std::llround(tau + sigma * z);
    if (t >= window_.lo && t <= window_.hi) {
      prop.tau = static_cast<int>(t);
      prop.valid = true;
      break;
    }
  }
  if (!prop.valid) return prop;
  auto log_mass = [&](int center) {
    const double hi = (window_.hi - center + 0.5) / sigma;
    const double lo = (window_.lo - center - 0.5) / sigma;
    return std::log(normal_cdf(hi) - normal_cdf(lo));
  };
  prop.log_ratio = log_mass(tau) - log_mass(prop.tau);
  return prop;
}

MhSampler::StepResult MhSampler::step(double beta, const KernelSpec& kernel,
                                      Rng& rng) {
  const Proposal prop = propose(kernel, rng);
  if (!prop.valid) {
    return {tracker_.tau(), false, H_cur_};
  }
  double a1, a2;
  gap_sums(prop.tau, &a1, &a2);
  const double H_prime = assemble_H(prop.tau, a1, a2);
  const double log_a = -(H_prime - H_cur_) / beta + prop.log_ratio;
  const double accept = (log_a >= 0.0) ? 1.0 : std::exp(log_a);
  const bool accepted = rng.uniform() < accept;
  if (accepted) {
    tracker_.move_to(prop.tau);
    A1_ = a1;
    A2_ = a2;
    H_cur_ = H_prime;
  }
  return {tracker_.tau(), accepted, H_prime};
}

MhSampler::StepResult mh_step(const SolverState& state, double beta,
                              const KernelSpec& kernel, const Dataset& d,
                              const PenaltyConfig& cfg,
                              const SearchWindow& window, Rng& rng) {
  MhSampler sampler(d, cfg, window, state.tau, state.theta1, state.theta2);
  return sampler.step(beta, kernel, rng);
}

SolverState sa_solve(const Dataset& d, const PenaltyConfig& cfg,
                     const SearchWindow& window, SolverState state0,
                     double gamma, const KernelSpec& kernel,
                     const CoolingSchedule& cooling, const StoppingRule* rule,
                     const IterObserver& observer, int max_restarts) {
  cfg.validate();
  if (!window.contains(state0.tau)) {
    throw OutOfWindow("sa_solve: state tau outside the window");
  }
  if (rule && rule->kind == StopKind::Practical) {
    throw Error("sa_solve: only V1/V2 rules can preempt the cooling budget");
  }
  const int T = d.T();
  for (int attempt = 0; attempt <= max_restarts; ++attempt) {
    const double g = gamma * std::pow(0.5, attempt);
    SolverState state = state0;
    state.gamma_used = g;
    state.restarts = attempt;
    Rng rng(Rng::mix(state0.rng_seed, 0x5aa5c3d2b4e69f87ULL));
    MhSampler sampler(d, cfg, window, state.tau, state.theta1, state.theta2);
    bool diverged = false;
    for (int k = 1; k <= cooling.M; ++k) {
      const int tau_prev = sampler.tau();
      SymMatrix next1 = prox_step_kernel(
          sampler.theta1(), sampler.left_scatter_avg(),
          side_weight(Side::Left, tau_prev, T), g,
          lambda_at(Side::Left, tau_prev, cfg, d), cfg);
      SymMatrix next2 = prox_step_kernel(
          sampler.theta2(), sampler.right_scatter_avg(),
          side_weight(Side::Right, tau_prev, T), g,
          lambda_at(Side::Right, tau_prev, cfg, d), cfg);
      SpdMatrix th1, th2;
      try {
        th1 = SpdMatrix::cholesky(next1);
        th2 = SpdMatrix::cholesky(next2);
      } catch (const NotPositiveDefinite&) {
        diverged = true;
        break;
      }
      sampler.set_thetas(std::move(th1), std::move(th2));
      const double beta = cooling.beta(k);
      sampler.step(beta, kernel, rng);

      state.tau = sampler.tau();
      state.theta1 = sampler.theta1();
      state.theta2 = sampler.theta2();
      state.k = k;
      state.tau_trace.push_back(state.tau);
      state.objective_trace.push_back(sampler.current_H());
      state.beta_trace.push_back(beta);
      if (observer) observer(state);

      if (rule && check_stop(state, *rule, T)) {
        state.stop_reason = rule->kind == StopKind::V1 ? "v1" : "v2";
        return state;
      }
    }
    if (!diverged) {
      state.stop_reason = "cooled";
      return state;
    }
  }
  throw Diverged("sa_solve: divergence persisted after " +
                     std::to_string(max_restarts) + " gamma restarts",
                 state0.tau);
}

}  // namespace ggmcp
