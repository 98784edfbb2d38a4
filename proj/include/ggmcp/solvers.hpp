#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ggmcp/dataset.hpp"
#include "ggmcp/objective.hpp"
#include "ggmcp/prox.hpp"
#include "ggmcp/rng.hpp"

namespace ggmcp {

struct SolverState {
  int tau = 0;
  SpdMatrix theta1;
  SpdMatrix theta2;
  int k = 0;                          // iterations completed
  std::vector<int> tau_trace;         // tau after each iteration
  std::vector<double> objective_trace;  // H(tau_k | theta_k) per iteration
  std::vector<double> beta_trace;     // annealing only
  uint64_t rng_seed = 0;
  double gamma_used = 0.0;
  int restarts = 0;
  int stable_streak = 0;  // consecutive iterations under practical_tol
  std::string stop_reason;
};

enum class StopKind { V1, V2, Practical };

// V1: tau within tau_tol of true_tau (relative to T) AND
//     sum_j ||theta_j - ref_j||_F / ||ref_j||_F < theta_tol.
// V2: the tau condition alone (strict inequality).
// Practical: relative change of (tau, theta1, theta2) below practical_tol for
//            practical_window consecutive iterations, or max_iter reached.
struct StoppingRule {
  StopKind kind = StopKind::Practical;
  int max_iter = 500;
  double tau_tol = 0.005;
  double theta_tol = 0.05;
  double practical_tol = 1e-5;
  int practical_window = 25;
  std::optional<int> true_tau{};
  std::optional<std::pair<SpdMatrix, SpdMatrix>> reference_thetas{};
};

bool check_stop(const SolverState& state, const StoppingRule& rule, int T);

// Geometric cooling from beta0 down to betaM over M iterations:
// beta(k) = beta0 * decay^k with decay = (betaM / beta0)^(1/M).
struct CoolingSchedule {
  double beta0 = 1.0;
  double betaM = 1e-3;
  int M = 1000;

  double decay() const { return std::pow(betaM / beta0, 1.0 / M); }
  double beta(int k) const { return beta0 * std::pow(decay(), k); }
};

enum class KernelKind { IndependenceUniform, RandomWalkTruncGauss, Mixture };

struct KernelSpec {
  KernelKind kind = KernelKind::IndependenceUniform;
  double sigma = 2.0;       // random-walk scale
  double mix_weight = 0.5;  // P(independence component) in the mixture

  static KernelSpec defaults(int T, KernelKind kind = KernelKind::IndependenceUniform) {
    KernelSpec k;
    k.kind = kind;
    k.sigma = std::max(2.0, 0.02 * T);
    return k;
  }
};

// tau0 uniform on the window; theta_j0 = (S_j(tau0) + eps I)^-1. When eps is
// not given: 0 if p < min(tau0, T - tau0), else 0.2. Throws
// NotPositiveDefinite when the ridged scatter still fails to factor.
SolverState initialize(const Dataset& d, const PenaltyConfig& cfg,
                       const SearchWindow& window, uint64_t seed,
                       std::optional<double> epsilon = {});

// Same block construction at a caller-chosen tau, no draw.
SolverState initialize_at(const Dataset& d, const PenaltyConfig& cfg, int tau,
                          std::optional<double> epsilon = {});

// iters prox-gradient steps on both blocks at a fixed tau (reference fits
// and post-split polishing). NotPositiveDefinite propagates.
std::pair<SpdMatrix, SpdMatrix> refine_at(const Dataset& d,
                                          const PenaltyConfig& cfg, int tau,
                                          SpdMatrix theta1, SpdMatrix theta2,
                                          double gamma, int iters);

using IterObserver = std::function<void(const SolverState&)>;

struct BruteForceResult {
  int tau_hat = 0;
  SpdMatrix theta1;
  SpdMatrix theta2;
  std::vector<double> G_profile;  // G(t), t = window.lo + i
};

// Full scan: penalized fits on both sides for every tau in the window (warm
// started from the previous tau), G(tau) = H at the fitted pair, smallest
// minimizer wins.
BruteForceResult brute_force(const Dataset& d, const PenaltyConfig& cfg,
                             const SearchWindow& window,
                             const GlassoSettings& inner,
                             const SolverState& state0);

// Exact majorize-minimize: full inner fits at the current tau, then a global
// line search; stops when tau repeats or max_outer is hit. The G trace is
// non-increasing by construction (descent inner solver + warm starts).
SolverState mm_exact(const Dataset& d, const PenaltyConfig& cfg,
                     const SearchWindow& window, SolverState state0,
                     const GlassoSettings& inner, int max_outer = 50);

// Approximate majorize-minimize: one prox step per block at the previous tau,
// then a line search. On divergence restarts from state0 with gamma halved
// (at most max_restarts times).
SolverState mm_approx(const Dataset& d, const PenaltyConfig& cfg,
                      const SearchWindow& window, SolverState state0,
                      double gamma, const StoppingRule& rule,
                      const IterObserver& observer = {}, int max_restarts = 10);

// Simulated annealing: per iteration one prox step per block at the current
// tau, then one Metropolis-Hastings draw targeting
// pi_beta(tau) ~ exp(-H(tau | theta1, theta2) / beta) at the cooled beta.
// Runs exactly cooling.M iterations unless a V1/V2 rule fires.
SolverState sa_solve(const Dataset& d, const PenaltyConfig& cfg,
                     const SearchWindow& window, SolverState state0,
                     double gamma, const KernelSpec& kernel,
                     const CoolingSchedule& cooling,
                     const StoppingRule* rule = nullptr,
                     const IterObserver& observer = {}, int max_restarts = 10);

// Incremental H evaluator plus MH kernel for a fixed (theta1, theta2) pair.
// Construction costs O(tau p^2); each step costs O(|tau' - tau| p^2) with the
// left scatter sum updated by rank-one operations only on acceptance.
class MhSampler {
 public:
  MhSampler(const Dataset& d, const PenaltyConfig& cfg,
            const SearchWindow& window, int tau0, SpdMatrix theta1,
            SpdMatrix theta2);

  // Swap in freshly updated blocks; H caches are rebuilt in O(p^2).
  void set_thetas(SpdMatrix theta1, SpdMatrix theta2);

  struct StepResult {
    int tau_next = 0;
    bool accepted = false;
    double H_proposed = 0.0;
  };

  StepResult step(double beta, const KernelSpec& kernel, Rng& rng);

  int tau() const { return tracker_.tau(); }
  double current_H() const { return H_cur_; }
  const SpdMatrix& theta1() const { return th1_; }
  const SpdMatrix& theta2() const { return th2_; }
  SymMatrix left_scatter_avg() const { return tracker_.left_avg(); }
  SymMatrix right_scatter_avg() const { return tracker_.right_avg(); }

  // H(tau') relative to the current state; pure, no commitment.
  double H_at(int tau_prime) const;

 private:
  struct Proposal {
    int tau = 0;
    double log_ratio = 0.0;  // log q(tau|tau') - log q(tau'|tau)
    bool valid = false;
  };
  Proposal propose(const KernelSpec& kernel, Rng& rng);
  double assemble_H(int tau_prime, double a1, double a2) const;
  void gap_sums(int tau_prime, double* a1, double* a2) const;
  void refresh_caches();

  const Dataset* d_;
  PenaltyConfig cfg_;
  SearchWindow window_;
  ScatterTracker tracker_;
  SpdMatrix th1_, th2_;
  Eigen::MatrixXd th1_full_, th2_full_;
  double pen1_ = 0.0, pen2_ = 0.0;
  double A1_ = 0.0;  // <theta1, P(tau)>
  double A2_ = 0.0;  // <theta2, P(T) - P(tau)>
  double H_cur_ = 0.0;
};

// One-shot wrapper over MhSampler for a single kernel draw from a state.
MhSampler::StepResult mh_step(const SolverState& state, double beta,
                              const KernelSpec& kernel, const Dataset& d,
                              const PenaltyConfig& cfg,
                              const SearchWindow& window, Rng& rng);

}  // namespace ggmcp
