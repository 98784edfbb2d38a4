#pragma once

#include <span>
#include <vector>

#include "ggmcp/dataset.hpp"
#include "ggmcp/penalty.hpp"
#include "ggmcp/sym_matrix.hpp"

namespace ggmcp {

// H(tau | theta1, theta2) split into its four terms:
//   g1   = (tau/2T)   * (-logdet theta1 + Tr(theta1 S1(tau)))
//   g2   = ((T-tau)/2T) * (-logdet theta2 + Tr(theta2 S2(tau)))
//   penj = lambda_{j,tau} * penalty(theta_j)
struct ObjectiveBreakdown {
  double g1 = 0.0;
  double pen1 = 0.0;
  double g2 = 0.0;
  double pen2 = 0.0;
  double total = 0.0;
};

double g_value(Side side, int tau, const SpdMatrix& theta, const Dataset& d);

// Gradient of the side loss at theta. WeightedTau: (tau/2T)(S1(tau) -
// theta^-1) on the left, ((T-tau)/2T)(S2(tau) - theta^-1) on the right;
// Unweighted drops the fraction.
SymMatrix loss_gradient(Side side, int tau, const SpdMatrix& theta,
                        const Dataset& d, const PenaltyConfig& cfg);

ObjectiveBreakdown objective_H(int tau, const SpdMatrix& theta1,
                               const SpdMatrix& theta2, const Dataset& d,
                               const PenaltyConfig& cfg);

// q(t) = x_t' theta x_t for every row, in time order.
std::vector<double> quadratic_forms(const SymMatrix& theta, const Dataset& d);

struct LineSearchResult {
  int tau_hat = 0;
  std::vector<double> values;  // H(t | theta1, theta2), t = window.lo + i
};

// Evaluates H over the whole window in O(T p^2) via quadratic-form prefix
// sums and the cached log-determinants, then picks the minimizing t.
LineSearchResult line_search_H(const SpdMatrix& theta1, const SpdMatrix& theta2,
                               const Dataset& d, const PenaltyConfig& cfg,
                               const SearchWindow& window);

// First index attaining the minimum; values within 1e-12 relative of the
// running best count as ties and keep the smaller index.
int argmin_smallest_tie(std::span<const double> values);

}  // namespace ggmcp
