#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <initializer_list>
#include <vector>

#include "ggmcp/dataset.hpp"
#include "ggmcp/objective.hpp"
#include "ggmcp/penalty.hpp"
#include "ggmcp/rng.hpp"
#include "ggmcp/sym_matrix.hpp"

namespace testutil {

inline ggmcp::SymMatrix sym_from(std::initializer_list<std::initializer_list<double>> rows) {
  const int p = static_cast<int>(rows.size());
  Eigen::MatrixXd m(p, p);
  int i = 0;
  for (const auto& r : rows) {
    int j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return ggmcp::SymMatrix::from_full(m);
}

// Random SPD matrix A A' / p + d I; eigenvalues bounded away from zero.
inline ggmcp::SymMatrix rand_spd(int p, ggmcp::Rng& rng, double diag = 0.5) {
  Eigen::MatrixXd a(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) a(i, j) = rng.normal();
  Eigen::MatrixXd m = a * a.transpose() / p;
  for (int i = 0; i < p; ++i) m(i, i) += diag;
  return ggmcp::SymMatrix::from_full(m);
}

inline ggmcp::Dataset rand_dataset(int T, int p, ggmcp::Rng& rng) {
  Eigen::MatrixXd x(T, p);
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < p; ++j) x(t, j) = rng.normal();
  return ggmcp::Dataset(x);
}

// Numeric minimizer of (u-x)^2/(2 gl) + gl-free elastic net terms, by sign
// bisection on the subgradient. Value comparisons cap golden-section accuracy
// near sqrt(eps); the optimality condition localizes the argmin to full
// precision, which the 1e-10 prox checks need.
inline double prox_numeric(double x, double gl, double alpha) {
  // 0 is optimal iff 0 lies in the subdifferential there: |x| <= alpha*gl.
  if (std::abs(x) <= alpha * gl) return 0.0;
  const double s = (x > 0.0) ? 1.0 : -1.0;
  auto grad = [&](double u) { return (u - x) / gl + alpha * s + (1.0 - alpha) * u; };
  double lo = 0.0, hi = std::abs(x) + 1.0;  // grad(0*) < 0 <= grad(|x|+1) on the s side
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (grad(s * mid) * s < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return s * 0.5 * (lo + hi);
}

// Golden-section minimizer over [lo, hi]; independent oracle for prox checks.
template <typename F>
double golden_section(F f, double lo, double hi, double tol = 1e-14) {
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  while (b - a > tol) {
    if (f(c) < f(d)) {
      b = d;
    } else {
      a = c;
    }
    c = b - gr * (b - a);
    d = a + gr * (b - a);
  }
  return (a + b) / 2.0;
}

// Naive H scan over the window via objective_H; oracle for line_search_H.
inline std::pair<int, std::vector<double>> naive_scan(
    const ggmcp::SpdMatrix& th1, const ggmcp::SpdMatrix& th2,
    const ggmcp::Dataset& d, const ggmcp::PenaltyConfig& cfg,
    const ggmcp::SearchWindow& w) {
  std::vector<double> vals;
  vals.reserve(w.size());
  int best = w.lo;
  double best_v = std::numeric_limits<double>::infinity();
  for (int t = w.lo; t <= w.hi; ++t) {
    const double v = ggmcp::objective_H(t, th1, th2, d, cfg).total;
    vals.push_back(v);
    if (v < best_v) {
      best_v = v;
      best = t;
    }
  }
  return {best, vals};
}

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1.0});
}

inline double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace testutil
