#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "ggmcp/errors.hpp"

namespace ggmcp {

// Dense symmetric matrix stored as the upper triangle, row-major with i <= j,
// length p(p+1)/2. Entry (i,j) and (j,i) are the same stored value.
//
// Norms come in two flavours: *_upper sums each off-diagonal pair once (the
// i <= j storage convention), *_full counts both triangles like the usual
// trace inner product. Spectral quantities always act on the full matrix.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(int dim) : dim_(dim), data_(stored_count(dim), 0.0) {}

  static SymMatrix identity(int dim);
  // Symmetrizes m = (m + m^T)/2; throws ShapeMismatch if m is not square or
  // departs from symmetry by more than tol in max-abs.
  static SymMatrix from_full(const Eigen::MatrixXd& m, double tol = 1e-9);

  int dim() const { return dim_; }
  int stored_size() const { return static_cast<int>(data_.size()); }
  static int stored_count(int dim) { return dim * (dim + 1) / 2; }

  // Flat index of (i,j); arguments may come in either order.
  int index(int i, int j) const {
    if (i > j) std::swap(i, j);
    return i * (2 * dim_ - i - 1) / 2 + j;
  }

  double operator()(int i, int j) const { return data_[index(i, j)]; }
  double& entry(int i, int j) { return data_[index(i, j)]; }

  std::span<const double> upper() const { return data_; }
  std::span<double> upper() { return data_; }

  Eigen::MatrixXd to_full() const;

  double l1_upper(bool include_diagonal = true) const;
  double l1_full(bool include_diagonal = true) const;
  double frob2_upper() const;
  double frob2_full() const;
  double frob_full() const;
  double max_abs() const;

  static double inner_upper(const SymMatrix& a, const SymMatrix& b);
  // Trace inner product <A,B> = sum_ij A_ij B_ij.
  static double inner_full(const SymMatrix& a, const SymMatrix& b);

  SymMatrix& operator+=(const SymMatrix& o);
  SymMatrix& operator-=(const SymMatrix& o);
  SymMatrix& scale(double c);
  SymMatrix& add_scaled_identity(double c);

 private:
  int dim_ = 0;
  std::vector<double> data_;
};

// SPD view of a SymMatrix: caches the lower Cholesky factor and log-det.
class SpdMatrix {
 public:
  SpdMatrix() = default;
  // Factorizes; throws NotPositiveDefinite when the factorization fails.
  static SpdMatrix cholesky(const SymMatrix& m);

  int dim() const { return sym_.dim(); }
  const SymMatrix& sym() const { return sym_; }
  double logdet() const { return logdet_; }
  const Eigen::MatrixXd& chol_lower() const { return lower_; }

  // Inverse via two triangular solves against the cached factor.
  SymMatrix inverse() const;

 private:
  SymMatrix sym_;
  Eigen::MatrixXd lower_;
  double logdet_ = 0.0;
};

struct EigenExtremes {
  double min = 0.0;
  double max = 0.0;
};

// Module operations (thin wrappers kept as free functions).
SpdMatrix cholesky_logdet(const SymMatrix& m);
SymMatrix inverse_spd(const SpdMatrix& m);

// Smallest and largest eigenvalue. Full symmetric eigendecomposition for
// dim <= 128, shifted power iteration above (relative tolerance 1e-8, at most
// 10,000 iterations per eigenvalue; throws ConvergenceFailure past the cap).
EigenExtremes extreme_eigenvalues(const SymMatrix& m);

// Spectral norm of a symmetric matrix: max |eigenvalue|.
double spectral_norm(const SymMatrix& m);

// Running compensated (Neumaier) accumulator for long prefix sums.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace ggmcp
