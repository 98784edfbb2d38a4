#include "ggmcp/sym_matrix.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace ggmcp {

SymMatrix SymMatrix::identity(int dim) {
  SymMatrix m(dim);
  for (int i = 0; i < dim; ++i) m.entry(i, i) = 1.0;
  return m;
}

SymMatrix SymMatrix::from_full(const Eigen::MatrixXd& m, double tol) {
  if (m.rows() != m.cols()) {
    throw ShapeMismatch("from_full: matrix is not square");
  }
  const int p = static_cast<int>(m.rows());
  SymMatrix out(p);
  double worst = 0.0;
  for (int i = 0; i < p; ++i) {
    for (int j = i; j < p; ++j) {
      worst = std::max(worst, std::abs(m(i, j) - m(j, i)));
      out.entry(i, j) = 0.5 * (m(i, j) + m(j, i));
    }
  }
  if (worst > tol) {
    throw ShapeMismatch("from_full: matrix departs from symmetry by " +
                        std::to_string(worst));
  }
  return out;
}

Eigen::MatrixXd SymMatrix::to_full() const {
  Eigen::MatrixXd m(dim_, dim_);
  int k = 0;
  for (int i = 0; i < dim_; ++i) {
    for (int j = i; j < dim_; ++j, ++k) {
      m(i, j) = data_[k];
      m(j, i) = data_[k];
    }
  }
  return m;
}

double SymMatrix::l1_upper(bool include_diagonal) const {
  double s = 0.0;
  int k = 0;
  for (int i = 0; i < dim_; ++i) {
    for (int j = i; j < dim_; ++j, ++k) {
      if (i == j && !include_diagonal) continue;
      s += std::abs(data_[k]);
    }
  }
  return s;
}

double SymMatrix::l1_full(bool include_diagonal) const {
  double off = 0.0, diag = 0.0;
  int k = 0;
  for (int i = 0; i < dim_; ++i) {
    for (int j = i; j < dim_; ++j, ++k) {
      if (i == j) {
        diag += std::abs(data_[k]);
      } else {
        off += std::abs(data_[k]);
      }
    }
  }
  return 2.0 * off + (include_diagonal ? diag : 0.0);
}

double SymMatrix::frob2_upper() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return s;
}

double SymMatrix::frob2_full() const {
  double off = 0.0, diag = 0.0;
  int k = 0;
  for (int i = 0; i < dim_; ++i) {
    for (int j = i; j < dim_; ++j, ++k) {
      if (i == j) {
        diag += data_[k] * data_[k];
      } else {
        off += data_[k] * data_[k];
      }
    }
  }
  return 2.0 * off + diag;
}

double SymMatrix::frob_full() const { return std::sqrt(frob2_full()); }

double SymMatrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

double SymMatrix::inner_upper(const SymMatrix& a, const SymMatrix& b) {
  if (a.dim() != b.dim()) throw ShapeMismatch("inner_upper: dim mismatch");
  double s = 0.0;
  for (int k = 0; k < a.stored_size(); ++k) s += a.data_[k] * b.data_[k];
  return s;
}

double SymMatrix::inner_full(const SymMatrix& a, const SymMatrix& b) {
  if (a.dim() != b.dim()) throw ShapeMismatch("inner_full: dim mismatch");
  double off = 0.0, diag = 0.0;
  int k = 0;
  for (int i = 0; i < a.dim_; ++i) {
    for (int j = i; j < a.dim_; ++j, ++k) {
      if (i == j) {
        diag += a.data_[k] * b.data_[k];
      } else {
        off += a.data_[k] * b.data_[k];
      }
    }
  }
  return 2.0 * off + diag;
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& o) {
  if (o.dim() != dim_) throw ShapeMismatch("operator+=: dim mismatch");
  for (int k = 0; k < stored_size(); ++k) data_[k] += o.data_[k];
  return *this;
}

SymMatrix& SymMatrix::operator-=(const SymMatrix& o) {
  if (o.dim() != dim_) throw ShapeMismatch("operator-=: dim mismatch");
  for (int k = 0; k < stored_size(); ++k) data_[k] -= o.data_[k];
  return *this;
}

SymMatrix& SymMatrix::scale(double c) {
  for (double& v : data_) v *= c;
  return *this;
}

SymMatrix& SymMatrix::add_scaled_identity(double c) {
  for (int i = 0; i < dim_; ++i) data_[index(i, i)] += c;
  return *this;
}

SpdMatrix SpdMatrix::cholesky(const SymMatrix& m) {
  SpdMatrix out;
  out.sym_ = m;
  Eigen::LLT<Eigen::MatrixXd> llt(m.to_full());
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("cholesky: matrix is not positive definite");
  }
  out.lower_ = llt.matrixL();
  double ld = 0.0;
  for (int i = 0; i < m.dim(); ++i) {
    const double pivot = out.lower_(i, i);
    if (!(pivot > 0.0) || !std::isfinite(pivot)) {
      throw NotPositiveDefinite("cholesky: nonpositive pivot");
    }
    ld += std::log(pivot);
  }
  out.logdet_ = 2.0 * ld;
  return out;
}

SymMatrix SpdMatrix::inverse() const {
  const int p = dim();
  Eigen::MatrixXd inv = Eigen::MatrixXd::Identity(p, p);
  lower_.triangularView<Eigen::Lower>().solveInPlace(inv);
  lower_.transpose().triangularView<Eigen::Upper>().solveInPlace(inv);
  // Rounding makes inv only approximately symmetric; store the average.
  SymMatrix out(p);
  for (int i = 0; i < p; ++i) {
    for (int j = i; j < p; ++j) {
      out.entry(i, j) = 0.5 * (inv(i, j) + inv(j, i));
    }
  }
  return out;
}

SpdMatrix cholesky_logdet(const SymMatrix& m) { return SpdMatrix::cholesky(m); }

SymMatrix inverse_spd(const SpdMatrix& m) { return m.inverse(); }

namespace {

constexpr int kDenseEigCutoff = 128;
constexpr double kPowerTol = 1e-8;
constexpr int kPowerCap = 10000;

// Deterministic start vector with no exact symmetry to get trapped by.
Eigen::VectorXd power_start(int p) {
  Eigen::VectorXd v(p);
  uint64_t s = 0x243f6a8885a308d3ULL;
  for (int i = 0; i < p; ++i) {
    s = s * 6364136223846793005ULL + 1442695040888963407ULL;
    v[i] = 1.0 + 1e-3 * (static_cast<double>(s >> 11) * 0x1.0p-53);
  }
  return v / v.norm();
}

// Dominant eigenvalue of a symmetric matrix by power iteration.
double dominant_eigenvalue(const Eigen::MatrixXd& a, double scale) {
  Eigen::VectorXd v = power_start(static_cast<int>(a.rows()));
  double rho = 0.0;
  for (int it = 0; it < kPowerCap; ++it) {
    Eigen::VectorXd w = a * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;  // v happens to be in the null space: a == 0
    rho = v.dot(w);
    const double resid = (w - rho * v).norm();
    v = w / norm;
    if (resid <= kPowerTol * std::max(scale, std::abs(rho))) return rho;
  }
  throw ConvergenceFailure("extreme_eigenvalues: power iteration cap reached");
}

}  // namespace

EigenExtremes extreme_eigenvalues(const SymMatrix& m) {
  const int p = m.dim();
  if (p == 0) throw ShapeMismatch("extreme_eigenvalues: empty matrix");
  if (p <= kDenseEigCutoff) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.to_full(),
                                                      Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) {
      throw ConvergenceFailure("extreme_eigenvalues: eigensolver failed");
    }
    return {es.eigenvalues()(0), es.eigenvalues()(p - 1)};
  }
  const Eigen::MatrixXd full = m.to_full();
  // |lambda|max first, then both ends via shifts that keep the target extreme
  // dominant: A + cI has extremes lambda_min + c, lambda_max + c.
  const double scale = std::max(1.0, full.cwiseAbs().rowwise().sum().maxCoeff());
  const double amax = std::abs(dominant_eigenvalue(full, scale));
  const double shift = amax * (1.0 + 1e-3) + 1e-12;
  const int pfull = p;
  Eigen::MatrixXd up = full + shift * Eigen::MatrixXd::Identity(pfull, pfull);
  Eigen::MatrixXd dn = shift * Eigen::MatrixXd::Identity(pfull, pfull) - full;
  EigenExtremes out;
  out.max = dominant_eigenvalue(up, scale + shift) - shift;
  out.min = shift - dominant_eigenvalue(dn, scale + shift);
  return out;
}

double spectral_norm(const SymMatrix& m) {
  const EigenExtremes e = extreme_eigenvalues(m);
  return std::max(std::abs(e.min), std::abs(e.max));
}

}  // namespace ggmcp
