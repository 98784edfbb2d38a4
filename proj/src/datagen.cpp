#include "ggmcp/datagen.hpp"

#include <algorithm>
#include <cmath>

#include "ggmcp/errors.hpp"

namespace ggmcp {

namespace {

double shifted_draw(Rng& rng, double shift) {
  const double z = rng.normal();
  return z + (z >= 0.0 ? shift : -shift);
}

// Upper-triangle row-major fill; draw order is part of the seed contract.
SymMatrix sparse_sym(int p, double density, double shift, Rng& rng) {
  SymMatrix m(p);
  if (density <= 0.0) return m;
  for (int i = 0; i < p; ++i) {
    m.entry(i, i) = shifted_draw(rng, shift);
    for (int j = i + 1; j < p; ++j) {
      const double u = rng.uniform();
      if (u < density) m.entry(i, j) = shifted_draw(rng, shift);
    }
  }
  return m;
}

}  // namespace

SpdMatrix random_precision(const GeneratorSpec& spec) {
  if (spec.p < 1) throw Error("random_precision: p must be positive");
  if (spec.density < 0.0 || spec.density > 1.0) {
    throw Error("random_precision: density must lie in [0, 1]");
  }
  Rng rng(spec.seed);
  SymMatrix m = sparse_sym(spec.p, spec.density, spec.magnitude_shift, rng);
  const double lmin = extreme_eigenvalues(m).min;
  m.add_scaled_identity(1.0 - lmin);
  return SpdMatrix::cholesky(m);
}

std::pair<SpdMatrix, SpdMatrix> similar_pair(int p, double q_pct, double p_pct,
                                             uint64_t seed) {
  if (p < 1) throw Error("similar_pair: p must be positive");
  if (q_pct < 0.0 || p_pct < 0.0) {
    throw Error("similar_pair: densities must be nonnegative");
  }
  const double q = q_pct / 100.0;
  const double pr = p_pct / 100.0;
  Rng rng(seed);
  const double shift = 4.0;
  SymMatrix shared = sparse_sym(p, q, shift, rng);

  // C_1 and C_2 share one diagonal; their off-diagonal patterns are
  // independent. Draw order: diagonal, then C_1, then C_2.
  SymMatrix c1(p), c2(p);
  for (int i = 0; i < p; ++i) {
    const double diag = shifted_draw(rng, shift);
    c1.entry(i, i) = diag;
    c2.entry(i, i) = diag;
  }
  for (SymMatrix* c : {&c1, &c2}) {
    if (pr <= 0.0) continue;
    for (int i = 0; i < p; ++i) {
      for (int j = i + 1; j < p; ++j) {
        const double u = rng.uniform();
        if (u < pr) c->entry(i, j) = shifted_draw(rng, shift);
      }
    }
  }
  SymMatrix th1 = shared;
  th1 += c1;
  SymMatrix th2 = shared;
  th2 += c2;
  const double lmin =
      std::min(extreme_eigenvalues(th1).min, extreme_eigenvalues(th2).min);
  th1.add_scaled_identity(1.0 - lmin);
  th2.add_scaled_identity(1.0 - lmin);
  return {SpdMatrix::cholesky(th1), SpdMatrix::cholesky(th2)};
}

Dataset sample_series(const std::vector<SpdMatrix>& thetas,
                      const std::vector<int>& taus, int T, uint64_t seed) {
  if (thetas.empty() || thetas.size() != taus.size() + 1) {
    throw ShapeMismatch("sample_series: need len(thetas) = len(taus) + 1");
  }
  const int p = thetas.front().dim();
  for (const SpdMatrix& th : thetas) {
    if (th.dim() != p) {
      throw ShapeMismatch("sample_series: mixed dimensions");
    }
  }
  int prev = 0;
  for (int tau : taus) {
    if (tau <= prev || tau >= T) {
      throw ShapeMismatch(
          "sample_series: taus must be strictly increasing inside (0, T)");
    }
    prev = tau;
  }
  if (T < 1) throw ShapeMismatch("sample_series: T must be positive");

  // Row t = L_j z with L_j L_j' = theta_j^-1, z iid standard normal.
  std::vector<Eigen::MatrixXd> chols;
  chols.reserve(thetas.size());
  for (const SpdMatrix& th : thetas) {
    chols.push_back(SpdMatrix::cholesky(th.inverse()).chol_lower());
  }
  Rng rng(seed);
  Eigen::MatrixXd rows(T, p);
  Eigen::VectorXd z(p);
  size_t regime = 0;
  for (int t = 1; t <= T; ++t) {
    while (regime < taus.size() && t > taus[regime]) ++regime;
    for (int i = 0; i < p; ++i) z(i) = rng.normal();
    rows.row(t - 1) = (chols[regime] * z).transpose();
  }
  return Dataset(std::move(rows));
}

}  // namespace ggmcp
