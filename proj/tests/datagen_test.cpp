#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "ggmcp/datagen.hpp"
#include "ggmcp/objective.hpp"
#include "support.hpp"

using namespace ggmcp;

TEST_CASE("random precision matrices have unit minimum eigenvalue") {
  for (uint64_t seed = 0; seed < 100; ++seed) {
    GeneratorSpec spec{12, 0.25, 4.0, seed};
    SpdMatrix th = random_precision(spec);
    EigenExtremes e = extreme_eigenvalues(th.sym());
    CHECK(std::abs(e.min - 1.0) < 1e-10);
  }
}

TEST_CASE("zero density collapses to the identity") {
  GeneratorSpec spec{6, 0.0, 4.0, 7};
  SpdMatrix th = random_precision(spec);
  CHECK(testutil::max_abs_diff(th.sym().to_full(),
                               Eigen::MatrixXd::Identity(6, 6)) < 1e-12);
}

TEST_CASE("off-diagonal fill tracks the requested density") {
  const int p = 50;
  int nonzero = 0, total = 0;
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    GeneratorSpec spec{p, 0.25, 4.0, seed};
    SpdMatrix th = random_precision(spec);
    // The diagonal lift never touches off-diagonal entries.
    for (int i = 0; i < p; ++i) {
      for (int j = i + 1; j < p; ++j) {
        nonzero += (th.sym()(i, j) != 0.0);
        ++total;
      }
    }
  }
  const double frac = static_cast<double>(nonzero) / total;
  CHECK(frac > 0.20);
  CHECK(frac < 0.30);
}

TEST_CASE("shifted entries sit at least four away from zero") {
  GeneratorSpec spec{15, 0.3, 4.0, 3};
  SpdMatrix th = random_precision(spec);
  // Off-diagonals of M survive the diagonal-only lift, so check them.
  for (int i = 0; i < 15; ++i) {
    for (int j = i + 1; j < 15; ++j) {
      const double v = th.sym()(i, j);
      if (v != 0.0) CHECK(std::abs(v) >= 4.0);
    }
  }
}

TEST_CASE("similar pairs share structure as configured") {
  SUBCASE("no idiosyncratic part means equal matrices") {
    auto [t1, t2] = similar_pair(8, 25.0, 0.0, 11);
    CHECK(testutil::max_abs_diff(t1.sym().to_full(), t2.sym().to_full()) == 0.0);
    CHECK(std::abs(extreme_eigenvalues(t1.sym()).min - 1.0) < 1e-10);
  }
  SUBCASE("no shared part leaves only the common diagonal") {
    auto [t1, t2] = similar_pair(8, 0.0, 25.0, 13);
    Eigen::MatrixXd diff = t1.sym().to_full() - t2.sym().to_full();
    CHECK(diff.diagonal().cwiseAbs().maxCoeff() == 0.0);
    CHECK(diff.cwiseAbs().maxCoeff() > 0.0);  // off-diagonals do differ
  }
  SUBCASE("difference norm grows with the idiosyncratic share") {
    double mid = 0.0, wide = 0.0;
    const int reps = 20;
    for (uint64_t seed = 1; seed <= reps; ++seed) {
      auto [a1, a2] = similar_pair(10, 25.0, 0.0, seed);
      SymMatrix d0 = a1.sym();
      d0 -= a2.sym();
      CHECK(d0.frob_full() == 0.0);
      auto [b1, b2] = similar_pair(10, 17.5, 7.5, seed);
      SymMatrix d1 = b1.sym();
      d1 -= b2.sym();
      mid += d1.frob_full();
      auto [c1, c2] = similar_pair(10, 0.0, 25.0, seed);
      SymMatrix d2 = c1.sym();
      d2 -= c2.sym();
      wide += d2.frob_full();
    }
    CHECK(mid > 0.0);
    CHECK(mid < wide);
  }
}

TEST_CASE("single-regime sampling matches its covariance") {
  const int T = 10000, p = 3;
  Dataset d = sample_series({cholesky_logdet(SymMatrix::identity(p))}, {}, T, 5);
  Eigen::MatrixXd s = d.rows().transpose() * d.rows() / T;
  CHECK(testutil::max_abs_diff(s, Eigen::MatrixXd::Identity(p, p)) < 0.05);
}

TEST_CASE("regime scatters pair with their own covariances") {
  const int T = 2000, p = 4;
  int correct = 0;
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    GeneratorSpec g1{p, 0.4, 4.0, Rng::mix(seed, 1)};
    GeneratorSpec g2{p, 0.4, 4.0, Rng::mix(seed, 2)};
    SpdMatrix th1 = random_precision(g1);
    SpdMatrix th2 = random_precision(g2);
    Dataset d = sample_series({th1, th2}, {T / 2}, T, Rng::mix(seed, 3));
    Eigen::MatrixXd sig1 = th1.inverse().to_full();
    Eigen::MatrixXd sig2 = th2.inverse().to_full();
    Eigen::MatrixXd s1 = scatter(Side::Left, T / 2, d).to_full();
    Eigen::MatrixXd s2 = scatter(Side::Right, T / 2, d).to_full();
    correct += ((s1 - sig1).norm() < (s1 - sig2).norm() &&
                (s2 - sig2).norm() < (s2 - sig1).norm());
  }
  CHECK(correct == 10);
}

TEST_CASE("sampling is seed deterministic") {
  GeneratorSpec g{5, 0.25, 4.0, 21};
  SpdMatrix th = random_precision(g);
  Dataset a = sample_series({th}, {}, 50, 9);
  Dataset b = sample_series({th}, {}, 50, 9);
  REQUIRE(a.T() == b.T());
  CHECK(testutil::max_abs_diff(a.rows(), b.rows()) == 0.0);
}

TEST_CASE("sample series validates its change-point layout") {
  SpdMatrix id = cholesky_logdet(SymMatrix::identity(2));
  CHECK_THROWS_AS(sample_series({id, id}, {0}, 10, 1), ShapeMismatch);
  CHECK_THROWS_AS(sample_series({id, id}, {10}, 10, 1), ShapeMismatch);
  CHECK_THROWS_AS(sample_series({id, id, id}, {5, 5}, 10, 1), ShapeMismatch);
  CHECK_THROWS_AS(sample_series({id}, {5}, 10, 1), ShapeMismatch);
}
