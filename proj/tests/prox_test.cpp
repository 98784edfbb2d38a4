#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "ggmcp/prox.hpp"
#include "ggmcp/rng.hpp"
#include "support.hpp"

using namespace ggmcp;

namespace {

// Independent objective for the scalar prox, minimized numerically.
double prox_objective(double u, double x, double gl, double alpha) {
  return (u - x) * (u - x) / (2.0 * gl) + alpha * std::abs(u) +
         (1.0 - alpha) * 0.5 * u * u;
}

Dataset const_series(double x, int T) {
  Eigen::MatrixXd m(T, 1);
  m.setConstant(x);
  return Dataset(m);
}

}  // namespace

TEST_CASE("scalar prox on pinned instances") {
  CHECK(prox_scalar(0.0, 0.5, 0.5) == doctest::Approx(0.0));
  // |0.2| below the threshold alpha*gl = 0.25.
  CHECK(prox_scalar(0.2, 0.5, 0.5) == doctest::Approx(0.0));
  // (1 - 0.25) / (1 + 0.25) = 0.6, odd in the input.
  CHECK(prox_scalar(1.0, 0.5, 0.5) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(prox_scalar(-1.0, 0.5, 0.5) == doctest::Approx(-0.6).epsilon(1e-15));
}

TEST_CASE("scalar prox matches a numeric minimizer") {
  Rng rng(2024);
  for (int rep = 0; rep < 200; ++rep) {
    const double x = 4.0 * rng.normal();
    const double gl = 0.05 + 2.0 * rng.uniform();
    const double alpha = 0.95 * rng.uniform();
    const double got = prox_scalar(x, gl, alpha);
    const double oracle = testutil::prox_numeric(x, gl, alpha);
    CHECK(std::abs(got - oracle) < 1e-10);
    // Coarse cross-check with a value-based minimizer (sqrt(eps) limited).
    const double gs = testutil::golden_section(
        [&](double u) { return prox_objective(u, x, gl, alpha); }, -20.0, 20.0);
    CHECK(std::abs(got - gs) < 1e-6);
  }
}

TEST_CASE("matrix prox is entrywise and respects the diagonal flag") {
  SymMatrix m = testutil::sym_from({{1.0, 0.2}, {0.2, -1.0}});
  SymMatrix out = prox_elastic_net(m, 0.5, 0.5);
  CHECK(out(0, 0) == doctest::Approx(0.6));
  CHECK(out(0, 1) == doctest::Approx(0.0));
  CHECK(out(1, 1) == doctest::Approx(-0.6));

  // Unpenalized diagonal: no soft threshold on (i,i), ridge shrink stays.
  SymMatrix out2 = prox_elastic_net(m, 0.5, 0.5, false);
  CHECK(out2(0, 0) == doctest::Approx(1.0 / 1.25));
  CHECK(out2(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("stepsize bounds on an arranged instance") {
  // Zero data makes ||S|| = 0, so mu_1 = alpha p lambda_bar. With p = 2 and
  // alpha = 0.5 that is lambda_bar itself; lambda_base = sqrt(n0/ln 2) puts
  // lambda_{1,n0} = 1. Then b1 solves 0.5 b^2 + b - 0.05 = 0.
  const int n0 = 10, T = 100;
  Dataset d(Eigen::MatrixXd::Zero(T, 2));
  PenaltyConfig cfg;
  cfg.alpha = 0.5;
  cfg.lambda_base = std::sqrt(n0 / std::log(2.0));
  SearchWindow w(n0, T);
  BoundsOptions opts;
  opts.exact_scan = true;
  StepSizeBounds b = stepsize_bounds(d, cfg, w, opts);
  CHECK(b.mu1 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(b.lambda_bar1 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(b.b1 == doctest::Approx(-1.0 + std::sqrt(1.1)).epsilon(1e-12));
  CHECK(b.b1 == doctest::Approx(0.04880884817015163).epsilon(1e-12));
}

TEST_CASE("radius roots satisfy their quadratics") {
  Rng rng(33);
  for (int rep = 0; rep < 20; ++rep) {
    const double mu = 0.1 + 2.0 * rng.uniform();
    const double lb = 0.1 + rng.uniform();
    const double lu = 0.05 + 0.5 * rng.uniform();
    const double alpha = 0.9 * rng.uniform();
    const double n0T = 0.01 + 0.4 * rng.uniform();
    const double b = lower_radius(mu, lb, alpha, n0T);
    const double B = upper_radius(mu, lu, alpha);
    CHECK(std::abs((1.0 - alpha) * lb * b * b + mu * b - 0.5 * n0T) < 1e-12);
    CHECK(std::abs((1.0 - alpha) * lu * B * B - mu * B - 0.5) < 1e-12);
    CHECK(b > 0.0);
    CHECK(B > b);
  }
}

TEST_CASE("bounds on random data confine prox-gradient iterates") {
  Rng rng(71);
  Dataset d = testutil::rand_dataset(60, 3, rng);
  PenaltyConfig cfg;
  SearchWindow w(6, 60);
  BoundsOptions opts;
  opts.exact_scan = true;
  StepSizeBounds bounds = stepsize_bounds(d, cfg, w, opts);
  const double gamma = bounds.gamma_max();
  REQUIRE(gamma > 0.0);

  const int tau = 30;
  // Start inside M_p^+(b1, B1): scaled identity at the midpoint radius.
  SymMatrix start = SymMatrix::identity(3);
  start.scale(0.5 * (bounds.b1 + bounds.B1));
  SpdMatrix th = cholesky_logdet(start);
  for (int k = 0; k < 300; ++k) {
    th = cholesky_logdet(prox_gradient_step(Side::Left, tau, th, gamma, d, cfg));
    EigenExtremes e = extreme_eigenvalues(th.sym());
    CHECK(e.min >= bounds.b1 - 1e-10);
    CHECK(e.max <= bounds.B1 + 1e-10);
  }
}

TEST_CASE("prox gradient step on pinned scalar instances") {
  PenaltyConfig cfg;
  cfg.lambda_base = 0.0;
  cfg.alpha = 0.5;

  SUBCASE("stationary point does not move") {
    Dataset d = const_series(2.0, 2);  // S1(1) = [4]
    SymMatrix th(1);
    th.entry(0, 0) = 0.25;
    SymMatrix out = prox_gradient_step(Side::Left, 1, cholesky_logdet(th), 0.1, d, cfg);
    CHECK(out(0, 0) == doctest::Approx(0.25).epsilon(1e-14));
  }
  SUBCASE("single weighted step") {
    Dataset d = const_series(std::sqrt(2.0), 2);  // S1(1) = [2], tau/T = 0.5
    SpdMatrix th = cholesky_logdet(SymMatrix::identity(1));
    SymMatrix out = prox_gradient_step(Side::Left, 1, th, 0.1, d, cfg);
    // gradient = 0.25 (2 - 1); step 1 - 0.1 * 0.25 = 0.975.
    CHECK(out(0, 0) == doctest::Approx(0.975).epsilon(1e-14));
  }
  SUBCASE("unweighted flag drops the data fraction") {
    Dataset d = const_series(std::sqrt(2.0), 2);
    cfg.grad = GradientScaling::Unweighted;
    SpdMatrix th = cholesky_logdet(SymMatrix::identity(1));
    SymMatrix out = prox_gradient_step(Side::Left, 1, th, 0.1, d, cfg);
    CHECK(out(0, 0) == doctest::Approx(0.9).epsilon(1e-14));  // 1 - 0.1 * (2-1)
  }
}

TEST_CASE("each prox-gradient step descends the penalized objective") {
  Rng rng(55);
  Dataset d = testutil::rand_dataset(80, 4, rng);
  PenaltyConfig cfg;
  SearchWindow w(8, 80);
  BoundsOptions opts;
  opts.exact_scan = true;
  const double gamma = stepsize_bounds(d, cfg, w, opts).gamma_max();
  const int tau = 40;
  const double lam = lambda_at(Side::Left, tau, cfg, d);
  SymMatrix s = scatter(Side::Left, tau, d);
  const double weight = 0.5 * tau / d.T();

  SpdMatrix th = cholesky_logdet(testutil::rand_spd(4, rng));
  auto objective = [&](const SpdMatrix& t) {
    return weight * (-t.logdet() + SymMatrix::inner_full(t.sym(), s)) +
           lam * penalty(t.sym(), cfg);
  };
  double prev = objective(th);
  for (int k = 0; k < 200; ++k) {
    th = cholesky_logdet(prox_gradient_step(Side::Left, tau, th, gamma, d, cfg));
    const double cur = objective(th);
    CHECK(cur <= prev + 1e-10);
    prev = cur;
  }
}

TEST_CASE("glasso converges to the scalar mle when unpenalized") {
  Dataset d = const_series(1.0, 10);  // S = [1] on both sides
  PenaltyConfig cfg;
  cfg.lambda_base = 0.0;
  GlassoSettings st;
  st.tol = 1e-10;
  st.max_iter = 5000;
  SpdMatrix start = cholesky_logdet(SymMatrix::identity(1));
  GlassoResult r = glasso_solve(Side::Left, 5, start, st, d, cfg);
  CHECK(std::abs(r.theta.sym()(0, 0) - 1.0) < 1e-6);
}

TEST_CASE("glasso keeps a diagonal scatter's off-diagonal at zero") {
  // Rows (1,1) and (1,-1) alternating: S1 is exactly I.
  Eigen::MatrixXd m(8, 2);
  for (int t = 0; t < 8; ++t) {
    m(t, 0) = 1.0;
    m(t, 1) = (t % 2 == 0) ? 1.0 : -1.0;
  }
  Dataset d(m);
  PenaltyConfig cfg;
  cfg.lambda_base = 0.3;
  GlassoSettings st;
  SpdMatrix start = cholesky_logdet(SymMatrix::identity(2));
  GlassoResult r = glasso_solve(Side::Left, 4, start, st, d, cfg);
  CHECK(r.theta.sym()(0, 1) == doctest::Approx(0.0));
  CHECK(r.theta.sym()(0, 0) > 0.0);
}

TEST_CASE("glasso agrees with a long-run reference solve") {
  Rng rng(91);
  Dataset d = testutil::rand_dataset(60, 5, rng);
  PenaltyConfig cfg;
  const int tau = 30;
  SpdMatrix start = cholesky_logdet(testutil::rand_spd(5, rng, 1.0));

  // Reference first: 1e5 iterations at a tight tolerance.
  GlassoSettings ref;
  ref.tol = 0.0;
  ref.max_iter = 100000;
  const double ref_obj = glasso_solve(Side::Left, tau, start, ref, d, cfg).objective;

  GlassoSettings st;
  st.tol = 1e-12;
  st.max_iter = 20000;
  GlassoResult r = glasso_solve(Side::Left, tau, start, st, d, cfg);
  CHECK(std::abs(r.objective - ref_obj) < 1e-6);
}

TEST_CASE("glasso restarts shrink gamma instead of failing") {
  Rng rng(14);
  Dataset d = testutil::rand_dataset(40, 3, rng);
  PenaltyConfig cfg;
  GlassoSettings st;
  st.gamma = 50.0;  // wildly too large; must halve its way down
  SpdMatrix start = cholesky_logdet(SymMatrix::identity(3));
  GlassoResult r = glasso_solve(Side::Left, 20, start, st, d, cfg);
  CHECK(r.restarts > 0);
  CHECK(r.gamma_used < 50.0);
  CHECK(std::isfinite(r.objective));
}
