#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fch/errors.hpp"
#include "fch/stepper.hpp"

using namespace fch;

namespace {

std::shared_ptr<const EigenBasis> neumann(Index n, double length = 1.0, Index points = 0) {
  return std::make_shared<const EigenBasis>(
      build_interval_basis(BasisKind::Neumann, n, length, points ? points : n));
}

SchemeConfig make_config(std::shared_ptr<const EigenBasis> a, std::shared_ptr<const EigenBasis> b,
                         PotentialSpec spec, double h = 1e-2, int N = 0) {
  SchemeConfig c{FractionalOperator(a, 0.5), FractionalOperator(b, 0.5), std::move(spec)};
  c.h = h;
  c.N = N;
  return c;
}

PotentialSpec flat_potential() {
  PotentialSpec spec;
  spec.beta_hat = [](double) { return 0.0; };
  spec.beta = [](double) { return Interval::point(0.0); };
  spec.beta_prime = [](double) { return 0.0; };
  spec.pi_hat = [](double) { return 0.0; };
  spec.pi = [](double) { return 0.0; };
  spec.pi_prime = [](double) { return 0.0; };
  spec.closed_resolvent = [](double s, double) { return s; };
  spec.smooth_graph = true;
  return spec;
}

// Independent solve of the coupled (y, μ) system for the regular potential:
// J_λ by bisection, full 2m×2m Newton with a finite-difference Jacobian.
struct DenseOracle {
  Matrix A2, B2;
  double h, tau, lambda, lp;

  static double resolvent(double s, double lambda) {
    double lo = -std::abs(s) - 1, hi = std::abs(s) + 1;
    for (int k = 0; k < 200; ++k) {
      const double mid = 0.5 * (lo + hi);
      if (mid + lambda * mid * mid * mid > s) hi = mid; else lo = mid;
    }
    return 0.5 * (lo + hi);
  }

  Vector residual(const Vector& yn, const Vector& mun, const Vector& u, const Vector& z) const {
    const Index m = yn.size();
    const Vector y = z.head(m), mu = z.tail(m);
    Vector r(2 * m);
    r.head(m) = (y - yn) / h + mu + A2 * mu - mun;
    Vector nl(m);
    for (Index i = 0; i < m; ++i) nl(i) = (y(i) - resolvent(y(i), lambda)) / lambda - y(i);
    r.tail(m) = tau * (y - yn) / h + lp * y + B2 * y + nl - lp * yn - mu - u;
    return r;
  }

  std::pair<Vector, Vector> solve(const Vector& yn, const Vector& mun, const Vector& u) const {
    const Index m = yn.size();
    Vector z(2 * m);
    z << yn, mun;
    for (int it = 0; it < 100; ++it) {
      const Vector r = residual(yn, mun, u, z);
      if (r.cwiseAbs().maxCoeff() < 1e-12) break;
      Matrix J(2 * m, 2 * m);
      for (Index k = 0; k < 2 * m; ++k) {
        Vector zp = z, zm = z;
        zp(k) += 1e-7;
        zm(k) -= 1e-7;
        J.col(k) = (residual(yn, mun, u, zp) - residual(yn, mun, u, zm)) / 2e-7;
      }
      z -= J.fullPivLu().solve(r);
    }
    return {z.head(m), z.tail(m)};
  }
};

Matrix random_spd(Index m, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix r(m, m);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j) r(i, j) = g(rng);
  return r * r.transpose() / double(m) + 0.1 * Matrix::Identity(m, m);
}

}  // namespace

TEST_CASE("zero state is a fixed point") {
  auto b = neumann(8);
  for (auto spec : {make_potential("regular"), make_potential("obstacle", {{"c2", 1.0}}),
                    make_potential("logarithmic", {{"c1", 2.0}}), make_potential("example_best")}) {
    const auto cfg = make_config(b, b, spec);
    const Field z = Field::zeros(b->grid_ptr());
    const auto r = solve_step(z, z, z, cfg);
    CHECK(r.y.values().cwiseAbs().maxCoeff() == doctest::Approx(0.0));
    CHECK(r.mu.values().cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  }
}

TEST_CASE("constant state with a flat potential") {
  auto b = neumann(8, 1.0, 16);
  const auto cfg = make_config(b, b, flat_potential(), 0.1);
  const Field y0 = Field::constant(b->grid_ptr(), 0.37);
  const Field z = Field::zeros(b->grid_ptr());
  const auto r = solve_step(y0, z, z, cfg);
  CHECK((r.y.values().array() - 0.37).abs().maxCoeff() < 1e-12);
  CHECK(r.mu.values().cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("solve_step matches the dense coupled oracle") {
  std::mt19937_64 rng(101);
  std::normal_distribution<double> g;
  const Index m = 8;
  const Matrix ma = random_spd(m, rng), mb = random_spd(m, rng);
  auto a = std::make_shared<const EigenBasis>(build_matrix_basis<double>(ma));
  auto b = std::make_shared<const EigenBasis>(build_matrix_basis<double>(mb));
  for (double tau : {0.0, 0.5}) {
    for (double lambda : {1e-1, 1e-2}) {
      SchemeConfig cfg = make_config(a, b, make_potential("regular"), 0.05);
      cfg.tau = tau;
      cfg.yosida_lambda = lambda;
      cfg.newton_tol = 1e-12;
      // With exponent 1/2 the squared powers are the matrices themselves.
      const DenseOracle oracle{ma, mb, cfg.h, tau, lambda, 2.0};
      for (int trial = 0; trial < 5; ++trial) {
        Vector yn(m), mun(m), u(m);
        for (Index i = 0; i < m; ++i) {
          yn(i) = g(rng);
          mun(i) = g(rng);
          u(i) = 0.3 * g(rng);
        }
        const GridPtr grid = a->grid_ptr();
        const auto r = solve_step(Field(grid, yn), Field(grid, mun), Field(grid, u), cfg);
        const auto [oy, omu] = oracle.solve(yn, mun, u);
        CHECK((r.y.values() - oy).cwiseAbs().maxCoeff() < 1e-8);
        CHECK((r.mu.values() - omu).cwiseAbs().maxCoeff() < 1e-8);
        CHECK(r.stats.residual_first <= cfg.newton_tol);
        CHECK(r.stats.residual_second <= cfg.newton_tol);
      }
    }
  }
}

TEST_CASE("Newton is insensitive to the initial guess") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.9, 0.9);
  auto b = neumann(12, 1.0, 24);
  for (auto spec : {make_potential("regular"), make_potential("obstacle", {{"c2", 1.0}}),
                    make_potential("logarithmic", {{"c1", 2.0}})}) {
    SchemeConfig cfg = make_config(b, b, spec, 1e-2);
    cfg.yosida_lambda = 1e-2;
    Vector v(24);
    for (Index i = 0; i < 24; ++i) v(i) = u(rng);
    const Field y0 = b->synthesize(b->analyze(Field(b->grid_ptr(), v)));
    const Field z = Field::zeros(b->grid_ptr());
    const Stepper stepper(cfg);
    const auto r1 = stepper.step(y0, z, z);
    const auto r2 = stepper.step(y0, z, z, z);
    CHECK((r1.y.values() - r2.y.values()).cwiseAbs().maxCoeff() <= 10 * cfg.newton_tol);
  }
}

TEST_CASE("validate") {
  auto neu = neumann(8, 1.0, 16);
  auto dir = std::make_shared<const EigenBasis>(
      build_interval_basis(BasisKind::Dirichlet, 8, 1.0, 16));
  const auto obs = make_potential("obstacle", {{"c2", 1.0}});
  const Field zero = Field::zeros(neu->grid_ptr());
  const Field wave = 0.5 * neu->mode(1);

  SUBCASE("Neumann with zero mean passes") {
    const auto rep = validate(make_config(neu, neu, obs), {wave, SourceTerm::constant(zero)});
    CHECK(rep.lambda1_zero);
    CHECK(std::abs(rep.m0) < 1e-14);
  }
  SUBCASE("boundary mean is rejected") {
    const Field one = Field::constant(neu->grid_ptr(), 1.0);
    try {
      validate(make_config(neu, neu, obs), {one, SourceTerm::constant(zero)});
      FAIL("expected mean_not_interior");
    } catch (const HypothesisError& e) {
      CHECK(e.code() == "mean_not_interior");
      CHECK(exit_code(e.kind()) == 4);
    }
  }
  SUBCASE("Dirichlet A skips the mean hypotheses") {
    const Field one = Field::constant(neu->grid_ptr(), 1.0);
    const auto rep = validate(make_config(dir, neu, obs), {one, SourceTerm::constant(zero)});
    CHECK_FALSE(rep.lambda1_zero);
  }
  SUBCASE("constants must be in the span of B") {
    try {
      validate(make_config(neu, dir, obs), {wave, SourceTerm::constant(zero)});
      FAIL("expected constants_not_in_B");
    } catch (const HypothesisError& e) {
      CHECK(e.code() == "constants_not_in_B");
    }
  }
  SUBCASE("tau out of range") {
    auto cfg = make_config(neu, neu, obs);
    cfg.tau = 2.0;
    CHECK_THROWS_AS(validate(cfg, {wave, SourceTerm::constant(zero)}), HypothesisError);
  }
  SUBCASE("initial datum outside the domain") {
    const Field big = Field::constant(neu->grid_ptr(), 0.0) + 1.5 * neu->mode(1);
    try {
      validate(make_config(neu, neu, obs), {big, SourceTerm::constant(zero)});
      FAIL("expected initial_energy");
    } catch (const HypothesisError& e) {
      CHECK(e.code() == "initial_energy");
    }
  }
  SUBCASE("mismatched grids") {
    auto other = neumann(8, 1.0, 17);
    CHECK_THROWS_AS(validate(make_config(neu, other, obs), {wave, SourceTerm::constant(zero)}),
                    ConfigError);
  }
  SUBCASE("double kernel") {
    Matrix z = Matrix::Zero(4, 4);
    z(2, 2) = 1;
    z(3, 3) = 2;
    auto mb = std::make_shared<const EigenBasis>(build_matrix_basis<double>(z));
    const Field y = Field::zeros(mb->grid_ptr());
    try {
      validate(make_config(mb, mb, make_potential("regular")), {y, SourceTerm::constant(y)});
      FAIL("expected simple_kernel");
    } catch (const HypothesisError& e) {
      CHECK(e.code() == "simple_kernel");
    }
  }
  SUBCASE("scheme parameters") {
    auto cfg = make_config(neu, neu, obs);
    cfg.h = 0;
    CHECK_THROWS_AS(validate(cfg, {wave, SourceTerm::constant(zero)}), ConfigError);
    cfg = make_config(neu, neu, obs);
    cfg.yosida_lambda = -1;
    CHECK_THROWS_AS(validate(cfg, {wave, SourceTerm::constant(zero)}), ConfigError);
  }
}

TEST_CASE("run") {
  auto b = neumann(8, 1.0, 16);
  const Field zero = Field::zeros(b->grid_ptr());
  SUBCASE("no steps") {
    const Field y0 = 0.2 * b->mode(1);
    const auto traj = run(make_config(b, b, make_potential("regular")), {y0, SourceTerm::constant(zero)});
    REQUIRE(traj.steps() == 0);
    CHECK(traj.ys[0].values() == y0.values());
    CHECK(traj.mus[0].values().isZero());
  }
  SUBCASE("zero data") {
    const auto traj = run(make_config(b, b, make_potential("regular"), 0.01, 20),
                          {zero, SourceTerm::constant(zero)});
    for (int n = 0; n <= 20; ++n) {
      CHECK(traj.ys[n].values().cwiseAbs().maxCoeff() == 0.0);
      CHECK(traj.mus[n].values().cwiseAbs().maxCoeff() == 0.0);
    }
  }
  SUBCASE("mass identity and residuals") {
    const Field y0 = Field::constant(b->grid_ptr(), 0.1) + 0.4 * b->mode(1) + 0.2 * b->mode(3);
    SchemeConfig cfg = make_config(b, b, make_potential("obstacle", {{"c2", 1.0}}), 0.01, 50);
    const Field u = 0.3 * b->mode(2) + Field::constant(b->grid_ptr(), 0.05);
    const auto traj = run(cfg, {y0, SourceTerm::decaying(zero, u, 1.0)});
    const double m0 = mean(y0);
    for (int n = 0; n <= 50; ++n)
      CHECK(std::abs(mean(traj.ys[n]) + cfg.h * mean(traj.mus[n]) - m0) <= 1e-10);
    for (const auto& s : traj.stats) {
      CHECK(s.residual_first <= cfg.newton_tol);
      CHECK(s.residual_second <= cfg.newton_tol);
    }
  }
  SUBCASE("Newton failure is reported with the step index") {
    const Field y0 = 0.6 * b->mode(1);
    SchemeConfig cfg = make_config(b, b, make_potential("logarithmic", {{"c1", 2.0}}), 0.5, 3);
    cfg.yosida_lambda = 1e-6;
    cfg.newton_max = 1;
    cfg.newton_tol = 1e-14;
    try {
      run(cfg, {y0, SourceTerm::constant(zero)});
      FAIL("expected a Newton failure");
    } catch (const NumericalError& e) {
      CHECK(e.code() == "newton");
      CHECK(exit_code(e.kind()) == 3);
      CHECK(std::string(e.what()).find("step 1") == 0);
      CHECK(std::string(e.what()).find("smaller step size") != std::string::npos);
    }
  }
}

TEST_CASE("source terms") {
  auto b = neumann(4, 1.0, 8);
  const Field one = Field::constant(b->grid_ptr(), 1.0);
  const Field two = 2.0 * one;
  const auto dec = SourceTerm::decaying(one, two, 0.5);
  CHECK(dec.at(0.0)[0] == doctest::Approx(3.0));
  CHECK(dec.at(2.0)[3] == doctest::Approx(1.0 + 2.0 * std::exp(-1.0)));
  CHECK(dec.derivative_l1_norm(4.0) == doctest::Approx(norm(two) * (1 - std::exp(-2.0))));
  const auto tab = SourceTerm::tabulated(one, {0.0, 1.0, 3.0}, {one, two, one});
  CHECK(tab.at(0.5)[0] == doctest::Approx(1.5));
  CHECK(tab.at(2.0)[0] == doctest::Approx(1.5));
  CHECK(tab.at(5.0)[0] == doctest::Approx(1.0));
  CHECK(tab.derivative_l1_norm(2.0) == doctest::Approx(1.5 * norm(one)));
  CHECK_THROWS_AS(SourceTerm::tabulated(one, {0.0, 0.0}, {one, two}), ConfigError);
  CHECK_THROWS_AS(SourceTerm::decaying(one, two, -1.0), ConfigError);
}

TEST_CASE("interpolants") {
  auto b = neumann(4, 1.0, 8);
  std::vector<Field> nodes;
  for (int n = 0; n <= 4; ++n) nodes.push_back(Field::constant(b->grid_ptr(), n * n));
  const double h = 0.25;
  CHECK(interpolate(nodes, h, InterpolantKind::PiecewiseLinear, 0.5)[0] == 4.0);
  CHECK(interpolate(nodes, h, InterpolantKind::PiecewiseLinear, 0.375)[0] == doctest::Approx(2.5));
  CHECK(interpolate(nodes, h, InterpolantKind::PiecewiseConstantRight, 0.3)[0] == 4.0);
  CHECK(interpolate(nodes, h, InterpolantKind::PiecewiseConstantLeft, 0.3)[0] == 1.0);
  CHECK(interpolate(nodes, h, InterpolantKind::PiecewiseConstantRight, 0.5)[0] == 4.0);
  CHECK(interpolate(nodes, h, InterpolantKind::PiecewiseConstantLeft, 0.5)[0] == 1.0);
  CHECK(interpolate(nodes, h, InterpolantKind::PiecewiseConstantRight, 0.0)[0] == 0.0);
  CHECK_THROWS_AS(interpolate(nodes, h, InterpolantKind::PiecewiseLinear, 1.1), RangeError);
  CHECK_THROWS_AS(interpolate(nodes, h, InterpolantKind::PiecewiseLinear, -0.1), RangeError);
  // Right minus left on each interval is the node increment.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> t(1e-6, 1.0);
  for (int k = 0; k < 100; ++k) {
    const double s = t(rng);
    const int n = static_cast<int>(std::ceil(s / h - 1e-12));
    const double diff = interpolate(nodes, h, InterpolantKind::PiecewiseConstantRight, s)[0] -
                        interpolate(nodes, h, InterpolantKind::PiecewiseConstantLeft, s)[0];
    CHECK(diff == doctest::Approx(double(n * n - (n - 1) * (n - 1))));
  }
}
