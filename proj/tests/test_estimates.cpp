#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fch/errors.hpp"
#include "fch/estimates.hpp"
#include "oracles.hpp"

using namespace fch;

namespace {

std::shared_ptr<const EigenBasis> neumann(Index n, double length, Index points) {
  return std::make_shared<const EigenBasis>(
      build_interval_basis(BasisKind::Neumann, n, length, points));
}

SchemeConfig make_config(std::shared_ptr<const EigenBasis> b, PotentialSpec spec, double h,
                         int N) {
  SchemeConfig c{FractionalOperator(b, 0.5), FractionalOperator(b, 0.5), std::move(spec)};
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
  return spec;
}

Field random_field(const EigenBasis& b, std::mt19937_64& rng, double amp, double mean_value) {
  std::normal_distribution<double> g;
  Vector c = Vector::Zero(b.size());
  for (Index j = 1; j < c.size(); ++j) c(j) = amp * g(rng) / double(j * j);
  Field f = b.synthesize(c);
  return f + Field::constant(f.grid_ptr(), mean_value);
}

}  // namespace

TEST_CASE("zero trajectory gives a zero ledger") {
  auto b = neumann(8, 1.0, 16);
  const auto cfg = make_config(b, make_potential("regular"), 0.1, 10);
  const Field z = Field::zeros(b->grid_ptr());
  const ProblemData data{z, SourceTerm::constant(z)};
  const auto traj = run(cfg, data);
  const auto s = per_step_inequality({z, z}, {z, z}, z, cfg);
  CHECK(s.slack == 0.0);
  CHECK(s.increments.max_abs() == 0.0);
  const auto ledger = gronwall_ledger(traj, data, cfg);
  REQUIRE(ledger.entries.size() == 11);
  for (const auto& e : ledger.entries) {
    // ∫π̂(0) = 1/4 on a unit interval is the only nonzero term.
    const auto v = e.lhs_terms.values();
    for (std::size_t i = 0; i < v.size(); ++i)
      CHECK(v[i] == (i == 6 ? doctest::Approx(0.25) : doctest::Approx(0.0)));
    CHECK(e.rhs_bound == doctest::Approx(0.25));
    CHECK(e.slack == doctest::Approx(0.0));
  }
  CHECK(dual_norm_rate(traj, cfg).identity_value == 0.0);
}

TEST_CASE("constant-mode step has closed-form slack") {
  auto b = neumann(6, 1.0, 12);
  const double h = 0.2, u = 0.7;
  const auto cfg = make_config(b, flat_potential(), h, 1);
  const Field y0 = Field::constant(b->grid_ptr(), 0.1);
  const Field z = Field::zeros(b->grid_ptr());
  const Field uf = Field::constant(b->grid_ptr(), u);
  const auto r = solve_step(y0, z, uf, cfg);
  // (y¹ - c)(1 + 1/h) = u on the constant mode with L' = 1.
  CHECK(r.y[0] - 0.1 == doctest::Approx(u * h / (1 + h)).epsilon(1e-12));
  CHECK(r.mu[0] == doctest::Approx(-u / (1 + h)).epsilon(1e-12));
  const auto s = per_step_inequality({y0, z}, {r.y, r.mu}, uf, cfg);
  CHECK(s.slack == doctest::Approx(u * u * h * h / (2 * (1 + h) * (1 + h))).epsilon(1e-10));
  CHECK(s.increments.Ar_mu_accum == doctest::Approx(0.0));
}

TEST_CASE("violations are reported") {
  auto b = neumann(6, 1.0, 12);
  const auto cfg = make_config(b, make_potential("regular"), 0.1, 1);
  const Field z = Field::zeros(b->grid_ptr());
  // Not a scheme step: energy grows with no source.
  const Field y1 = 0.5 * b->mode(2);
  try {
    per_step_inequality({z, z}, {y1, z}, z, cfg);
    FAIL("expected estimate_violation");
  } catch (const NumericalError& e) {
    CHECK(e.code() == "estimate_violation");
  }
}

TEST_CASE("random 64-mode run satisfies the per-step inequality") {
  std::mt19937_64 rng(64);
  auto b = neumann(64, 1.0, 64);
  const auto cfg = make_config(b, make_potential("obstacle", {{"c2", 1.0}}), 1e-3, 100);
  const Field y0 = random_field(*b, rng, 0.4, 0.0);
  const Field d = random_field(*b, rng, 0.5, 0.1);
  const ProblemData data{y0, SourceTerm::decaying(Field::zeros(b->grid_ptr()), d, 2.0)};
  const auto traj = run(cfg, data);
  const auto ledger = gronwall_ledger(traj, data, cfg);
  CHECK(ledger.min_step_relative_slack >= -1e-8);
  CHECK(ledger.min_relative_slack >= -1e-8);
  CHECK(ledger.min_convexity_relative_gap >= -1e-10);
  CHECK(ledger.derivative_l1 == doctest::Approx(norm(d) * (1 - std::exp(-2.0 * 0.1))));

  SUBCASE("summed ledger equals the sum of per-step slacks") {
    const YosidaRegularization reg(cfg.spec, cfg.yosida_lambda);
    double gap0 = 0;  // ∫ β̂(y0) - β̂_λ(y0)
    const auto& w = y0.grid().weights;
    for (Index i = 0; i < y0.size(); ++i)
      gap0 += w(i) * (cfg.spec.beta_hat(y0[i]) - yosida_primal(reg, y0[i]));
    double acc = gap0;
    for (int k = 0; k <= traj.steps(); ++k) {
      if (k >= 1) {
        const auto s = per_step_inequality({traj.ys[k - 1], traj.mus[k - 1]},
                                           {traj.ys[k], traj.mus[k]}, data.source.at(k * cfg.h), cfg);
        acc += s.slack;
      }
      const auto& e = ledger.entries[k];
      CHECK(std::abs(e.slack - acc) <= 1e-10 * e.scale);
    }
  }
  SUBCASE("running sums are nondecreasing") {
    for (std::size_t i = 0; i < LedgerTerms::names.size(); ++i) {
      if (!is_running_sum(i)) continue;
      for (std::size_t k = 1; k < ledger.entries.size(); ++k)
        CHECK(ledger.entries[k].lhs_terms.values()[i] >= ledger.entries[k - 1].lhs_terms.values()[i]);
    }
  }
  SUBCASE("data majorant dominates") {
    for (const auto& e : ledger.entries) CHECK(e.data_bound >= e.rhs_bound - 1e-12 * e.scale);
  }
  SUBCASE("dual norm identity") {
    const auto rep = dual_norm_rate(traj, cfg);
    CHECK(std::abs(rep.identity_value - rep.direct_value) <= 1e-10 * std::max(1.0, rep.direct_value));
    CHECK(rep.identity_value <= rep.bound * (1 + 1e-12));
  }
}

TEST_CASE("single-mode dual norm") {
  auto b = neumann(8, 1.0, 16);
  const auto cfg = make_config(b, make_potential("regular"), 0.1, 10);
  const FractionalOperator& A = cfg.op_A;
  const double c = 0.8;
  const int j = 3;
  // y moves along e_j at rate c and μ follows the first discrete equation.
  DiscreteTrajectory traj;
  traj.h = 0.1;
  traj.ys.push_back(Field::zeros(b->grid_ptr()));
  traj.mus.push_back(Field::zeros(b->grid_ptr()));
  const double a2 = A.symbol(2.0)(j);
  double mu = 0;
  for (int n = 1; n <= 10; ++n) {
    traj.ys.push_back(traj.ys.back() + (c * traj.h) * b->mode(j));
    mu = (mu - c) / (1 + a2);
    traj.mus.push_back(mu * b->mode(j));
  }
  const auto rep = dual_norm_rate(traj, cfg);
  const double expect = std::pow(b->lambda(j), -0.5) * c;  // T = 1
  CHECK(rep.direct_value == doctest::Approx(expect).epsilon(1e-10));
  CHECK(rep.identity_value == doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("uniform report against quadrature oracles") {
  std::mt19937_64 rng(8);
  auto b = neumann(16, 1.0, 32);
  SchemeConfig cfg = make_config(b, make_potential("regular"), 0.05, 20);
  cfg.tau = 0.5;
  const Field y0 = random_field(*b, rng, 0.5, 0.2);
  const ProblemData data{y0, SourceTerm::constant(Field::zeros(b->grid_ptr()))};
  const auto traj = run(cfg, data);
  const auto rep = uniform_report(traj, cfg);

  // h^{-1/2} ‖ȳ - ŷ‖_{L²H} by Simpson's rule on each interval.
  double integral = 0;
  const int sub = 64;
  for (int n = 1; n <= traj.steps(); ++n) {
    std::vector<double> vals;
    for (int k = 0; k <= sub; ++k) {
      const double t = (n - 1) * cfg.h + cfg.h * (k == 0 ? 1e-7 : double(k) / sub);
      const Field bar = interpolate(traj, Component::Y, InterpolantKind::PiecewiseConstantRight, t);
      const Field hat = interpolate(traj, Component::Y, InterpolantKind::PiecewiseLinear, t);
      const double d = norm(bar - hat);
      vals.push_back(d * d);
    }
    double s = vals.front() + vals.back();
    for (int k = 1; k < sub; ++k) s += (k % 2 ? 4 : 2) * vals[k];
    integral += s * (cfg.h / sub) / 3;
  }
  CHECK(rep.y_hat_gap == doctest::Approx(std::sqrt(integral / cfg.h)).epsilon(1e-6));

  double rate = 0;
  for (int n = 1; n <= traj.steps(); ++n) {
    const double d = norm(traj.ys[n] - traj.ys[n - 1]) / cfg.h;
    rate += cfg.h * d * d;
  }
  CHECK(rep.tau_rate == doctest::Approx(std::sqrt(cfg.tau * rate)));
  for (double v : rep.values()) CHECK(std::isfinite(v));
}

TEST_CASE("plateau ratio") {
  CHECK(plateau_ratio(1.0, 1.0) == 0.0);
  CHECK(plateau_ratio(0.99, 1.0) == doctest::Approx(0.01));
  CHECK(plateau_ratio(0.0, 0.0) == 0.0);
  CHECK(plateau_ratio(1e-14, 2e-14) == 0.0);
}
