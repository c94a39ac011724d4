#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "fch/spectral.hpp"

using namespace fch;
using std::numbers::pi;

namespace {

// Independent trapezoid rule on a uniform grid.
double trapezoid(const Vector& v, double length) {
  const Index m = v.size();
  const double dx = length / double(m - 1);
  double s = 0.5 * (v(0) + v(m - 1));
  for (Index i = 1; i < m - 1; ++i) s += v(i);
  return s * dx;
}

Field random_in_span(const EigenBasis& basis, std::mt19937_64& rng, bool zero_first = false) {
  std::normal_distribution<double> g;
  Vector c(basis.size());
  for (Index j = 0; j < c.size(); ++j) c(j) = g(rng);
  if (zero_first) c(0) = 0;
  return basis.synthesize(c);
}

}  // namespace

TEST_CASE("interval bases have closed-form spectra") {
  const auto neu = build_interval_basis(BasisKind::Neumann, 3, 1.0, 16);
  CHECK(neu.lambda(0) == 0.0);
  CHECK(neu.lambda(1) == doctest::Approx(pi * pi).epsilon(1e-15));
  CHECK(neu.lambda(2) == doctest::Approx(4 * pi * pi).epsilon(1e-15));
  CHECK(neu.first_mode_constant());
  CHECK((neu.modes().col(0).array() - 1.0).abs().maxCoeff() < 1e-14);

  const auto dir = build_interval_basis(BasisKind::Dirichlet, 2, 1.0, 16);
  CHECK(dir.lambda(0) == doctest::Approx(pi * pi).epsilon(1e-15));
  CHECK(dir.lambda(1) == doctest::Approx(4 * pi * pi).epsilon(1e-15));
  CHECK_FALSE(dir.zero_first_eigenvalue());
}

TEST_CASE("Neumann modes are orthonormal under an independent quadrature") {
  const double L = 2.0;
  const Index m = 33;
  const auto basis = build_interval_basis(BasisKind::Neumann, 8, L, m);
  CHECK(basis.gram_defect() < 1e-10);
  // Oracle: products of the raw cosines integrated by the trapezoid rule.
  const Vector x = Vector::LinSpaced(m, 0.0, L);
  for (int j = 0; j < 8; ++j) {
    for (int k = 0; k < 8; ++k) {
      const Vector prod = (basis.modes().col(j).array() * basis.modes().col(k).array()).matrix();
      CHECK(std::abs(trapezoid(prod, L) - (j == k ? 1.0 : 0.0)) < 1e-10);
    }
  }
}

TEST_CASE("full-rank bases on small grids") {
  CHECK(build_interval_basis(BasisKind::Neumann, 16, 1.0, 16).gram_defect() < 1e-12);
  CHECK(build_interval_basis(BasisKind::Dirichlet, 14, 1.0, 16).gram_defect() < 1e-12);
  CHECK_THROWS_AS(build_interval_basis(BasisKind::Dirichlet, 15, 1.0, 16), ConfigError);
  CHECK_THROWS_AS(build_interval_basis(BasisKind::Neumann, 17, 1.0, 16), ConfigError);
  CHECK_THROWS_AS(build_interval_basis(BasisKind::Neumann, 4, -1.0, 16), ConfigError);
}

TEST_CASE("matrix bases") {
  SUBCASE("identity") {
    const auto b = build_matrix_basis<double>(Matrix::Identity(4, 4));
    for (Index j = 0; j < 4; ++j) CHECK(b.lambda(j) == doctest::Approx(1.0));
    CHECK(b.gram_defect() < 1e-12);
  }
  SUBCASE("diagonal") {
    Matrix d = Vector((Vector(4) << 0, 1, 2, 3).finished()).asDiagonal();
    const auto b = build_matrix_basis<double>(d);
    for (Index j = 0; j < 4; ++j) {
      CHECK(b.lambda(j) == doctest::Approx(double(j)));
      CHECK(std::abs(std::abs(b.modes()(j, j)) - 1.0) < 1e-12);
    }
  }
  SUBCASE("random symmetric reassembles") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    Matrix r(6, 6);
    for (Index i = 0; i < 6; ++i)
      for (Index j = 0; j < 6; ++j) r(i, j) = g(rng);
    const Matrix m = r * r.transpose();
    const auto b = build_matrix_basis<double>(m);
    Matrix rebuilt = Matrix::Zero(6, 6);
    for (Index j = 0; j < 6; ++j)
      rebuilt += b.lambda(j) * b.modes().col(j) * b.modes().col(j).transpose();
    CHECK((rebuilt - m).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("rejections") {
    Matrix asym = Matrix::Identity(3, 3);
    asym(0, 1) = 0.5;
    CHECK_THROWS_AS(build_matrix_basis<double>(asym), HypothesisError);
    Matrix neg = Matrix::Identity(3, 3);
    neg(2, 2) = -1e-3;
    CHECK_THROWS_AS(build_matrix_basis<double>(neg), HypothesisError);
    Matrix tiny = Matrix::Identity(3, 3);
    tiny(0, 0) = -1e-14;
    CHECK(build_matrix_basis<double>(tiny).lambda(0) == 0.0);
  }
}

TEST_CASE("analyze and synthesize") {
  const auto basis = build_interval_basis(BasisKind::Neumann, 6, 1.0, 24);
  const Vector c = basis.analyze(basis.mode(1));
  for (Index j = 0; j < c.size(); ++j) CHECK(std::abs(c(j) - (j == 1 ? 1.0 : 0.0)) < 1e-13);
  CHECK(basis.synthesize(Vector::Zero(6)).values().isZero());

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Field f = random_in_span(basis, rng);
    const Field back = basis.synthesize(basis.analyze(f));
    CHECK((back.values() - f.values()).cwiseAbs().maxCoeff() < 1e-11);
  }
  const auto other = build_interval_basis(BasisKind::Neumann, 6, 1.0, 25);
  CHECK_THROWS_AS(basis.analyze(Field::zeros(other.grid_ptr())), DimensionError);
}

TEST_CASE("apply_power") {
  const auto neu = std::make_shared<const EigenBasis>(
      build_interval_basis(BasisKind::Neumann, 8, 1.0, 32));
  const FractionalOperator half(neu, 0.5);
  const Field e2 = neu->mode(1);
  const Field r = apply_power(half, e2);
  CHECK((r.values() - pi * e2.values()).cwiseAbs().maxCoeff() < 1e-12);
  const Field c = Field::constant(neu->grid_ptr(), 3.0);
  CHECK(apply_power(FractionalOperator(neu, 0.37), c).values().cwiseAbs().maxCoeff() < 1e-11);

  // Dense product oracle on a matrix-backed operator.
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  Matrix r4(4, 4);
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 4; ++j) r4(i, j) = g(rng);
  const Matrix m = r4 * r4.transpose();
  const FractionalOperator op(build_matrix_basis<double>(m), 1.0);
  Vector v(4);
  for (Index i = 0; i < 4; ++i) v(i) = g(rng);
  const Field fv(op.basis().grid_ptr(), v);
  CHECK((apply_power(op, fv).values() - m * v).cwiseAbs().maxCoeff() < 1e-10);
  // Multiplier two gives the square.
  CHECK((apply_power(op, fv, 2.0).values() - m * m * v).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("spectral properties on random fields") {
  std::mt19937_64 rng(17);
  const auto neu = std::make_shared<const EigenBasis>(
      build_interval_basis(BasisKind::Neumann, 12, 1.0, 12));
  for (double r : {0.25, 0.5, 1.0}) {
    const FractionalOperator op(neu, r);
    // Eigenvector scaling.
    for (Index j = 0; j < neu->size(); ++j) {
      for (double p : {0.5, 1.0, 2.0}) {
        const Field out = apply_power(op, neu->mode(j), p);
        const Vector expect = std::pow(neu->lambda(j), r * p) * neu->mode(j).values();
        // The kernel mode has a zero target; measure it against the operator norm.
        const double top = std::pow(neu->lambdas().maxCoeff(), r * p);
        const double scale = std::max(1.0, neu->lambda(j) == 0 ? top : expect.cwiseAbs().maxCoeff());
        CHECK((out.values() - expect).cwiseAbs().maxCoeff() <= 1e-10 * scale);
      }
    }
    for (int trial = 0; trial < 25; ++trial) {
      const Field v = random_in_span(*neu, rng);
      // Semigroup.
      const Field twice = apply_power(op, apply_power(op, v));
      const Field direct = apply_power(op, v, 2.0);
      CHECK((twice.values() - direct.values()).cwiseAbs().maxCoeff() <=
            1e-10 * std::max(1.0, direct.values().cwiseAbs().maxCoeff()));
      // Mean annihilation.
      CHECK(std::abs(mean(direct)) <= 1e-10 * std::max(1.0, norm(direct)));
      // Norm formula by direct summation.
      const Vector c = neu->analyze(v);
      double sum = c(0) * c(0);
      for (Index j = 1; j < c.size(); ++j) sum += std::pow(std::pow(neu->lambda(j), r) * c(j), 2);
      CHECK(std::abs(fractional_norm(op, v) * fractional_norm(op, v) - sum) <= 1e-12 * sum);
    }
  }
}

TEST_CASE("fractional norm branches") {
  const auto dir = std::make_shared<const EigenBasis>(
      build_interval_basis(BasisKind::Dirichlet, 5, 1.0, 20));
  const FractionalOperator op(dir, 0.75);
  CHECK(fractional_norm(op, dir->mode(0)) == doctest::Approx(std::pow(pi * pi, 0.75)));
  const auto neu = std::make_shared<const EigenBasis>(
      build_interval_basis(BasisKind::Neumann, 5, 1.0, 20));
  CHECK(fractional_norm(FractionalOperator(neu, 0.3), Field::constant(neu->grid_ptr(), -2.5)) ==
        doctest::Approx(2.5).epsilon(1e-13));
}

TEST_CASE("mean") {
  const auto neu = build_interval_basis(BasisKind::Neumann, 6, 3.0, 31);
  CHECK(mean(Field::constant(neu.grid_ptr(), 1.7)) == doctest::Approx(1.7).epsilon(1e-15));
  CHECK(std::abs(mean(neu.mode(1))) < 1e-12);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  Vector v(31);
  for (Index i = 0; i < 31; ++i) v(i) = u(rng);
  CHECK(mean(Field(neu.grid_ptr(), v)) == doctest::Approx(trapezoid(v, 3.0) / 3.0).epsilon(1e-14));
}

TEST_CASE("Poincare constant") {
  const auto neu = std::make_shared<const EigenBasis>(
      build_interval_basis(BasisKind::Neumann, 10, 1.0, 10));
  CHECK(poincare_constant(FractionalOperator(neu, 1.0)) == doctest::Approx(1.0 / (pi * pi)));
  CHECK(poincare_constant(FractionalOperator(neu, 0.5)) == doctest::Approx(1.0 / pi));

  Matrix d = Vector((Vector(3) << 0, 2, 5).finished()).asDiagonal();
  const FractionalOperator mop(build_matrix_basis<double>(d), 1.0);
  const double cp = poincare_constant(mop);
  CHECK(cp == doctest::Approx(0.5));
  // Oracle: maximize ‖v‖ / ‖A v‖ over random v orthogonal to the kernel.
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  double best = 0;
  for (int k = 0; k < 2000; ++k) {
    Vector v(3);
    v << 0, g(rng), g(rng);
    const Field f(mop.basis().grid_ptr(), v);
    best = std::max(best, norm(f) / norm(apply_power(mop, f)));
  }
  CHECK(best <= cp + 1e-12);
  const Field e2 = mop.basis().mode(1);
  CHECK(std::abs(norm(e2) / norm(apply_power(mop, e2)) - cp) < 1e-10);

  const auto dir = std::make_shared<const EigenBasis>(
      build_interval_basis(BasisKind::Dirichlet, 4, 1.0, 10));
  CHECK_THROWS_AS(poincare_constant(FractionalOperator(dir, 1.0)), PreconditionError);
  Matrix z = Matrix::Zero(3, 3);
  CHECK_THROWS_AS(poincare_constant(FractionalOperator(build_matrix_basis<double>(z), 1.0)),
                  HypothesisError);
}

TEST_CASE("Poincare inequality on random zero-mean fields") {
  const auto neu = std::make_shared<const EigenBasis>(
      build_interval_basis(BasisKind::Neumann, 16, 1.0, 16));
  const FractionalOperator op(neu, 0.5);
  const double cp = poincare_constant(op);
  std::mt19937_64 rng(23);
  for (int k = 0; k < 200; ++k) {
    const Field v = random_in_span(*neu, rng, true);
    CHECK(std::abs(mean(v)) < 1e-12);
    CHECK(norm(v) <= cp * norm(apply_power(op, v)) * (1 + 1e-12));
  }
}

TEST_CASE("exponent must be positive") {
  const auto neu = build_interval_basis(BasisKind::Neumann, 3, 1.0, 8);
  CHECK_THROWS_AS(FractionalOperator(neu, 0.0), HypothesisError);
}

TEST_CASE("matrix file reader") {
  const auto path = std::filesystem::temp_directory_path() / "fch_matrix_test.txt";
  {
    std::ofstream out(path);
    out << "3\n2 -1 0\n-1 2 -1\n0 -1 2\n";
  }
  const Matrix m = read_matrix_file(path.string());
  CHECK(m(1, 1) == 2.0);
  CHECK(m(0, 1) == -1.0);
  {
    std::ofstream out(path);
    out << "3\n2 -1 0\n-1 2\n";
  }
  CHECK_THROWS_AS(read_matrix_file(path.string()), ConfigError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_matrix_file("/nonexistent/fch_matrix"), ConfigError);
}
