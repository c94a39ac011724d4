#pragma once

// Spectral realizations of selfadjoint monotone operators on a shared
// quadrature grid: eigenpairs, fractional powers, norms and means.
//
// Everything here is templated on the scalar type; the library proper uses
// the double aliases at the bottom of the file.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>

#include "fch/errors.hpp"

namespace fch {

using Index = Eigen::Index;

/// Node coordinates and positive quadrature weights summing to `length`.
template <typename Scalar>
struct BasicGrid {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Vector nodes;
  Vector weights;
  Scalar length{0};

  Index size() const { return nodes.size(); }

  /// Uniform nodes on [0, length] with trapezoid weights.
  static BasicGrid trapezoid(Scalar length, Index points) {
    if (!(length > 0)) throw ConfigError("grid length must be positive", "grid");
    if (points < 2) throw ConfigError("trapezoid grid needs at least 2 points", "grid");
    BasicGrid g;
    g.length = length;
    g.nodes = Vector::LinSpaced(points, Scalar(0), length);
    const Scalar dx = length / Scalar(points - 1);
    g.weights = Vector::Constant(points, dx);
    g.weights(0) = dx / 2;
    g.weights(points - 1) = dx / 2;
    return g;
  }

  /// `points` nodes 0, 1, ..., points-1 with unit weights (Euclidean inner product).
  static BasicGrid unit(Index points) {
    if (points < 1) throw ConfigError("unit grid needs at least 1 point", "grid");
    BasicGrid g;
    g.length = Scalar(points);
    g.nodes = Vector::LinSpaced(points, Scalar(0), Scalar(points - 1));
    g.weights = Vector::Ones(points);
    return g;
  }

  bool operator==(const BasicGrid& other) const {
    return size() == other.size() && length == other.length &&
           nodes == other.nodes && weights == other.weights;
  }
};

template <typename Scalar>
using BasicGridPtr = std::shared_ptr<const BasicGrid<Scalar>>;

/// A function sampled at the nodes of a grid. Value type; the grid is shared.
template <typename Scalar>
class BasicField {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  BasicField() = default;

  BasicField(BasicGridPtr<Scalar> grid, Vector values)
      : grid_(std::move(grid)), values_(std::move(values)) {
    if (!grid_) throw ConfigError("field without grid", "grid");
    if (values_.size() != grid_->size())
      throw DimensionError("field has " + std::to_string(values_.size()) +
                           " values on a grid of " + std::to_string(grid_->size()));
  }

  static BasicField zeros(BasicGridPtr<Scalar> grid) {
    const Index n = grid->size();
    return BasicField(std::move(grid), Vector::Zero(n));
  }

  static BasicField constant(BasicGridPtr<Scalar> grid, Scalar c) {
    const Index n = grid->size();
    return BasicField(std::move(grid), Vector::Constant(n, c));
  }

  const Vector& values() const { return values_; }
  Vector& values() { return values_; }
  Scalar operator[](Index i) const { return values_(i); }
  Index size() const { return values_.size(); }

  const BasicGrid<Scalar>& grid() const { return *grid_; }
  const BasicGridPtr<Scalar>& grid_ptr() const { return grid_; }

  bool same_grid(const BasicField& other) const {
    return grid_ == other.grid_ || (grid_ && other.grid_ && *grid_ == *other.grid_);
  }

  BasicField& operator+=(const BasicField& o) {
    check_same(o);
    values_ += o.values_;
    return *this;
  }
  BasicField& operator-=(const BasicField& o) {
    check_same(o);
    values_ -= o.values_;
    return *this;
  }
  BasicField& operator*=(Scalar a) {
    values_ *= a;
    return *this;
  }

  friend BasicField operator+(BasicField a, const BasicField& b) { return a += b; }
  friend BasicField operator-(BasicField a, const BasicField& b) { return a -= b; }
  friend BasicField operator*(Scalar s, BasicField a) { return a *= s; }
  friend BasicField operator*(BasicField a, Scalar s) { return a *= s; }

 private:
  void check_same(const BasicField& o) const {
    if (!same_grid(o)) throw DimensionError("fields live on different grids");
  }

  BasicGridPtr<Scalar> grid_;
  Vector values_;
};

/// Quadrature inner product (a, b).
template <typename Scalar>
Scalar inner(const BasicField<Scalar>& a, const BasicField<Scalar>& b) {
  if (!a.same_grid(b)) throw DimensionError("inner product of fields on different grids");
  return (a.grid().weights.array() * a.values().array() * b.values().array()).sum();
}

template <typename Scalar>
Scalar norm(const BasicField<Scalar>& a) {
  return std::sqrt(inner(a, a));
}

/// Spatial mean: quadrature of the field divided by the domain length.
template <typename Scalar>
Scalar mean(const BasicField<Scalar>& a) {
  return a.grid().weights.dot(a.values()) / a.grid().length;
}

enum class BasisKind { Neumann, Dirichlet, Matrix };

inline const char* to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::Neumann: return "neumann";
    case BasisKind::Dirichlet: return "dirichlet";
    case BasisKind::Matrix: return "matrix";
  }
  return "unknown";
}

/// Orthonormal eigenpairs of a selfadjoint monotone operator, truncated to
/// `size()` modes. Columns of `modes()` are nodal values; eigenvalues are
/// sorted nondecreasing and nonnegative.
template <typename Scalar>
class BasicEigenBasis {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Field = BasicField<Scalar>;

  BasicEigenBasis(BasisKind kind, BasicGridPtr<Scalar> grid, Vector lambdas, Matrix modes)
      : kind_(kind), grid_(std::move(grid)), lambdas_(std::move(lambdas)),
        modes_(std::move(modes)) {
    if (modes_.rows() != grid_->size() || modes_.cols() != lambdas_.size())
      throw DimensionError("eigenbasis shape does not match grid");
    for (Index j = 0; j < lambdas_.size(); ++j) {
      if (lambdas_(j) < 0) throw HypothesisError("operator_not_monotone", "negative eigenvalue");
      if (j > 0 && lambdas_(j) < lambdas_(j - 1))
        throw ConfigError("eigenvalues must be nondecreasing", "basis");
    }
    weighted_modes_ = grid_->weights.asDiagonal() * modes_;
  }

  BasisKind kind() const { return kind_; }
  Index size() const { return lambdas_.size(); }
  const Vector& lambdas() const { return lambdas_; }
  Scalar lambda(Index j) const { return lambdas_(j); }
  const Matrix& modes() const { return modes_; }
  const BasicGrid<Scalar>& grid() const { return *grid_; }
  const BasicGridPtr<Scalar>& grid_ptr() const { return grid_; }
  Scalar domain_length() const { return grid_->length; }

  /// First eigenvalue vanishes (the λ₁ = 0 branch).
  bool zero_first_eigenvalue() const { return size() > 0 && lambdas_(0) == Scalar(0); }

  /// Whether modes()[0] is constant in space to `tol` relative to its size.
  bool first_mode_constant(Scalar tol = Scalar(1e-10)) const {
    if (size() == 0) return false;
    const auto col = modes_.col(0);
    const Scalar scale = col.cwiseAbs().maxCoeff();
    return scale > 0 && (col.array() - col(0)).abs().maxCoeff() <= tol * scale;
  }

  /// Field as a mode in this basis.
  Field mode(Index j) const { return Field(grid_, modes_.col(j)); }

  /// Coefficients (v, e_j) of a field sampled on this basis' grid.
  Vector analyze(const Field& field) const {
    check_grid(field);
    return weighted_modes_.transpose() * field.values();
  }

  Field synthesize(const Vector& coefficients) const {
    if (coefficients.size() != size())
      throw DimensionError("coefficient vector has wrong length");
    return Field(grid_, modes_ * coefficients);
  }

  /// Maximal entry of |G - I| with G the quadrature Gram matrix of the modes.
  Scalar gram_defect() const {
    const Matrix gram = modes_.transpose() * weighted_modes_;
    return (gram - Matrix::Identity(size(), size())).cwiseAbs().maxCoeff();
  }

  /// Distance of `field` from the span of the modes, in the quadrature norm.
  Scalar span_defect(const Field& field) const {
    return norm(field - synthesize(analyze(field)));
  }

  /// Nodal matrix of the spectral multiplier diag(weights): v ↦ Σ w_j (v,e_j) e_j.
  Matrix nodal_multiplier(const Vector& multipliers) const {
    return modes_ * multipliers.asDiagonal() * weighted_modes_.transpose();
  }

  void check_grid(const Field& field) const {
    if (field.grid_ptr() != grid_ && !(field.grid() == *grid_))
      throw DimensionError("field is not sampled on the basis grid");
  }

 private:
  BasisKind kind_;
  BasicGridPtr<Scalar> grid_;
  Vector lambdas_;
  Matrix modes_;
  Matrix weighted_modes_;
};

/// Spectral power A^exponent of the operator diagonalized by `basis`.
template <typename Scalar>
class BasicFractionalOperator {
 public:
  using Basis = BasicEigenBasis<Scalar>;
  using Vector = typename Basis::Vector;

  BasicFractionalOperator(std::shared_ptr<const Basis> basis, Scalar exponent)
      : basis_(std::move(basis)), exponent_(exponent) {
    if (!basis_) throw ConfigError("fractional operator without basis", "operator");
    if (!(exponent_ > 0))
      throw HypothesisError("exponent_nonpositive", "fractional exponent must be positive");
  }
  BasicFractionalOperator(Basis basis, Scalar exponent)
      : BasicFractionalOperator(std::make_shared<const Basis>(std::move(basis)), exponent) {}

  const Basis& basis() const { return *basis_; }
  const std::shared_ptr<const Basis>& basis_ptr() const { return basis_; }
  Scalar exponent() const { return exponent_; }

  /// λ_j^(exponent * multiplier) for every mode.
  Vector symbol(Scalar multiplier = Scalar(1)) const {
    const Scalar p = exponent_ * multiplier;
    return basis_->lambdas().unaryExpr([p](Scalar l) { return std::pow(l, p); });
  }

 private:
  std::shared_ptr<const Basis> basis_;
  Scalar exponent_;
};

namespace detail {

template <typename Scalar>
void normalize_columns(const BasicGrid<Scalar>& grid,
                       Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& modes) {
  for (Index j = 0; j < modes.cols(); ++j) {
    const Scalar n2 = (grid.weights.array() * modes.col(j).array().square()).sum();
    modes.col(j) /= std::sqrt(n2);
  }
}

}  // namespace detail

/// Cosine (Neumann) or sine (Dirichlet) eigenbasis of -d²/dx² on (0, length)
/// sampled on a trapezoid grid. Modes are normalized in the discrete inner
/// product, which makes them exactly orthonormal under the quadrature.
template <typename Scalar = double>
BasicEigenBasis<Scalar> build_interval_basis(BasisKind kind, Index n, Scalar length,
                                             Index grid_points) {
  using Matrix = typename BasicEigenBasis<Scalar>::Matrix;
  using Vector = typename BasicEigenBasis<Scalar>::Vector;
  if (kind == BasisKind::Matrix)
    throw ConfigError("interval basis must be neumann or dirichlet", "basis");
  if (n < 1) throw ConfigError("mode count must be positive", "basis");
  if (!(length > 0)) throw ConfigError("interval length must be positive", "basis");
  // Sines vanish at both end nodes, so only grid_points - 2 of them are independent.
  const Index max_modes = kind == BasisKind::Neumann ? grid_points : grid_points - 2;
  if (n > max_modes)
    throw ConfigError("mode count " + std::to_string(n) + " exceeds " +
                          std::to_string(max_modes) + " for " + to_string(kind) +
                          " basis on " + std::to_string(grid_points) + " grid points",
                      "basis");

  auto grid = std::make_shared<const BasicGrid<Scalar>>(
      BasicGrid<Scalar>::trapezoid(length, grid_points));
  const Scalar pi = std::numbers::pi_v<Scalar>;
  Vector lambdas(n);
  Matrix modes(grid_points, n);
  for (Index j = 0; j < n; ++j) {
    const Scalar k = kind == BasisKind::Neumann ? Scalar(j) : Scalar(j + 1);
    const Scalar omega = pi * k / length;
    lambdas(j) = omega * omega;
    for (Index i = 0; i < grid_points; ++i) {
      const Scalar x = grid->nodes(i);
      modes(i, j) = kind == BasisKind::Neumann ? std::cos(omega * x) : std::sin(omega * x);
    }
    if (kind == BasisKind::Dirichlet) {
      modes(0, j) = 0;
      modes(grid_points - 1, j) = 0;
    }
  }
  detail::normalize_columns(*grid, modes);
  return BasicEigenBasis<Scalar>(kind, std::move(grid), std::move(lambdas), std::move(modes));
}

/// Eigenbasis of a symmetric positive-semidefinite nodal matrix. Without a grid
/// the Euclidean inner product is used; a supplied grid must have uniform weights.
/// Eigenvalues within 1e-12 (relative to the spectral radius, at least absolute)
/// of zero are set to zero; more negative ones are rejected.
template <typename Scalar = double>
BasicEigenBasis<Scalar> build_matrix_basis(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& matrix,
    BasicGridPtr<Scalar> grid = nullptr) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Index m = matrix.rows();
  if (m < 1 || matrix.cols() != m) throw DimensionError("operator matrix must be square");
  if (m > 512) throw ConfigError("operator matrix larger than 512", "basis");
  const Scalar scale = std::max<Scalar>(Scalar(1), matrix.cwiseAbs().maxCoeff());
  if ((matrix - matrix.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-12) * scale)
    throw HypothesisError("operator_not_symmetric", "operator matrix is not symmetric");

  if (!grid) grid = std::make_shared<const BasicGrid<Scalar>>(BasicGrid<Scalar>::unit(m));
  if (grid->size() != m) throw DimensionError("matrix size does not match grid");
  const Scalar w = grid->weights(0);
  if ((grid->weights.array() - w).abs().maxCoeff() > Scalar(1e-14) * w)
    throw ConfigError("matrix-backed operators need a grid with uniform weights", "grid");

  Eigen::SelfAdjointEigenSolver<Matrix> solver(Scalar(0.5) * (matrix + matrix.transpose()));
  if (solver.info() != Eigen::Success)
    throw NumericalError("eigendecomposition failed", "eigensolver");
  auto lambdas = solver.eigenvalues().eval();
  const Scalar tol = Scalar(1e-12) * std::max<Scalar>(Scalar(1), lambdas.cwiseAbs().maxCoeff());
  for (Index j = 0; j < m; ++j) {
    if (lambdas(j) < -tol)
      throw HypothesisError("operator_not_monotone",
                            "operator matrix has a negative eigenvalue");
    if (std::abs(lambdas(j)) <= tol) lambdas(j) = 0;
  }
  Matrix modes = solver.eigenvectors() / std::sqrt(w);
  return BasicEigenBasis<Scalar>(BasisKind::Matrix, std::move(grid), std::move(lambdas),
                                 std::move(modes));
}

/// Reads "n" followed by n rows of n whitespace-separated reals.
inline Eigen::MatrixXd read_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open matrix file: " + path, "file");
  long long n = 0;
  if (!(in >> n) || n < 1) throw ConfigError("matrix file has no valid size: " + path, "file");
  Eigen::MatrixXd m(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (!(in >> m(i, j)))
        throw ConfigError("matrix file truncated or malformed: " + path, "file");
  std::string extra;
  if (in >> extra) throw ConfigError("trailing data in matrix file: " + path, "file");
  return m;
}

template <typename Scalar>
BasicField<Scalar> synthesize(const BasicEigenBasis<Scalar>& basis,
                              const typename BasicEigenBasis<Scalar>::Vector& c) {
  return basis.synthesize(c);
}

template <typename Scalar>
typename BasicEigenBasis<Scalar>::Vector analyze(const BasicEigenBasis<Scalar>& basis,
                                                 const BasicField<Scalar>& field) {
  return basis.analyze(field);
}

/// A^(exponent * multiplier) applied to the projection of `field` on the modes.
template <typename Scalar>
BasicField<Scalar> apply_power(const BasicFractionalOperator<Scalar>& op,
                               const BasicField<Scalar>& field,
                               Scalar multiplier = Scalar(1)) {
  if (!(multiplier > 0)) throw PreconditionError("power multiplier must be positive");
  const auto& basis = op.basis();
  return basis.synthesize(op.symbol(multiplier).cwiseProduct(basis.analyze(field)));
}

/// ‖A^r v‖ computed from coefficients.
template <typename Scalar>
Scalar power_norm(const BasicFractionalOperator<Scalar>& op, const BasicField<Scalar>& field) {
  return op.symbol().cwiseProduct(op.basis().analyze(field)).norm();
}

/// Equivalent norm on the domain of A^r: ‖A^r v‖ when λ₁ > 0, and
/// (|(v,e₁)|² + ‖A^r v‖²)^½ when λ₁ = 0.
template <typename Scalar>
Scalar fractional_norm(const BasicFractionalOperator<Scalar>& op,
                       const BasicField<Scalar>& field) {
  const auto c = op.basis().analyze(field);
  auto weighted = op.symbol().cwiseProduct(c).eval();
  if (op.basis().zero_first_eigenvalue()) weighted(0) = c(0);
  return weighted.norm();
}

/// Norm dual to fractional_norm, evaluated on coefficients (g, e_j).
template <typename Scalar>
Scalar dual_fractional_norm(const BasicFractionalOperator<Scalar>& op,
                            const typename BasicEigenBasis<Scalar>::Vector& c) {
  const auto& lambdas = op.basis().lambdas();
  const bool zero_first = op.basis().zero_first_eigenvalue();
  Scalar sum = 0;
  for (Index j = 0; j < c.size(); ++j) {
    if (j == 0 && zero_first) {
      sum += c(0) * c(0);
    } else {
      const Scalar w = std::pow(lambdas(j), -op.exponent());
      sum += w * w * c(j) * c(j);
    }
  }
  return std::sqrt(sum);
}

/// Sharp Poincaré constant λ₂^(-r) for the truncated basis; requires λ₁ = 0 < λ₂.
template <typename Scalar>
Scalar poincare_constant(const BasicFractionalOperator<Scalar>& op) {
  const auto& basis = op.basis();
  if (!basis.zero_first_eigenvalue())
    throw PreconditionError("Poincare constant only needed when the first eigenvalue is zero");
  if (basis.size() < 2 || !(basis.lambda(1) > 0))
    throw HypothesisError("simple_kernel", "second eigenvalue must be positive");
  return std::pow(basis.lambda(1), -op.exponent());
}

using Grid = BasicGrid<double>;
using GridPtr = BasicGridPtr<double>;
using Field = BasicField<double>;
using EigenBasis = BasicEigenBasis<double>;
using FractionalOperator = BasicFractionalOperator<double>;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

}  // namespace fch
