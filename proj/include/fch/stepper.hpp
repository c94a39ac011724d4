#pragma once

// Implicit time-discrete scheme for the regularized fractional Cahn–Hilliard
// system:
//
//   (y⁺ - y)/h + μ⁺ + A^{2r} μ⁺ = μ
//   τ (y⁺ - y)/h + (L' I + B^{2σ} + β_λ + π)(y⁺) = L' y + μ⁺ + u⁺
//
// with y⁰ = y₀, μ⁰ = 0 and L' = L_π + 1.

#include <optional>
#include <string>
#include <vector>

#include "fch/potentials.hpp"
#include "fch/spectral.hpp"

namespace fch {

struct SchemeConfig {
  FractionalOperator op_A;  // exponent r
  FractionalOperator op_B;  // exponent σ
  PotentialSpec spec;
  double yosida_lambda{1e-2};
  double tau{0};
  double h{1e-2};
  int N{0};
  double newton_tol{1e-10};
  int newton_max{50};

  double T() const { return h * N; }
};

/// u(t) = u_∞ + d·e^{-kt}, or piecewise-linear in t through tabulated fields
/// (held constant outside the table) when a table is present.
class SourceTerm {
 public:
  static SourceTerm constant(Field u_inf);
  static SourceTerm decaying(Field u_inf, Field amplitude, double rate);
  static SourceTerm tabulated(Field u_inf, std::vector<double> times, std::vector<Field> values);

  Field at(double t) const;
  const Field& u_infinity() const { return u_inf_; }
  /// ∫₀ᵀ ‖∂ₜu‖ dt, exact for every descriptor.
  double derivative_l1_norm(double T) const;
  bool is_tabulated() const { return !times_.empty(); }
  const Field& amplitude() const { return amplitude_; }
  double rate() const { return rate_; }

 private:
  Field u_inf_;
  Field amplitude_;
  double rate_{0};
  std::vector<double> times_;
  std::vector<Field> values_;
};

struct ProblemData {
  Field y0;
  SourceTerm source;
};

struct ValidationReport {
  bool lambda1_zero{false};
  double m0{0};
  std::vector<std::string> checks;  // names of hypotheses that were verified
};

/// Verifies the structural and data hypotheses for this configuration; each
/// failure throws an error with its own code.
ValidationReport validate(const SchemeConfig& config, const ProblemData& data);

/// Residuals are normwise backward errors: the nodal max-norm of each
/// equation divided by the max-norms of its terms, with operator terms
/// bounded by ‖A^{2r}‖∞|μ|∞ and ‖B^{2σ}‖∞|y|∞ (floor 1). An absolute test
/// would sit below the eps·‖A^{2r}‖ round-off floor of stiff operators.
struct StepStats {
  int iterations{0};
  double residual_first{0};   // scaled max nodal residual of the first equation
  double residual_second{0};  // scaled max nodal residual of the second equation
};

struct StepResult {
  Field y;
  Field mu;
  StepStats stats;
  std::vector<double> residual_history;
};

/// Precomputed nodal matrices for one configuration. Stateless after
/// construction; `step` may be called concurrently.
class Stepper {
 public:
  explicit Stepper(const SchemeConfig& config);

  StepResult step(const Field& prev_y, const Field& prev_mu, const Field& u_next,
                  const std::optional<Field>& initial_guess = std::nullopt) const;

  /// Scaled nodal residuals of both discrete equations at (y⁺, μ⁺).
  std::pair<Vector, Vector> residuals(const Field& prev_y, const Field& prev_mu,
                                      const Field& u_next, const Field& y,
                                      const Field& mu) const;

  const SchemeConfig& config() const { return config_; }

 private:
  Vector mu_from_y(const Vector& prev_y, const Vector& prev_mu, const Vector& y) const;
  Vector reduced_residual(const Vector& prev_y, const Vector& prev_mu, const Vector& u,
                          const Vector& y, double* scale = nullptr) const;

  SchemeConfig config_;
  YosidaRegularization reg_;
  GridPtr grid_;
  Matrix a_power_;    // A^{2r}
  Matrix b_power_;    // B^{2σ}
  Matrix a_inverse_;  // (I + A^{2r})^{-1}
  double a_norm_{0};  // ‖A^{2r}‖∞ of the nodal matrix
  double b_norm_{0};  // ‖B^{2σ}‖∞
};

StepResult solve_step(const Field& prev_y, const Field& prev_mu, const Field& u_next,
                      const SchemeConfig& config,
                      const std::optional<Field>& initial_guess = std::nullopt);

struct DiscreteTrajectory {
  std::vector<Field> ys;
  std::vector<Field> mus;
  double h{0};
  std::vector<StepStats> stats;  // stats[n] belongs to step n -> n+1

  int steps() const { return static_cast<int>(ys.size()) - 1; }
  double T() const { return h * steps(); }
  double time(int n) const { return h * n; }
};

/// Runs N steps from (y₀, 0) with u^{n+1} = u((n+1)h).
DiscreteTrajectory run(const SchemeConfig& config, const ProblemData& data);

enum class InterpolantKind { PiecewiseConstantRight, PiecewiseConstantLeft, PiecewiseLinear };
enum class Component { Y, Mu };

/// Interpolants of the node sequence: right-constant gives z^n on
/// ((n-1)h, nh] (and z⁰ at t = 0), left-constant gives z^{n-1} there, and
/// linear interpolates between consecutive nodes.
Field interpolate(const std::vector<Field>& nodes, double h, InterpolantKind kind, double t);
Field interpolate(const DiscreteTrajectory& traj, Component which, InterpolantKind kind,
                  double t);

}  // namespace fch
