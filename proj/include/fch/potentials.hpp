#pragma once

// Convex/smooth splitting f = β̂ + π̂ of double-well potentials, the maximal
// monotone graph β = ∂β̂ and its Moreau–Yosida regularization.

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace fch {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Closed real interval with possibly infinite ends; the value of β at a point.
struct Interval {
  double lo{0};
  double hi{0};

  static Interval point(double v) { return {v, v}; }
  bool degenerate() const { return lo == hi; }
  double distance(double x) const {
    if (x < lo) return lo - x;
    if (x > hi) return x - hi;
    return 0.0;
  }
};

/// Interval of the real line with independently open or closed ends.
struct EffectiveDomain {
  double lower{-kInf};
  double upper{kInf};
  bool lower_closed{false};
  bool upper_closed{false};

  static EffectiveDomain real_line() { return {}; }

  bool contains(double x) const {
    const bool above = lower_closed ? x >= lower : x > lower;
    const bool below = upper_closed ? x <= upper : x < upper;
    return above && below;
  }
  bool in_closure(double x) const { return x >= lower && x <= upper; }
  bool in_interior(double x) const { return x > lower && x < upper; }
  bool bounded() const { return lower > -kInf && upper < kInf; }
};

enum class PotentialKind { Regular, Logarithmic, Obstacle, ExampleBest, Custom };

const char* to_string(PotentialKind kind);
PotentialKind parse_potential_kind(const std::string& name);

/// The split f = β̂ + π̂ with β = ∂β̂ and π = π̂'.
///
/// Built-in kinds carry closed-form resolvents; custom ones fall back to
/// bracketing on the graph. `beta_prime` returns +inf at kinks and at the
/// boundary of D(β), which is what the Yosida derivative needs.
struct PotentialSpec {
  PotentialKind kind{PotentialKind::Custom};
  std::map<std::string, double> params;

  EffectiveDomain hat_domain;    // D(β̂)
  EffectiveDomain graph_domain;  // D(β)

  std::function<double(double)> beta_hat;  // +inf outside D(β̂)
  std::function<Interval(double)> beta;    // throws DomainError outside D(β)
  std::function<double(double)> beta_prime;
  std::function<double(double)> pi_hat;
  std::function<double(double)> pi;
  std::function<double(double)> pi_prime;  // empty: centered differences
  double lipschitz_pi{0};

  /// Closed-form J_λ(s); empty for custom specs.
  std::function<double(double s, double lambda)> closed_resolvent;

  /// β single-valued and C¹ on an open D(β).
  bool smooth_graph{false};

  double lipschitz_pi_shifted() const { return lipschitz_pi + 1.0; }
  std::string name() const { return to_string(kind); }
  double f(double r) const { return beta_hat(r) + pi_hat(r); }
};

using PotentialParams = std::map<std::string, double>;

/// Built-in potentials: regular (β̂ = r⁴/4, π̂ = (1 - 2r²)/4), logarithmic
/// (param c1 > 1), obstacle (param c2 > 0) and example_best (β̂ = r² + |r|).
PotentialSpec make_potential(PotentialKind kind, const PotentialParams& params = {});
PotentialSpec make_potential(const std::string& name, const PotentialParams& params = {});

/// Pieces of a user-defined potential.
struct CustomPotential {
  EffectiveDomain hat_domain;
  EffectiveDomain graph_domain;
  std::function<double(double)> beta_hat;
  std::function<Interval(double)> beta;
  std::function<double(double)> pi_hat;
  std::function<double(double)> pi;
  double lipschitz_pi{0};
  bool smooth_graph{false};
};

/// Builds a custom spec and samples its structural hypotheses: β̂(0) = 0 and
/// β̂ ≥ 0, monotone β, Lipschitz π, and quadratic coercivity of β̂ + π̂ on a
/// finite range. Any violation is a HypothesisError.
PotentialSpec make_custom_potential(CustomPotential parts, std::uint64_t seed = 7);

/// Throws HypothesisError (code names the failing property) on violation.
void check_potential_invariants(const PotentialSpec& spec, std::uint64_t seed = 7,
                                int samples = 1000);

/// π'(s), closed form when available, else centered differences of step 1e-6.
double pi_derivative(const PotentialSpec& spec, double s);

/// Distance from xi to the set β(y). Throws DomainError if y ∉ D(β).
double graph_selection_residual(const PotentialSpec& spec, double y, double xi);

/// Moreau–Yosida regularization of β̂ at level λ > 0.
class YosidaRegularization {
 public:
  YosidaRegularization(PotentialSpec spec, double lambda);

  const PotentialSpec& spec() const { return spec_; }
  double lambda() const { return lambda_; }

 private:
  PotentialSpec spec_;
  double lambda_;
};

/// J_λ(s): the unique J with s ∈ J + λβ(J).
double resolvent(const YosidaRegularization& reg, double s);
/// β_λ(s) = (s - J_λ(s)) / λ.
double yosida(const YosidaRegularization& reg, double s);
/// β̂_λ(s) = |s - J_λ(s)|² / (2λ) + β̂(J_λ(s)).
double yosida_primal(const YosidaRegularization& reg, double s);
/// β_λ'(s) = b / (1 + λ b) with b = β'(J_λ(s)); 1/λ where b is infinite.
double yosida_derivative(const YosidaRegularization& reg, double s);

/// Agreement of the closed-form Yosida machinery with brute-force
/// minimization of (s - r)²/(2λ) + β̂(r) over a uniform grid.
struct YosidaOracleReport {
  double grid_spacing{0};
  double resolvent_error{0};  // max |J_λ(s) - grid argmin|
  double yosida_error{0};     // max |β_λ(s) - (s - grid argmin)/λ|
  double primal_error{0};     // max |β̂_λ(s) - grid min|
  double selection{0};        // max dist(β_λ(s), β(J_λ(s)))
  double max_error() const { return resolvent_error; }
};

/// `samples` seeded s in [-R, R], R = 1 for bounded D(β̂) and 3 otherwise;
/// β̂ is tabulated once on `points` nodes over [-R, R].
YosidaOracleReport yosida_grid_oracle(const PotentialSpec& spec, double lambda, int samples,
                                      int points, std::uint64_t seed);

/// Witness of β̂_λ(s) + π̂(s) ≥ α s² - C on a symmetric scan range.
struct CoercivityCertificate {
  double alpha{0};
  double C{0};
  double C_prime{0};  // β̂_λ + π̂ ≥ -C' on the scan
  std::pair<double, double> scan_range{0, 0};
  double lambda_max{0};
  // Only a finite range is scanned; the liminf at infinity is not extrapolated.
  bool finite_range_only{true};
};

/// Largest α on a fixed ladder for which the minimal admissible C is not
/// attained at the edge of the scan range (so the quadratic bound is not an
/// artifact of truncation), together with that C. Throws HypothesisError
/// "coercivity" if no rung qualifies.
CoercivityCertificate coercivity_check(const PotentialSpec& spec,
                                       const std::vector<double>& lambdas,
                                       std::pair<double, double> range, int grid);

/// Same ladder scan applied to an arbitrary sampled function g(s).
CoercivityCertificate coercivity_scan(const std::function<double(double)>& g,
                                      std::pair<double, double> range, int grid);

}  // namespace fch
