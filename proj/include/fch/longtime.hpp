#pragma once

// Long-time diagnostics: tail statistics of μ, the space-independent limit
// μ_∞ when λ₁ = 0, stationarity residuals of ω-limit candidates, and the
// nonuniqueness construction with β̂(r) = r² + |r|.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fch/stepper.hpp"

namespace fch {

struct TimeSeries {
  std::vector<double> times;
  std::vector<double> values;
};

struct MuTailStats {
  double window_start{0};
  double sup_norm_mu{0};         // sup ‖μ(t)‖ over the tail window
  double sup_norm_mu_head{0};    // sup ‖μ(t)‖ before the window
  double integral_Ar_mu_sq{0};   // tail part of Σ h ‖A^r μ^n‖²
  TimeSeries mean_mu_series;     // mean(μ(t)) on the window
};

/// Statistics over the trailing `window_fraction` of [0, T].
MuTailStats mu_tail_stats(const DiscreteTrajectory& traj, const FractionalOperator& op_A,
                          double window_fraction = 0.5);

struct MuInfinity {
  TimeSeries series;      // mean(μ(t)) on the tail window
  double flatness{0};     // max_t ‖μ(t) - mean(μ(t))‖ on the window
  double average{0};      // time average of the series
  double spread{0};       // max - min of the series
};

/// μ_∞ as the spatial mean of μ over the tail window. Only meaningful when
/// λ₁(A) = 0; otherwise throws HypothesisError("branch").
MuInfinity extract_mu_infinity(const DiscreteTrajectory& traj, const FractionalOperator& op_A,
                               double window_fraction = 0.5);

struct StationarityResidual {
  double residual{0};  // ‖dist(μ_∞ + u_∞ - B^{2σ}y - π(y), β(y))‖_H
  double scale{0};     // ‖B^{2σ}y‖ + ‖π(y)‖ + ‖μ_∞‖ + ‖u_∞‖ + ‖selection‖, floor 1e-12
  double relative() const { return residual / scale; }
};

/// Residual of B^{2σ}y + β(y) + π(y) ∋ μ_∞ + u_∞. For single-valued β this
/// is the plain equation residual; at multivalued points (obstacle walls,
/// kinks) it is the complementarity violation. Nodes within `domain_tol`
/// outside the closure of D(β) are projected back; farther ones are a
/// DomainError.
StationarityResidual stationarity_residual(const Field& y, double mu_inf, const Field& u_inf,
                                           const PotentialSpec& spec,
                                           const FractionalOperator& op_B,
                                           double domain_tol = 0.0);

/// max over random admissible v of
///   (B^σy, B^σ(y - v)) + ∫β̂(y) + (π(y) - u_∞ - μ_∞, y - v) - ∫β̂(v),
/// which is ≤ 0 for a solution of the variational form. Test fields take
/// values in D(β̂) ∩ [-1, 1].
double variational_gap(const Field& y, double mu_inf, const Field& u_inf,
                       const PotentialSpec& spec, const FractionalOperator& op_B,
                       int samples = 100, std::uint64_t seed = 11, double domain_tol = 0.0);

enum class LongtimeBranch { Lambda1Positive, Lambda1Zero };
const char* to_string(LongtimeBranch branch);

struct OmegaLimitReport {
  std::vector<double> probe_times;
  std::vector<int> probe_steps;
  Field candidate;
  std::vector<std::vector<double>> cauchy_gaps;  // ‖y(t_i) - y(t_j)‖
  double b_sigma_bound{0};                       // max ‖B^σ y(t_i)‖
  StationarityResidual stationarity;
  StationarityResidual initial_stationarity;     // same residual at t = 0
  std::optional<MuInfinity> mu_infinity;         // λ₁ = 0 only
  double mu_inf_used{0};
  LongtimeBranch branch{LongtimeBranch::Lambda1Positive};
  bool density_assumed{false};  // not checkable for matrix-backed operators
};

/// Options for omega_probe.
struct ProbeOptions {
  double window_fraction{0.5};
  double domain_tol{0.0};
};

/// Assembles H Cauchy gaps over the probe times, the B^σ bound and the branch
/// residual (μ_∞ = 0 when λ₁ > 0, tail average of mean(μ) when λ₁ = 0).
/// Throws ConfigError("insufficient_data") for fewer than 2 probes and
/// RangeError for a time that is not a stored step.
OmegaLimitReport omega_probe(const DiscreteTrajectory& traj, const std::vector<double>& times,
                             const SchemeConfig& config, const Field& u_inf,
                             const ProbeOptions& options = {});

/// `count` probe times spaced logarithmically over [T/2^(count-1), T],
/// snapped to stored steps and deduplicated.
std::vector<double> log_spaced_probe_times(const DiscreteTrajectory& traj, int count);

struct ExampleBestSample {
  double t{0};
  double mu_bar{0};
  double first_equation{0};  // ‖A^{2r} μ̄(t)·1‖, the only nonzero candidate term
  double selection{0};       // dist(μ̄(t), β(0))
  double second_equation{0}; // ‖B^{2σ}0 + ξ + π(0) - μ̄ - 0‖ with ξ = μ̄
};

struct ExampleBestReport {
  std::vector<ExampleBestSample> samples;
  double max_violation{0};
};

/// Checks that (y ≡ 0, μ ≡ μ̄(t)) solves the system with β̂(r) = r² + |r|,
/// π̂ = 0, u = 0 at the given sample times. Requires λ₁(A) = 0 and
/// |μ̄| ≤ 1 (HypothesisError "admissibility" otherwise).
ExampleBestReport example_best_check(const std::function<double(double)>& mu_bar,
                                     const std::vector<double>& sample_times,
                                     const FractionalOperator& op_A,
                                     const FractionalOperator& op_B);

struct RangeCertificate {
  double y_min{0};
  double y_max{0};
  double a{-kInf};
  double b{kInf};
  bool closed_a{true};
  bool closed_b{true};
  bool contained{true};
  double overshoot{0};       // distance by which [y_min, y_max] leaves [a, b]
  double yosida_lambda{0};   // level the overshoot is attributed to
};

/// Range of y over all steps and nodes against [a, b]; without an explicit
/// interval the closure of D(β) is used (with its open/closed ends).
RangeCertificate range_certificate(const DiscreteTrajectory& traj, const PotentialSpec& spec,
                                   double yosida_lambda,
                                   std::optional<std::pair<double, double>> interval = {});

}  // namespace fch
