#pragma once

// Energy ledgers for the discrete scheme: the per-step inequality obtained by
// testing the two equations with hμ^{n+1} and y^{n+1} - y^n, its summed form,
// the dual-norm bound on the time derivative, and horizon-uniform quantities.

#include <array>
#include <string>
#include <vector>

#include "fch/stepper.hpp"

namespace fch {

/// The eight left-hand-side terms of the summed energy inequality.
struct LedgerTerms {
  double mu_l2_accum{0};              // h/2 ‖μ^k‖²
  double mu_increment_accum{0};       // Σ h/2 ‖μ^{n+1} - μ^n‖²
  double Ar_mu_accum{0};              // Σ h ‖A^r μ^{n+1}‖²
  double tau_rate_accum{0};           // τ Σ h ‖(y^{n+1} - y^n)/h‖²
  double B_sigma_norm{0};             // ½ ‖B^σ y^k‖²
  double B_sigma_increment_accum{0};  // Σ ½ ‖B^σ (y^{n+1} - y^n)‖²
  double beta_pi_integral{0};         // ∫ β̂_λ(y^k) + π̂(y^k)
  double y_increment_accum{0};        // L'/2 Σ ‖y^{n+1} - y^n‖²

  static constexpr std::array<const char*, 8> names{
      "mu_l2_accum",  "mu_increment_accum",      "Ar_mu_accum",      "tau_rate_accum",
      "B_sigma_norm", "B_sigma_increment_accum", "beta_pi_integral", "y_increment_accum"};

  std::array<double, 8> values() const {
    return {mu_l2_accum,  mu_increment_accum,      Ar_mu_accum,      tau_rate_accum,
            B_sigma_norm, B_sigma_increment_accum, beta_pi_integral, y_increment_accum};
  }
  double sum() const;
  double max_abs() const;
};

/// Whether LedgerTerms::names[i] is a running sum (hence nondecreasing in k).
bool is_running_sum(std::size_t term);

struct EnergyLedgerEntry {
  int step{0};
  LedgerTerms lhs_terms;
  double rhs_bound{0};   // summation-by-parts right side plus initial energy
  double slack{0};       // rhs_bound - Σ lhs
  double scale{0};       // max |term|, floor 1e-12
  double data_bound{0};  // Cauchy–Schwarz majorant of rhs_bound
  double source_bound{0};      // ‖u(0)‖ + ‖∂ₜu‖_{L¹(0,kh;H)}
  double source_max_norm{0};   // max_{n≤k} ‖u^n‖
  double source_variation{0};  // Σ_{n=1}^{k-1} ‖u^{n+1} - u^n‖

  double relative_slack() const { return slack / scale; }
};

/// One step of the inequality before summation.
struct StepInequality {
  LedgerTerms increments;  // per-step contribution of each term
  double rhs{0};           // (u^{n+1}, y^{n+1} - y^n)
  double slack{0};
  double scale{0};
  /// min over nodes of (L'y⁺ + β_λ(y⁺) + π(y⁺))(y⁺ - y) - (F(y⁺) - F(y)),
  /// F(r) = L' r²/2 + β̂_λ(r) + π̂(r).
  double convexity_gap{0};
  double convexity_scale{0};
};

struct EnergyState {
  const Field& y;
  const Field& mu;
};

/// Evaluates the per-step inequality between two consecutive accepted steps.
/// Throws NumericalError("estimate_violation") if the slack is below
/// -tol_rel * scale.
StepInequality per_step_inequality(EnergyState prev, EnergyState next, const Field& u_next,
                                   const SchemeConfig& config, double tol_rel = 1e-8);

struct EnergyLedger {
  std::vector<EnergyLedgerEntry> entries;
  double min_relative_slack{0};
  double min_step_relative_slack{0};
  double min_convexity_relative_gap{0};
  double derivative_l1{0};  // ‖∂ₜu‖_{L¹(0,T;H)}
};

/// Summed inequality for k = 0..N together with the data-dependent bounds.
EnergyLedger gronwall_ledger(const DiscreteTrajectory& traj, const ProblemData& data,
                             const SchemeConfig& config);

struct DualNormReport {
  double identity_value{0};  // via ∂ₜŷ = μ̲ - μ̄ - A^{2r}μ̄
  double direct_value{0};    // via finite differences of y
  double embedding_constant{0};
  double mu_jump_l2{0};      // ‖μ̄ - μ̲‖_{L²(H)}
  double Ar_mu_l2{0};        // ‖A^r μ̄‖_{L²(H)}
  double bound{0};           // C_emb ‖μ̄ - μ̲‖ + ‖A^r μ̄‖
};

/// ‖∂ₜŷ_h‖ in L²(0,T; V_A^{-r}), computed twice, plus its triangle-inequality bound.
DualNormReport dual_norm_rate(const DiscreteTrajectory& traj, const SchemeConfig& config);

/// Interpolant quantities that stay bounded uniformly in T.
struct UniformReport {
  double mu_jump_l2{0};          // ‖μ̄ - μ̲‖_{L²H}
  double Ar_mu_bar_l2{0};        // ‖A^r μ̄‖_{L²H}
  double Ar_mu_under_l2{0};      // ‖A^r μ̲‖_{L²H}
  double sup_y_B_sigma{0};       // sup ‖ȳ‖_{B,σ}
  double B_sigma_jump{0};        // h^{-1/2} ‖B^σ(ȳ - y̲)‖_{L²H}
  double tau_rate{0};            // τ^{1/2} ‖∂ₜŷ‖_{L²H}
  double sup_energy_l1{0};       // sup ‖β̂_λ(ȳ) + π̂(ȳ)‖_{L¹}
  double y_hat_gap{0};           // h^{-1/2} ‖ȳ - ŷ‖_{L²H}
  double dual_rate{0};           // ‖∂ₜŷ‖_{L²(V_A^{-r})}

  static constexpr std::array<const char*, 9> names{
      "mu_jump_l2", "Ar_mu_bar_l2",  "Ar_mu_under_l2", "sup_y_B_sigma", "B_sigma_jump",
      "tau_rate",   "sup_energy_l1", "y_hat_gap",      "dual_rate"};
  std::array<double, 9> values() const {
    return {mu_jump_l2, Ar_mu_bar_l2,  Ar_mu_under_l2, sup_y_B_sigma, B_sigma_jump,
            tau_rate,   sup_energy_l1, y_hat_gap,      dual_rate};
  }
};

UniformReport uniform_report(const DiscreteTrajectory& traj, const SchemeConfig& config);

/// |v_last - v_prev| / max(|v_last|, floor): the relative final increment of
/// a quantity observed at successive horizons.
double plateau_ratio(double previous, double last, double floor = 1e-12);

}  // namespace fch
