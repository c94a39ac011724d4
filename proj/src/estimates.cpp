#include "fch/estimates.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fch/errors.hpp"

namespace fch {

namespace {

double energy_integral(const Field& y, const YosidaRegularization& reg) {
  const auto& w = y.grid().weights;
  double total = 0;
  for (Index i = 0; i < y.size(); ++i)
    total += w(i) * (yosida_primal(reg, y[i]) + reg.spec().pi_hat(y[i]));
  return total;
}

double energy_l1(const Field& y, const YosidaRegularization& reg) {
  const auto& w = y.grid().weights;
  double total = 0;
  for (Index i = 0; i < y.size(); ++i)
    total += w(i) * std::abs(yosida_primal(reg, y[i]) + reg.spec().pi_hat(y[i]));
  return total;
}

double initial_energy(const Field& y, const PotentialSpec& spec) {
  const auto& w = y.grid().weights;
  double total = 0;
  for (Index i = 0; i < y.size(); ++i) total += w(i) * spec.f(y[i]);
  return total;
}

double sq(double x) { return x * x; }

}  // namespace

double LedgerTerms::sum() const {
  double s = 0;
  for (double v : values()) s += v;
  return s;
}

double LedgerTerms::max_abs() const {
  double m = 0;
  for (double v : values()) m = std::max(m, std::abs(v));
  return m;
}

bool is_running_sum(std::size_t term) {
  // mu_l2_accum, B_sigma_norm and beta_pi_integral are state terms.
  return term != 0 && term != 4 && term != 6;
}

StepInequality per_step_inequality(EnergyState prev, EnergyState next, const Field& u_next,
                                   const SchemeConfig& config, double tol_rel) {
  const YosidaRegularization reg(config.spec, config.yosida_lambda);
  const double h = config.h;
  const double lp = config.spec.lipschitz_pi_shifted();
  const Field dy = next.y - prev.y;
  const Field dmu = next.mu - prev.mu;

  StepInequality out;
  auto& t = out.increments;
  t.mu_l2_accum = 0.5 * h * (sq(norm(next.mu)) - sq(norm(prev.mu)));
  t.mu_increment_accum = 0.5 * h * sq(norm(dmu));
  t.Ar_mu_accum = h * sq(power_norm(config.op_A, next.mu));
  t.tau_rate_accum = config.tau / h * sq(norm(dy));
  t.B_sigma_norm = 0.5 * (sq(power_norm(config.op_B, next.y)) - sq(power_norm(config.op_B, prev.y)));
  t.B_sigma_increment_accum = 0.5 * sq(power_norm(config.op_B, dy));
  t.beta_pi_integral = energy_integral(next.y, reg) - energy_integral(prev.y, reg);
  t.y_increment_accum = 0.5 * lp * sq(norm(dy));
  out.rhs = inner(u_next, dy);
  out.slack = out.rhs - t.sum();
  out.scale = std::max({t.max_abs(), std::abs(out.rhs), 1e-12});

  // Pointwise convexity of F(r) = L' r²/2 + β̂_λ(r) + π̂(r).
  const auto& spec = config.spec;
  auto F = [&](double r) { return 0.5 * lp * r * r + yosida_primal(reg, r) + spec.pi_hat(r); };
  double gap = kInf, gscale = 1e-12;
  for (Index i = 0; i < dy.size(); ++i) {
    const double a = prev.y[i], b = next.y[i];
    const double lhs = (lp * b + yosida(reg, b) + spec.pi(b)) * (b - a);
    const double rhs = F(b) - F(a);
    gap = std::min(gap, lhs - rhs);
    gscale = std::max({gscale, std::abs(lhs), std::abs(rhs)});
  }
  out.convexity_gap = dy.size() ? gap : 0.0;
  out.convexity_scale = gscale;

  if (out.slack < -tol_rel * out.scale) {
    std::ostringstream msg;
    msg << "per-step energy inequality violated: slack " << out.slack << " at scale "
        << out.scale;
    throw NumericalError(msg.str(), "estimate_violation");
  }
  return out;
}

EnergyLedger gronwall_ledger(const DiscreteTrajectory& traj, const ProblemData& data,
                             const SchemeConfig& config) {
  const YosidaRegularization reg(config.spec, config.yosida_lambda);
  const double h = traj.h;
  const int N = traj.steps();
  const Field& y0 = traj.ys.front();

  std::vector<Field> u;
  u.reserve(N + 1);
  for (int n = 0; n <= N; ++n) u.push_back(data.source.at(n * h));

  const double initial = 0.5 * sq(power_norm(config.op_B, y0)) + initial_energy(y0, config.spec);
  const double u0 = norm(data.source.at(0.0));

  EnergyLedger ledger;
  ledger.entries.reserve(N + 1);
  ledger.min_relative_slack = kInf;
  ledger.min_step_relative_slack = kInf;
  ledger.min_convexity_relative_gap = kInf;
  ledger.derivative_l1 = data.source.derivative_l1_norm(traj.T());

  LedgerTerms acc;
  double sbp = 0;        // Σ_{n=1}^{k-1} (u^{n+1} - u^n, y^n)
  double sbp_major = 0;  // Σ_{n=1}^{k-1} ‖u^{n+1} - u^n‖ ‖y^n‖
  double variation = 0;
  double umax = norm(u[0]);
  for (int k = 0; k <= N; ++k) {
    if (k >= 1) {
      const StepInequality s =
          per_step_inequality({traj.ys[k - 1], traj.mus[k - 1]}, {traj.ys[k], traj.mus[k]},
                              u[k], config, kInf);
      const auto& d = s.increments;
      acc.mu_increment_accum += d.mu_increment_accum;
      acc.Ar_mu_accum += d.Ar_mu_accum;
      acc.tau_rate_accum += d.tau_rate_accum;
      acc.B_sigma_increment_accum += d.B_sigma_increment_accum;
      acc.y_increment_accum += d.y_increment_accum;
      ledger.min_step_relative_slack = std::min(ledger.min_step_relative_slack, s.slack / s.scale);
      ledger.min_convexity_relative_gap =
          std::min(ledger.min_convexity_relative_gap, s.convexity_gap / s.convexity_scale);
      umax = std::max(umax, norm(u[k]));
    }
    if (k >= 2) {
      const Field du = u[k] - u[k - 1];
      sbp += inner(du, traj.ys[k - 1]);
      sbp_major += norm(du) * norm(traj.ys[k - 1]);
      variation += norm(du);
    }
    acc.mu_l2_accum = 0.5 * h * sq(norm(traj.mus[k]));
    acc.B_sigma_norm = 0.5 * sq(power_norm(config.op_B, traj.ys[k]));
    acc.beta_pi_integral = energy_integral(traj.ys[k], reg);

    EnergyLedgerEntry e;
    e.step = k;
    e.lhs_terms = acc;
    double source_part = 0, source_major = 0;
    if (k >= 1) {
      source_part = inner(u[k], traj.ys[k]) - inner(u[1], y0) - sbp;
      source_major = norm(u[k]) * norm(traj.ys[k]) + norm(u[1]) * norm(y0) + sbp_major;
    }
    e.rhs_bound = source_part + initial;
    e.data_bound = source_major + initial;
    e.slack = e.rhs_bound - acc.sum();
    e.scale = std::max({acc.max_abs(), std::abs(e.rhs_bound), std::abs(initial), 1e-12});
    e.source_bound = u0 + data.source.derivative_l1_norm(k * h);
    e.source_max_norm = umax;
    e.source_variation = variation;
    ledger.min_relative_slack = std::min(ledger.min_relative_slack, e.relative_slack());
    ledger.entries.push_back(e);
  }
  if (N == 0) {
    ledger.min_step_relative_slack = 0;
    ledger.min_convexity_relative_gap = 0;
  }
  return ledger;
}

DualNormReport dual_norm_rate(const DiscreteTrajectory& traj, const SchemeConfig& config) {
  const auto& op = config.op_A;
  const auto& basis = op.basis();
  const double h = traj.h;
  const Vector a2 = op.symbol(2.0);

  DualNormReport out;
  double identity_sq = 0, direct_sq = 0, jump_sq = 0, ar_sq = 0;
  for (int n = 1; n <= traj.steps(); ++n) {
    const Vector cm_prev = basis.analyze(traj.mus[n - 1]);
    const Vector cm = basis.analyze(traj.mus[n]);
    const Vector via_identity = cm_prev - cm - a2.cwiseProduct(cm);
    const Vector via_difference = basis.analyze((1.0 / h) * (traj.ys[n] - traj.ys[n - 1]));
    identity_sq += h * sq(dual_fractional_norm(op, via_identity));
    direct_sq += h * sq(dual_fractional_norm(op, via_difference));
    jump_sq += h * sq(norm(traj.mus[n] - traj.mus[n - 1]));
    ar_sq += h * sq(power_norm(op, traj.mus[n]));
  }
  out.identity_value = std::sqrt(identity_sq);
  out.direct_value = std::sqrt(direct_sq);
  out.mu_jump_l2 = std::sqrt(jump_sq);
  out.Ar_mu_l2 = std::sqrt(ar_sq);
  // ‖v‖_* ≤ C ‖v‖ with C the largest dual weight; ‖A^{2r}μ‖_* = ‖A^r μ‖.
  double c = 0;
  for (Index j = 0; j < basis.size(); ++j) {
    const double w = (j == 0 && basis.zero_first_eigenvalue())
                         ? 1.0
                         : std::pow(basis.lambda(j), -op.exponent());
    c = std::max(c, w);
  }
  out.embedding_constant = c;
  out.bound = c * out.mu_jump_l2 + out.Ar_mu_l2;
  return out;
}

UniformReport uniform_report(const DiscreteTrajectory& traj, const SchemeConfig& config) {
  const YosidaRegularization reg(config.spec, config.yosida_lambda);
  const double h = traj.h;
  UniformReport r;
  double jump = 0, ar_bar = 0, ar_under = 0, bjump = 0, rate = 0, dy_sq = 0;
  for (int n = 0; n <= traj.steps(); ++n) {
    const double ny = norm(traj.ys[n]);
    const double by = power_norm(config.op_B, traj.ys[n]);
    r.sup_y_B_sigma = std::max(r.sup_y_B_sigma, std::sqrt(ny * ny + by * by));
    r.sup_energy_l1 = std::max(r.sup_energy_l1, energy_l1(traj.ys[n], reg));
    if (n == 0) continue;
    const Field dy = traj.ys[n] - traj.ys[n - 1];
    jump += h * sq(norm(traj.mus[n] - traj.mus[n - 1]));
    ar_bar += h * sq(power_norm(config.op_A, traj.mus[n]));
    ar_under += h * sq(power_norm(config.op_A, traj.mus[n - 1]));
    bjump += sq(power_norm(config.op_B, dy));
    rate += sq(norm(dy)) / h;
    dy_sq += sq(norm(dy));
  }
  r.mu_jump_l2 = std::sqrt(jump);
  r.Ar_mu_bar_l2 = std::sqrt(ar_bar);
  r.Ar_mu_under_l2 = std::sqrt(ar_under);
  r.B_sigma_jump = std::sqrt(bjump);
  r.tau_rate = std::sqrt(config.tau * rate);
  // ∫_{I_n} ((nh - t)/h)² dt = h/3.
  r.y_hat_gap = std::sqrt(dy_sq / 3.0);
  r.dual_rate = dual_norm_rate(traj, config).identity_value;
  return r;
}

double plateau_ratio(double previous, double last, double floor) {
  const double diff = std::abs(last - previous);
  if (diff <= floor) return 0.0;
  return diff / std::max(std::abs(last), floor);
}

}  // namespace fch
