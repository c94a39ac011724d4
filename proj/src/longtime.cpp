#include "fch/longtime.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "fch/errors.hpp"

namespace fch {

namespace {

int window_start_step(const DiscreteTrajectory& traj, double window_fraction) {
  if (!(window_fraction > 0 && window_fraction < 1))
    throw PreconditionError("window fraction must lie in (0, 1)");
  if (traj.ys.empty()) throw PreconditionError("empty trajectory");
  const int N = traj.steps();
  return std::clamp(static_cast<int>(std::ceil((1.0 - window_fraction) * N - 1e-9)), 0, N);
}

// Projects nodes within `tol` of the closure of `dom` onto it.
Field project_onto(const Field& y, const EffectiveDomain& dom, double tol) {
  Field out = y;
  for (Index i = 0; i < y.size(); ++i) {
    const double v = y[i];
    if (v < dom.lower && v >= dom.lower - tol) out.values()(i) = dom.lower;
    if (v > dom.upper && v <= dom.upper + tol) out.values()(i) = dom.upper;
  }
  return out;
}

}  // namespace

const char* to_string(LongtimeBranch branch) {
  return branch == LongtimeBranch::Lambda1Zero ? "lambda1_zero" : "lambda1_positive";
}

MuTailStats mu_tail_stats(const DiscreteTrajectory& traj, const FractionalOperator& op_A,
                          double window_fraction) {
  const int start = window_start_step(traj, window_fraction);
  MuTailStats out;
  out.window_start = traj.time(start);
  for (int n = 0; n <= traj.steps(); ++n) {
    const double nm = norm(traj.mus[n]);
    if (n < start) {
      out.sup_norm_mu_head = std::max(out.sup_norm_mu_head, nm);
      continue;
    }
    out.sup_norm_mu = std::max(out.sup_norm_mu, nm);
    if (n >= 1) {
      const double a = power_norm(op_A, traj.mus[n]);
      out.integral_Ar_mu_sq += traj.h * a * a;
    }
    out.mean_mu_series.times.push_back(traj.time(n));
    out.mean_mu_series.values.push_back(mean(traj.mus[n]));
  }
  return out;
}

MuInfinity extract_mu_infinity(const DiscreteTrajectory& traj, const FractionalOperator& op_A,
                               double window_fraction) {
  if (!op_A.basis().zero_first_eigenvalue())
    throw HypothesisError("branch",
                          "mu_infinity is identically zero when the first eigenvalue is "
                          "positive; use mu_tail_stats");
  const int start = window_start_step(traj, window_fraction);
  MuInfinity out;
  double lo = kInf, hi = -kInf, total = 0;
  for (int n = start; n <= traj.steps(); ++n) {
    const Field& mu = traj.mus[n];
    const double m = mean(mu);
    out.series.times.push_back(traj.time(n));
    out.series.values.push_back(m);
    out.flatness = std::max(out.flatness, norm(mu - Field::constant(mu.grid_ptr(), m)));
    lo = std::min(lo, m);
    hi = std::max(hi, m);
    total += m;
  }
  out.average = total / static_cast<double>(out.series.values.size());
  out.spread = hi - lo;
  return out;
}

StationarityResidual stationarity_residual(const Field& y_in, double mu_inf, const Field& u_inf,
                                           const PotentialSpec& spec,
                                           const FractionalOperator& op_B, double domain_tol) {
  if (!y_in.same_grid(u_inf)) throw DimensionError("state and source on different grids");
  const Field y = project_onto(y_in, spec.graph_domain, domain_tol);
  for (Index i = 0; i < y.size(); ++i)
    if (!spec.graph_domain.contains(y[i]))
      throw DomainError("stationarity residual: state leaves the domain of beta");

  const Field by = apply_power(op_B, y, 2.0);
  Field viol = Field::zeros(y.grid_ptr());
  Field pi = viol, sel = viol;
  for (Index i = 0; i < y.size(); ++i) {
    pi.values()(i) = spec.pi(y[i]);
    const double r = mu_inf + u_inf[i] - by[i] - pi[i];
    const Interval b = spec.beta(y[i]);
    viol.values()(i) = b.distance(r);
    sel.values()(i) = std::clamp(r, b.lo, b.hi);
  }
  StationarityResidual out;
  out.residual = norm(viol);
  const double mu_norm = std::abs(mu_inf) * std::sqrt(y.grid().length);
  out.scale = std::max(norm(by) + norm(pi) + mu_norm + norm(u_inf) + norm(sel), 1e-12);
  return out;
}

double variational_gap(const Field& y_in, double mu_inf, const Field& u_inf,
                       const PotentialSpec& spec, const FractionalOperator& op_B, int samples,
                       std::uint64_t seed, double domain_tol) {
  const Field y = project_onto(y_in, spec.hat_domain, domain_tol);
  const auto& w = y.grid().weights;
  auto integral_beta_hat = [&](const Field& v) {
    double s = 0;
    for (Index i = 0; i < v.size(); ++i) s += w(i) * spec.beta_hat(v[i]);
    return s;
  };
  Field drive = Field::zeros(y.grid_ptr());
  for (Index i = 0; i < y.size(); ++i) drive.values()(i) = spec.pi(y[i]) - u_inf[i] - mu_inf;
  const Field by = apply_power(op_B, y, 2.0);
  const double beta_y = integral_beta_hat(y);

  const double lo = std::max(-1.0, spec.hat_domain.lower);
  const double hi = std::min(1.0, spec.hat_domain.upper);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(lo, hi);
  double worst = -kInf;
  for (int k = 0; k < samples; ++k) {
    Field v = Field::zeros(y.grid_ptr());
    for (Index i = 0; i < v.size(); ++i) v.values()(i) = unif(rng);
    const Field d = y - v;
    const double gap = inner(by, d) + beta_y + inner(drive, d) - integral_beta_hat(v);
    worst = std::max(worst, gap);
  }
  return worst;
}

std::vector<double> log_spaced_probe_times(const DiscreteTrajectory& traj, int count) {
  if (count < 1) throw PreconditionError("probe count must be positive");
  std::vector<double> out;
  const int N = traj.steps();
  int last = -1;
  for (int i = 0; i < count; ++i) {
    const double frac = std::ldexp(1.0, -(count - 1 - i));
    const int n = static_cast<int>(std::lround(frac * N));
    if (n <= 0 || n == last) continue;
    out.push_back(traj.time(n));
    last = n;
  }
  return out;
}

OmegaLimitReport omega_probe(const DiscreteTrajectory& traj, const std::vector<double>& times,
                             const SchemeConfig& config, const Field& u_inf,
                             const ProbeOptions& options) {
  if (times.size() < 2)
    throw ConfigError("omega-limit probe needs at least two snapshot times", "insufficient_data");
  OmegaLimitReport rep;
  for (double t : times) {
    const double s = t / traj.h;
    const int n = static_cast<int>(std::lround(s));
    if (std::abs(s - n) > 1e-9 * std::max(1.0, s) || n < 0 || n > traj.steps())
      throw RangeError("probe time is not a stored step");
    if (!rep.probe_steps.empty() && n <= rep.probe_steps.back())
      throw RangeError("probe times must be strictly increasing");
    rep.probe_steps.push_back(n);
    rep.probe_times.push_back(traj.time(n));
  }
  const std::size_t m = rep.probe_steps.size();
  rep.cauchy_gaps.assign(m, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < m; ++i) {
    const Field& yi = traj.ys[rep.probe_steps[i]];
    rep.b_sigma_bound = std::max(rep.b_sigma_bound, power_norm(config.op_B, yi));
    for (std::size_t j = 0; j < i; ++j) {
      const double g = norm(yi - traj.ys[rep.probe_steps[j]]);
      rep.cauchy_gaps[i][j] = rep.cauchy_gaps[j][i] = g;
    }
  }
  rep.candidate = traj.ys[rep.probe_steps.back()];
  const auto& A = config.op_A.basis();
  rep.density_assumed = A.kind() == BasisKind::Matrix ||
                        config.op_B.basis().kind() == BasisKind::Matrix;
  if (A.zero_first_eigenvalue()) {
    rep.branch = LongtimeBranch::Lambda1Zero;
    rep.mu_infinity = extract_mu_infinity(traj, config.op_A, options.window_fraction);
    rep.mu_inf_used = rep.mu_infinity->average;
  } else {
    rep.branch = LongtimeBranch::Lambda1Positive;
    rep.mu_inf_used = 0.0;
  }
  rep.stationarity = stationarity_residual(rep.candidate, rep.mu_inf_used, u_inf, config.spec,
                                           config.op_B, options.domain_tol);
  rep.initial_stationarity = stationarity_residual(traj.ys.front(), rep.mu_inf_used, u_inf,
                                                   config.spec, config.op_B, options.domain_tol);
  return rep;
}

ExampleBestReport example_best_check(const std::function<double(double)>& mu_bar,
                                     const std::vector<double>& sample_times,
                                     const FractionalOperator& op_A,
                                     const FractionalOperator& op_B) {
  const auto& A = op_A.basis();
  if (!A.zero_first_eigenvalue() || !A.first_mode_constant())
    throw HypothesisError("branch",
                          "the nonuniqueness example needs a zero first eigenvalue with a "
                          "constant eigenvector");
  if (!(A.grid() == op_B.basis().grid()))
    throw ConfigError("operators A and B are built on different grids", "grid_mismatch");
  const PotentialSpec spec = make_potential(PotentialKind::ExampleBest);
  const GridPtr grid = A.grid_ptr();
  const Field y = Field::zeros(grid);
  const Field u = Field::zeros(grid);

  ExampleBestReport rep;
  for (double t : sample_times) {
    const double m = mu_bar(t);
    if (!(std::abs(m) <= 1.0)) {
      std::ostringstream msg;
      msg << "mu_bar(" << t << ") = " << m << " is not in [-1, 1] = beta(0)";
      throw HypothesisError("admissibility", msg.str());
    }
    const Field mu = Field::constant(grid, m);
    ExampleBestSample s;
    s.t = t;
    s.mu_bar = m;
    // ∂ₜy = 0, so the first equation reduces to A^{2r} μ = 0.
    s.first_equation = norm(apply_power(op_A, mu, 2.0));
    s.selection = graph_selection_residual(spec, 0.0, m);
    const Field xi = Field::constant(grid, m);
    Field lhs = apply_power(op_B, y, 2.0) + xi;
    for (Index i = 0; i < lhs.size(); ++i) lhs.values()(i) += spec.pi(y[i]);
    s.second_equation = norm(lhs - mu - u);
    rep.max_violation = std::max({rep.max_violation, s.first_equation, s.selection,
                                  s.second_equation});
    rep.samples.push_back(s);
  }
  return rep;
}

RangeCertificate range_certificate(const DiscreteTrajectory& traj, const PotentialSpec& spec,
                                   double yosida_lambda,
                                   std::optional<std::pair<double, double>> interval) {
  RangeCertificate c;
  c.yosida_lambda = yosida_lambda;
  c.y_min = kInf;
  c.y_max = -kInf;
  for (const Field& y : traj.ys) {
    c.y_min = std::min(c.y_min, y.values().minCoeff());
    c.y_max = std::max(c.y_max, y.values().maxCoeff());
  }
  if (interval) {
    c.a = interval->first;
    c.b = interval->second;
    if (c.a > c.b) throw ConfigError("range interval has a > b", "range");
  } else {
    c.a = spec.graph_domain.lower;
    c.b = spec.graph_domain.upper;
    c.closed_a = spec.graph_domain.lower_closed;
    c.closed_b = spec.graph_domain.upper_closed;
  }
  const bool above = c.closed_a ? c.y_min >= c.a : c.y_min > c.a;
  const bool below = c.closed_b ? c.y_max <= c.b : c.y_max < c.b;
  c.contained = above && below;
  c.overshoot = std::max({0.0, c.a - c.y_min, c.y_max - c.b});
  return c;
}

}  // namespace fch
