#include "fch/stepper.hpp"

#include <cmath>
#include <sstream>

#include "fch/errors.hpp"

namespace fch {

namespace {

void require_grid(const Field& f, const GridPtr& grid, const char* what) {
  if (f.grid_ptr() != grid && !(f.grid() == *grid))
    throw DimensionError(std::string(what) + " is not sampled on the scheme grid");
}

}  // namespace

SourceTerm SourceTerm::constant(Field u_inf) {
  SourceTerm s;
  s.amplitude_ = Field::zeros(u_inf.grid_ptr());
  s.u_inf_ = std::move(u_inf);
  return s;
}

SourceTerm SourceTerm::decaying(Field u_inf, Field amplitude, double rate) {
  if (!(rate >= 0)) throw ConfigError("source decay rate must be nonnegative", "source");
  if (!u_inf.same_grid(amplitude)) throw DimensionError("source fields on different grids");
  SourceTerm s;
  s.u_inf_ = std::move(u_inf);
  s.amplitude_ = std::move(amplitude);
  s.rate_ = rate;
  return s;
}

SourceTerm SourceTerm::tabulated(Field u_inf, std::vector<double> times,
                                 std::vector<Field> values) {
  if (times.empty() || times.size() != values.size())
    throw ConfigError("source table needs matching nonempty times and values", "source");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (i > 0 && !(times[i] > times[i - 1]))
      throw ConfigError("source table times must increase", "source");
    if (!values[i].same_grid(u_inf)) throw DimensionError("source table field on another grid");
  }
  SourceTerm s = constant(std::move(u_inf));
  s.times_ = std::move(times);
  s.values_ = std::move(values);
  return s;
}

Field SourceTerm::at(double t) const {
  if (times_.empty()) {
    if (rate_ == 0) return u_inf_ + amplitude_;
    return u_inf_ + std::exp(-rate_ * t) * amplitude_;
  }
  if (t <= times_.front()) return values_.front();
  if (t >= times_.back()) return values_.back();
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - times_.begin());
  const double theta = (t - times_[i - 1]) / (times_[i] - times_[i - 1]);
  return (1.0 - theta) * values_[i - 1] + theta * values_[i];
}

double SourceTerm::derivative_l1_norm(double T) const {
  if (times_.empty()) return norm(amplitude_) * (rate_ == 0 ? 0.0 : 1.0 - std::exp(-rate_ * T));
  double total = 0;
  for (std::size_t i = 1; i < times_.size(); ++i) {
    const double a = std::max(times_[i - 1], 0.0), b = std::min(times_[i], T);
    if (b <= a) continue;
    total += norm(values_[i] - values_[i - 1]) * (b - a) / (times_[i] - times_[i - 1]);
  }
  return total;
}

ValidationReport validate(const SchemeConfig& config, const ProblemData& data) {
  ValidationReport report;
  if (!(config.tau >= 0.0 && config.tau <= 1.0))
    throw HypothesisError("tau_range", "tau must lie in [0, 1]");
  report.checks.push_back("tau_range");
  if (!(config.h > 0)) throw ConfigError("step size must be positive", "step_size");
  if (config.N < 0) throw ConfigError("step count must be nonnegative", "step_count");
  if (!(config.yosida_lambda > 0)) throw ConfigError("Yosida level must be positive", "yosida_lambda");
  if (!(config.newton_tol > 0) || config.newton_max < 1)
    throw ConfigError("Newton tolerance and budget must be positive", "newton");

  const auto& A = config.op_A.basis();
  const auto& B = config.op_B.basis();
  if (!(A.grid() == B.grid()))
    throw ConfigError("operators A and B are built on different grids", "grid_mismatch");
  require_grid(data.y0, A.grid_ptr(), "initial datum");
  require_grid(data.source.u_infinity(), A.grid_ptr(), "source");

  report.lambda1_zero = A.zero_first_eigenvalue();
  report.m0 = mean(data.y0);
  if (report.lambda1_zero) {
    if (A.size() < 2 || !(A.lambda(1) > 0) || !A.first_mode_constant())
      throw HypothesisError("simple_kernel",
                            "first eigenvalue of A is zero but it is not simple with a "
                            "constant eigenvector");
    report.checks.push_back("simple_kernel");
    const Field one = Field::constant(B.grid_ptr(), 1.0);
    if (B.span_defect(one) > 1e-10 * norm(one))
      throw HypothesisError("constants_not_in_B",
                            "constant functions are not in the span of B's modes");
    report.checks.push_back("constants_in_B");
  }

  const auto& spec = config.spec;
  for (Index i = 0; i < data.y0.size(); ++i) {
    if (!std::isfinite(spec.beta_hat(data.y0[i])))
      throw HypothesisError("initial_energy",
                            "initial datum leaves the closure of D(beta_hat)");
  }
  report.checks.push_back("initial_energy");
  if (report.lambda1_zero) {
    if (!spec.graph_domain.in_interior(report.m0)) {
      std::ostringstream msg;
      msg << "initial mean " << report.m0 << " is not in the interior of D(beta)";
      throw HypothesisError("mean_not_interior", msg.str());
    }
    report.checks.push_back("mean_interior");
  }
  return report;
}

Stepper::Stepper(const SchemeConfig& config)
    : config_(config), reg_(config.spec, config.yosida_lambda), grid_(config.op_A.basis().grid_ptr()) {
  const auto& A = config_.op_A.basis();
  const auto& B = config_.op_B.basis();
  if (!(A.grid() == B.grid()))
    throw ConfigError("operators A and B are built on different grids", "grid_mismatch");
  if (!(config_.h > 0)) throw ConfigError("step size must be positive", "step_size");
  const Vector a_sym = config_.op_A.symbol(2.0);
  a_power_ = A.nodal_multiplier(a_sym);
  b_power_ = B.nodal_multiplier(config_.op_B.symbol(2.0));
  const Vector shrink = a_sym.unaryExpr([](double l) { return 1.0 / (1.0 + l) - 1.0; });
  a_inverse_ = Matrix::Identity(grid_->size(), grid_->size()) + A.nodal_multiplier(shrink);
  a_norm_ = a_power_.cwiseAbs().rowwise().sum().maxCoeff();
  b_norm_ = b_power_.cwiseAbs().rowwise().sum().maxCoeff();
}

Vector Stepper::mu_from_y(const Vector& prev_y, const Vector& prev_mu, const Vector& y) const {
  return a_inverse_ * (prev_mu - (y - prev_y) / config_.h);
}

Vector Stepper::reduced_residual(const Vector& prev_y, const Vector& prev_mu, const Vector& u,
                                 const Vector& y, double* scale) const {
  const double lp = config_.spec.lipschitz_pi_shifted();
  const Vector by = b_power_ * y;
  const Vector mu = mu_from_y(prev_y, prev_mu, y);
  Vector nl(y.size());
  for (Index i = 0; i < y.size(); ++i) nl(i) = yosida(reg_, y(i)) + config_.spec.pi(y(i));
  const Vector rate = (config_.tau / config_.h + lp) * (y - prev_y);
  if (scale)
    *scale = std::max({1.0, rate.cwiseAbs().maxCoeff(), b_norm_ * y.cwiseAbs().maxCoeff(),
                       nl.cwiseAbs().maxCoeff(), mu.cwiseAbs().maxCoeff(),
                       u.cwiseAbs().maxCoeff()});
  return rate + by + nl - mu - u;
}

std::pair<Vector, Vector> Stepper::residuals(const Field& prev_y, const Field& prev_mu,
                                             const Field& u_next, const Field& y,
                                             const Field& mu) const {
  const double h = config_.h;
  const double lp = config_.spec.lipschitz_pi_shifted();
  const Vector dy = (y.values() - prev_y.values()) / h;
  const Vector amu = a_power_ * mu.values();
  Vector first = dy + mu.values() + amu - prev_mu.values();
  const double scale1 =
      std::max({1.0, dy.cwiseAbs().maxCoeff(), prev_mu.values().cwiseAbs().maxCoeff(),
                (1.0 + a_norm_) * mu.values().cwiseAbs().maxCoeff()});
  first /= scale1;
  Vector nl(y.size());
  for (Index i = 0; i < y.size(); ++i) nl(i) = yosida(reg_, y[i]) + config_.spec.pi(y[i]);
  const Vector by = b_power_ * y.values();
  Vector second = config_.tau * dy + lp * (y.values() - prev_y.values()) + by + nl -
                  mu.values() - u_next.values();
  const double scale2 = std::max(
      {1.0, config_.tau * dy.cwiseAbs().maxCoeff(), lp * y.values().cwiseAbs().maxCoeff(),
       lp * prev_y.values().cwiseAbs().maxCoeff(),
       b_norm_ * y.values().cwiseAbs().maxCoeff(),
       nl.cwiseAbs().maxCoeff(), mu.values().cwiseAbs().maxCoeff(),
       u_next.values().cwiseAbs().maxCoeff()});
  second /= scale2;
  return {std::move(first), std::move(second)};
}

StepResult Stepper::step(const Field& prev_y, const Field& prev_mu, const Field& u_next,
                         const std::optional<Field>& initial_guess) const {
  require_grid(prev_y, grid_, "previous state");
  require_grid(prev_mu, grid_, "previous chemical potential");
  require_grid(u_next, grid_, "source");
  const Vector& yn = prev_y.values();
  const Vector& mun = prev_mu.values();
  const Vector& u = u_next.values();
  const Index m = grid_->size();
  const double h = config_.h;
  const double lp = config_.spec.lipschitz_pi_shifted();

  Vector y = initial_guess ? initial_guess->values() : yn;
  if (y.size() != m) throw DimensionError("initial guess has wrong length");

  const Matrix linear = (config_.tau / h + lp) * Matrix::Identity(m, m) + b_power_ + a_inverse_ / h;

  StepResult result;
  double scale = 1.0;
  Vector r = reduced_residual(yn, mun, u, y, &scale);
  double rnorm = r.norm();
  result.residual_history.push_back(r.cwiseAbs().maxCoeff() / scale);
  int it = 0;
  while (r.cwiseAbs().maxCoeff() > config_.newton_tol * scale) {
    if (it == config_.newton_max) break;
    ++it;
    Matrix jac = linear;
    for (Index i = 0; i < m; ++i)
      jac(i, i) += yosida_derivative(reg_, y(i)) + pi_derivative(config_.spec, y(i));
    const Vector delta = jac.partialPivLu().solve(-r);
    double t = 1.0;
    Vector trial = y + delta;
    double trial_scale = 1.0;
    Vector rt = reduced_residual(yn, mun, u, trial, &trial_scale);
    int halvings = 0;
    while (!(rt.norm() < rnorm) && halvings < 30) {
      t *= 0.5;
      ++halvings;
      trial = y + t * delta;
      rt = reduced_residual(yn, mun, u, trial, &trial_scale);
    }
    if (!(rt.norm() < rnorm)) break;
    y = std::move(trial);
    r = std::move(rt);
    scale = trial_scale;
    rnorm = r.norm();
    result.residual_history.push_back(r.cwiseAbs().maxCoeff() / scale);
  }

  result.y = Field(grid_, y);
  result.mu = Field(grid_, mu_from_y(yn, mun, y));
  const auto [first, second] = residuals(prev_y, prev_mu, u_next, result.y, result.mu);
  result.stats.iterations = it;
  result.stats.residual_first = first.cwiseAbs().maxCoeff();
  result.stats.residual_second = second.cwiseAbs().maxCoeff();
  if (result.stats.residual_first > config_.newton_tol ||
      result.stats.residual_second > config_.newton_tol) {
    std::ostringstream msg;
    msg << "Newton did not converge after " << it << " iterations (residuals "
        << result.stats.residual_first << ", " << result.stats.residual_second
        << "); history:";
    for (double v : result.residual_history) msg << ' ' << v;
    msg << ". Try a smaller step size or a larger Yosida level.";
    throw NumericalError(msg.str(), "newton");
  }
  return result;
}

StepResult solve_step(const Field& prev_y, const Field& prev_mu, const Field& u_next,
                      const SchemeConfig& config, const std::optional<Field>& initial_guess) {
  return Stepper(config).step(prev_y, prev_mu, u_next, initial_guess);
}

DiscreteTrajectory run(const SchemeConfig& config, const ProblemData& data) {
  validate(config, data);
  const Stepper stepper(config);
  DiscreteTrajectory traj;
  traj.h = config.h;
  traj.ys.reserve(config.N + 1);
  traj.mus.reserve(config.N + 1);
  traj.stats.reserve(config.N);
  traj.ys.push_back(data.y0);
  traj.mus.push_back(Field::zeros(data.y0.grid_ptr()));
  for (int n = 0; n < config.N; ++n) {
    try {
      StepResult next = stepper.step(traj.ys.back(), traj.mus.back(),
                                     data.source.at((n + 1) * config.h));
      traj.ys.push_back(std::move(next.y));
      traj.mus.push_back(std::move(next.mu));
      traj.stats.push_back(next.stats);
    } catch (const NumericalError& e) {
      throw NumericalError("step " + std::to_string(n + 1) + ": " + e.what(), e.code());
    }
  }
  return traj;
}

Field interpolate(const std::vector<Field>& nodes, double h, InterpolantKind kind, double t) {
  if (nodes.empty()) throw PreconditionError("interpolation of an empty sequence");
  const int N = static_cast<int>(nodes.size()) - 1;
  const double T = h * N;
  const double eps = 1e-12 * std::max(1.0, T);
  if (t < -eps || t > T + eps) throw RangeError("interpolation time outside [0, T]");
  t = std::clamp(t, 0.0, T);
  const double s = t / h;
  const int nearest = static_cast<int>(std::lround(s));
  const bool on_node = std::abs(s - nearest) <= 1e-9;
  if (t == 0.0 || N == 0) return nodes.front();
  // Interval I_n = ((n-1)h, nh] containing t.
  const int n = on_node ? nearest : static_cast<int>(std::ceil(s));
  switch (kind) {
    case InterpolantKind::PiecewiseConstantRight: return nodes[n];
    case InterpolantKind::PiecewiseConstantLeft: return nodes[n - 1];
    case InterpolantKind::PiecewiseLinear: {
      if (on_node) return nodes[n];
      const double theta = s - (n - 1);
      return (1.0 - theta) * nodes[n - 1] + theta * nodes[n];
    }
  }
  return nodes[n];
}

Field interpolate(const DiscreteTrajectory& traj, Component which, InterpolantKind kind,
                  double t) {
  return interpolate(which == Component::Y ? traj.ys : traj.mus, traj.h, kind, t);
}

}  // namespace fch
