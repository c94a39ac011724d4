#include "fch/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "fch/errors.hpp"

namespace fch {

namespace {

double xlogx(double x) { return x > 0 ? x * std::log(x) : 0.0; }

double param(const PotentialParams& params, const std::string& key) {
  auto it = params.find(key);
  if (it == params.end())
    throw ConfigError("missing potential parameter '" + key + "'", "potential_param");
  return it->second;
}

void allow_only(const PotentialParams& params, std::initializer_list<const char*> keys,
                const char* kind) {
  for (const auto& [k, v] : params) {
    bool known = false;
    for (const char* key : keys) known = known || k == key;
    if (!known)
      throw ConfigError(std::string("unknown parameter '") + k + "' for potential " + kind,
                        "potential_param");
  }
}

// J + λ J³ = s. Cardano for the depressed cubic, then two Newton polishes.
double regular_resolvent(double s, double lambda) {
  const double p = 1.0 / lambda;
  const double q = -s / lambda;
  const double disc = std::sqrt(q * q / 4.0 + p * p * p / 27.0);
  double j = std::cbrt(-q / 2.0 + disc) + std::cbrt(-q / 2.0 - disc);
  for (int k = 0; k < 2; ++k) j -= (j + lambda * j * j * j - s) / (1.0 + 3.0 * lambda * j * j);
  return j;
}

// tanh(w) + 2λw = s, with J = tanh(w) and β(J) = 2w. Newton safeguarded by
// bisection on the bracket [(s-1)/2λ, (s+1)/2λ], which keeps J in (-1, 1).
double log_resolvent(double s, double lambda) {
  double lo = (s - 1.0) / (2.0 * lambda);
  double hi = (s + 1.0) / (2.0 * lambda);
  double w = std::clamp(s / (1.0 + 2.0 * lambda), lo, hi);
  const double tol = 1e-12 * std::max(1.0, std::abs(s));
  double residual = 0;
  for (int it = 0; it < 100; ++it) {
    residual = std::tanh(w) + 2.0 * lambda * w - s;
    if (std::abs(residual) <= tol) {
      // β_λ = (s - J)/λ amplifies the error in J by 1/λ: polish to round-off.
      for (int k = 0; k < 2; ++k) {
        const double sech = 1.0 / std::cosh(w);
        w -= (std::tanh(w) + 2.0 * lambda * w - s) / (sech * sech + 2.0 * lambda);
      }
      return std::tanh(w);
    }
    if (residual > 0) hi = w; else lo = w;
    const double sech = 1.0 / std::cosh(w);
    double next = w - residual / (sech * sech + 2.0 * lambda);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == w) return std::tanh(w);
    w = next;
  }
  std::ostringstream msg;
  msg << "logarithmic resolvent did not converge: s=" << s << " lambda=" << lambda
      << " residual=" << residual << " bracket=[" << lo << ", " << hi << "]";
  throw NumericalError(msg.str(), "resolvent");
}

// Bisection on J for s ∈ J + λβ(J) with an interval-valued β.
double generic_resolvent(const PotentialSpec& spec, double s, double lambda) {
  const auto& dom = spec.graph_domain;
  // Classify J: -1 too small, +1 too large, 0 solves.
  auto side = [&](double j) -> int {
    if (!dom.contains(j)) return j <= dom.lower ? -1 : 1;
    const Interval b = spec.beta(j);
    if (j + lambda * b.lo > s) return 1;
    if (j + lambda * b.hi < s) return -1;
    return 0;
  };
  double lo = std::isfinite(dom.lower) ? dom.lower : std::min(s, 0.0) - 1.0;
  double hi = std::isfinite(dom.upper) ? dom.upper : std::max(s, 0.0) + 1.0;
  if (dom.contains(lo) && side(lo) == 0) return lo;
  if (dom.contains(hi) && side(hi) == 0) return hi;
  for (int k = 0; k < 200 && !std::isfinite(dom.lower) && side(lo) >= 0; ++k) lo = 2 * lo - 1;
  for (int k = 0; k < 200 && !std::isfinite(dom.upper) && side(hi) <= 0; ++k) hi = 2 * hi + 1;
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const int sgn = side(mid);
    if (sgn == 0) return mid;
    if (sgn > 0) hi = mid; else lo = mid;
  }
  // Converged to a point of the closure of D(β).
  const double j = 0.5 * (lo + hi);
  if (dom.contains(j)) return j;
  return std::clamp(j, dom.lower, dom.upper);
}

std::vector<double> alpha_ladder() {
  std::vector<double> ladder{8.0, 4.0, 2.0};
  for (int k = 1; k <= 20; ++k) ladder.push_back(1.0 / k);
  for (int k = 5; k <= 30; ++k) ladder.push_back(std::ldexp(1.0, -k));
  std::sort(ladder.begin(), ladder.end(), std::greater<>());
  ladder.erase(std::unique(ladder.begin(), ladder.end()), ladder.end());
  return ladder;
}

}  // namespace

const char* to_string(PotentialKind kind) {
  switch (kind) {
    case PotentialKind::Regular: return "regular";
    case PotentialKind::Logarithmic: return "logarithmic";
    case PotentialKind::Obstacle: return "obstacle";
    case PotentialKind::ExampleBest: return "example_best";
    case PotentialKind::Custom: return "custom";
  }
  return "unknown";
}

PotentialKind parse_potential_kind(const std::string& name) {
  if (name == "regular") return PotentialKind::Regular;
  if (name == "logarithmic") return PotentialKind::Logarithmic;
  if (name == "obstacle") return PotentialKind::Obstacle;
  if (name == "example_best") return PotentialKind::ExampleBest;
  if (name == "custom") return PotentialKind::Custom;
  throw ConfigError("unknown potential '" + name + "'", "potential_name");
}

PotentialSpec make_potential(const std::string& name, const PotentialParams& params) {
  return make_potential(parse_potential_kind(name), params);
}

PotentialSpec make_potential(PotentialKind kind, const PotentialParams& params) {
  PotentialSpec spec;
  spec.kind = kind;
  spec.params = params;
  switch (kind) {
    case PotentialKind::Regular: {
      allow_only(params, {}, "regular");
      spec.hat_domain = spec.graph_domain = EffectiveDomain::real_line();
      spec.beta_hat = [](double r) { return 0.25 * r * r * r * r; };
      spec.beta = [](double r) { return Interval::point(r * r * r); };
      spec.beta_prime = [](double r) { return 3.0 * r * r; };
      spec.pi_hat = [](double r) { return 0.25 * (1.0 - 2.0 * r * r); };
      spec.pi = [](double r) { return -r; };
      spec.pi_prime = [](double) { return -1.0; };
      spec.lipschitz_pi = 1.0;
      spec.closed_resolvent = regular_resolvent;
      spec.smooth_graph = true;
      break;
    }
    case PotentialKind::Logarithmic: {
      allow_only(params, {"c1"}, "logarithmic");
      const double c1 = param(params, "c1");
      if (!(c1 > 1.0)) throw ConfigError("logarithmic potential needs c1 > 1", "potential_param");
      spec.hat_domain = {-1.0, 1.0, true, true};
      spec.graph_domain = {-1.0, 1.0, false, false};
      spec.beta_hat = [](double r) {
        if (r < -1.0 || r > 1.0) return kInf;
        return xlogx(1.0 + r) + xlogx(1.0 - r);
      };
      spec.beta = [](double r) {
        if (!(r > -1.0 && r < 1.0))
          throw DomainError("logarithmic graph is defined on (-1, 1) only");
        return Interval::point(std::log1p(r) - std::log1p(-r));
      };
      spec.beta_prime = [](double r) {
        return (r > -1.0 && r < 1.0) ? 2.0 / ((1.0 - r) * (1.0 + r)) : kInf;
      };
      spec.pi_hat = [c1](double r) { return -c1 * r * r; };
      spec.pi = [c1](double r) { return -2.0 * c1 * r; };
      spec.pi_prime = [c1](double) { return -2.0 * c1; };
      spec.lipschitz_pi = 2.0 * c1;
      spec.closed_resolvent = log_resolvent;
      spec.smooth_graph = true;
      break;
    }
    case PotentialKind::Obstacle: {
      allow_only(params, {"c2"}, "obstacle");
      const double c2 = param(params, "c2");
      if (!(c2 > 0.0)) throw ConfigError("obstacle potential needs c2 > 0", "potential_param");
      spec.hat_domain = spec.graph_domain = {-1.0, 1.0, true, true};
      spec.beta_hat = [](double r) { return (r >= -1.0 && r <= 1.0) ? 0.0 : kInf; };
      spec.beta = [](double r) {
        if (r < -1.0 || r > 1.0) throw DomainError("obstacle graph is defined on [-1, 1] only");
        if (r == 1.0) return Interval{0.0, kInf};
        if (r == -1.0) return Interval{-kInf, 0.0};
        return Interval::point(0.0);
      };
      spec.beta_prime = [](double r) { return (r > -1.0 && r < 1.0) ? 0.0 : kInf; };
      spec.pi_hat = [c2](double r) { return -c2 * r * r; };
      spec.pi = [c2](double r) { return -2.0 * c2 * r; };
      spec.pi_prime = [c2](double) { return -2.0 * c2; };
      spec.lipschitz_pi = 2.0 * c2;
      spec.closed_resolvent = [](double s, double) { return std::clamp(s, -1.0, 1.0); };
      break;
    }
    case PotentialKind::ExampleBest: {
      allow_only(params, {}, "example_best");
      spec.hat_domain = spec.graph_domain = EffectiveDomain::real_line();
      spec.beta_hat = [](double r) { return r * r + std::abs(r); };
      spec.beta = [](double r) {
        if (r > 0) return Interval::point(2.0 * r + 1.0);
        if (r < 0) return Interval::point(2.0 * r - 1.0);
        return Interval{-1.0, 1.0};
      };
      spec.beta_prime = [](double r) { return r == 0.0 ? kInf : 2.0; };
      spec.pi_hat = [](double) { return 0.0; };
      spec.pi = [](double) { return 0.0; };
      spec.pi_prime = [](double) { return 0.0; };
      spec.lipschitz_pi = 0.0;
      spec.closed_resolvent = [](double s, double lambda) {
        if (std::abs(s) <= lambda) return 0.0;
        return (s - std::copysign(lambda, s)) / (1.0 + 2.0 * lambda);
      };
      break;
    }
    case PotentialKind::Custom:
      throw ConfigError("custom potentials are built with make_custom_potential",
                        "potential_name");
  }
  return spec;
}

PotentialSpec make_custom_potential(CustomPotential parts, std::uint64_t seed) {
  PotentialSpec spec;
  spec.kind = PotentialKind::Custom;
  spec.hat_domain = parts.hat_domain;
  spec.graph_domain = parts.graph_domain;
  spec.beta_hat = std::move(parts.beta_hat);
  spec.beta = std::move(parts.beta);
  spec.pi_hat = std::move(parts.pi_hat);
  spec.pi = std::move(parts.pi);
  spec.lipschitz_pi = parts.lipschitz_pi;
  spec.smooth_graph = parts.smooth_graph;
  if (!spec.beta_hat || !spec.beta || !spec.pi_hat || !spec.pi)
    throw ConfigError("custom potential is missing a component", "potential_param");
  if (!(spec.lipschitz_pi >= 0))
    throw ConfigError("Lipschitz constant of pi must be nonnegative", "potential_param");
  check_potential_invariants(spec, seed);
  return spec;
}

void check_potential_invariants(const PotentialSpec& spec, std::uint64_t seed, int samples) {
  if (std::abs(spec.beta_hat(0.0)) > 1e-14)
    throw HypothesisError("beta_hat_origin", "beta_hat(0) must vanish");

  std::mt19937_64 rng(seed);
  const double R = 10.0;
  auto clip = [](const EffectiveDomain& d, double R) {
    return std::pair{std::max(d.lower, -R), std::min(d.upper, R)};
  };
  const auto [hl, hh] = clip(spec.hat_domain, R);
  const auto [gl, gh] = clip(spec.graph_domain, R);
  std::uniform_real_distribution<double> hat_u(hl, hh), graph_u(gl, gh), line_u(-R, R);

  for (int k = 0; k < samples; ++k) {
    const double s = hat_u(rng);
    const double v = spec.beta_hat(s);
    if (!(v >= 0))
      throw HypothesisError("beta_hat_negative", "beta_hat takes a negative value");
  }
  for (int k = 0; k < samples; ++k) {
    double s = graph_u(rng), t = graph_u(rng);
    if (s > t) std::swap(s, t);
    if (!spec.graph_domain.contains(s) || !spec.graph_domain.contains(t) || s == t) continue;
    const Interval bs = spec.beta(s), bt = spec.beta(t);
    if (bs.hi > bt.lo + 1e-12 * (1.0 + std::abs(bt.lo)))
      throw HypothesisError("beta_not_monotone", "beta is not monotone");
  }
  for (int k = 0; k < samples; ++k) {
    const double s = line_u(rng), t = line_u(rng);
    const double lhs = std::abs(spec.pi(s) - spec.pi(t));
    if (lhs > spec.lipschitz_pi * std::abs(s - t) * (1.0 + 1e-12) + 1e-14)
      throw HypothesisError("pi_not_lipschitz", "pi violates its Lipschitz constant");
  }
  coercivity_scan([&](double s) { return spec.f(s); }, {-R, R}, 4001);
}

double pi_derivative(const PotentialSpec& spec, double s) {
  if (spec.pi_prime) return spec.pi_prime(s);
  constexpr double step = 1e-6;
  return (spec.pi(s + step) - spec.pi(s - step)) / (2.0 * step);
}

double graph_selection_residual(const PotentialSpec& spec, double y, double xi) {
  if (!spec.graph_domain.contains(y))
    throw DomainError("selection residual requested outside D(beta)");
  return spec.beta(y).distance(xi);
}

YosidaRegularization::YosidaRegularization(PotentialSpec spec, double lambda)
    : spec_(std::move(spec)), lambda_(lambda) {
  if (!(lambda_ > 0)) throw ConfigError("Yosida level must be positive", "yosida_lambda");
}

double resolvent(const YosidaRegularization& reg, double s) {
  const auto& spec = reg.spec();
  if (spec.closed_resolvent) return spec.closed_resolvent(s, reg.lambda());
  return generic_resolvent(spec, s, reg.lambda());
}

double yosida(const YosidaRegularization& reg, double s) {
  return (s - resolvent(reg, s)) / reg.lambda();
}

double yosida_primal(const YosidaRegularization& reg, double s) {
  const double j = resolvent(reg, s);
  const double d = s - j;
  return d * d / (2.0 * reg.lambda()) + reg.spec().beta_hat(j);
}

double yosida_derivative(const YosidaRegularization& reg, double s) {
  const auto& spec = reg.spec();
  if (!spec.beta_prime) {
    constexpr double step = 1e-6;
    return (yosida(reg, s + step) - yosida(reg, s - step)) / (2.0 * step);
  }
  const double b = spec.beta_prime(resolvent(reg, s));
  if (std::isinf(b)) return 1.0 / reg.lambda();
  return b / (1.0 + reg.lambda() * b);
}

CoercivityCertificate coercivity_scan(const std::function<double(double)>& g,
                                      std::pair<double, double> range, int grid) {
  const auto [a, b] = range;
  if (!(b > 0) || std::abs(a + b) > 1e-12 * b)
    throw PreconditionError("coercivity range must be symmetric around 0");
  if (grid < 1000) throw PreconditionError("coercivity scan needs at least 1000 grid points");

  std::vector<double> s(grid), gs(grid);
  double gmin = kInf;
  for (int i = 0; i < grid; ++i) {
    s[i] = a + (b - a) * i / (grid - 1);
    gs[i] = g(s[i]);
    gmin = std::min(gmin, gs[i]);
  }
  const double half = 0.5 * b;
  for (double alpha : alpha_ladder()) {
    double need_full = -kInf, need_inner = -kInf;
    for (int i = 0; i < grid; ++i) {
      if (std::isinf(gs[i]) && gs[i] > 0) continue;
      const double need = alpha * s[i] * s[i] - gs[i];
      need_full = std::max(need_full, need);
      if (std::abs(s[i]) <= half) need_inner = std::max(need_inner, need);
    }
    if (need_full <= need_inner + 1e-12 * (1.0 + std::abs(need_inner))) {
      CoercivityCertificate cert;
      cert.alpha = alpha;
      cert.C = std::max(0.0, need_full);
      cert.C_prime = std::max(0.0, -gmin);
      cert.scan_range = range;
      return cert;
    }
  }
  throw HypothesisError("coercivity",
                        "no quadratic lower bound found: beta_hat + pi_hat is not coercive "
                        "on the scanned range");
}

CoercivityCertificate coercivity_check(const PotentialSpec& spec,
                                       const std::vector<double>& lambdas,
                                       std::pair<double, double> range, int grid) {
  if (lambdas.empty()) throw PreconditionError("coercivity check needs at least one level");
  std::vector<YosidaRegularization> regs;
  regs.reserve(lambdas.size());
  for (double l : lambdas) regs.emplace_back(spec, l);
  auto g = [&](double s) {
    double m = kInf;
    for (const auto& reg : regs) m = std::min(m, yosida_primal(reg, s));
    return m + spec.pi_hat(s);
  };
  CoercivityCertificate cert = coercivity_scan(g, range, grid);
  cert.lambda_max = *std::max_element(lambdas.begin(), lambdas.end());
  return cert;
}

YosidaOracleReport yosida_grid_oracle(const PotentialSpec& spec, double lambda, int samples,
                                      int points, std::uint64_t seed) {
  if (points < 2 || samples < 1) throw PreconditionError("oracle needs samples and 2+ grid points");
  const YosidaRegularization reg(spec, lambda);
  const double R = spec.hat_domain.bounded() ? 1.0 : 3.0;
  const double dr = 2.0 * R / (points - 1);
  std::vector<double> table(points);
  for (int i = 0; i < points; ++i) table[i] = spec.beta_hat(-R + dr * i);

  YosidaOracleReport rep;
  rep.grid_spacing = dr;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-R, R);
  for (int k = 0; k < samples; ++k) {
    const double s = unif(rng);
    double arg = 0, best = kInf;
    for (int i = 0; i < points; ++i) {
      const double r = -R + dr * i;
      const double v = (s - r) * (s - r) / (2.0 * lambda) + table[i];
      if (v < best) {
        best = v;
        arg = r;
      }
    }
    const double j = resolvent(reg, s);
    const double b = (s - j) / lambda;
    rep.resolvent_error = std::max(rep.resolvent_error, std::abs(j - arg));
    rep.yosida_error = std::max(rep.yosida_error, std::abs(b - (s - arg) / lambda));
    rep.primal_error = std::max(rep.primal_error, std::abs(yosida_primal(reg, s) - best));
    rep.selection = std::max(rep.selection, graph_selection_residual(spec, j, b));
  }
  return rep;
}

}  // namespace fch
