#include "fch/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <future>
#include <limits>
#include <sstream>

#include "fch/errors.hpp"
#include "fch/io.hpp"

namespace fch {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

json to_json(const StationarityResidual& s) {
  return {{"residual", s.residual}, {"scale", s.scale}, {"relative", s.relative()}};
}

json to_json(const TimeSeries& s) { return {{"t", s.times}, {"value", s.values}}; }

json ledger_json(const EnergyLedger& ledger) {
  json j;
  j["min_relative_slack"] = ledger.min_relative_slack;
  j["min_step_relative_slack"] = ledger.min_step_relative_slack;
  j["min_convexity_relative_gap"] = ledger.min_convexity_relative_gap;
  j["derivative_l1"] = ledger.derivative_l1;
  const auto& last = ledger.entries.back();
  const auto& half = ledger.entries[ledger.entries.size() / 2];
  json final_terms, plateau;
  const auto v_last = last.lhs_terms.values();
  const auto v_half = half.lhs_terms.values();
  for (std::size_t i = 0; i < LedgerTerms::names.size(); ++i) {
    final_terms[LedgerTerms::names[i]] = v_last[i];
    plateau[LedgerTerms::names[i]] = plateau_ratio(v_half[i], v_last[i]);
  }
  j["final_terms"] = final_terms;
  j["plateau_half_to_final"] = plateau;
  j["final_slack"] = last.slack;
  j["final_rhs_bound"] = last.rhs_bound;
  j["final_data_bound"] = last.data_bound;
  return j;
}

json simulate_report(const RunConfig& config, const SchemeConfig& scheme,
                     const DiscreteTrajectory& traj, const ValidationReport& validation,
                     const std::optional<EnergyLedger>& ledger) {
  json r;
  r["potential"] = scheme.spec.name();
  r["h"] = scheme.h;
  r["N"] = scheme.N;
  r["T"] = scheme.T();
  r["tau"] = scheme.tau;
  r["lambda"] = scheme.yosida_lambda;
  r["seed"] = config.seed;
  r["validation"] = {{"lambda1_zero", validation.lambda1_zero},
                     {"m0", validation.m0},
                     {"checks", validation.checks}};
  int max_iter = 0;
  double r1 = 0, r2 = 0;
  for (const auto& s : traj.stats) {
    max_iter = std::max(max_iter, s.iterations);
    r1 = std::max(r1, s.residual_first);
    r2 = std::max(r2, s.residual_second);
  }
  r["newton"] = {{"max_iterations", max_iter},
                 {"max_residual_first", r1},
                 {"max_residual_second", r2}};
  if (validation.lambda1_zero) {
    double defect = 0;
    for (int n = 0; n <= traj.steps(); ++n)
      defect = std::max(defect, std::abs(mean(traj.ys[n]) + scheme.h * mean(traj.mus[n]) -
                                         validation.m0));
    r["mass_identity_max_defect"] = defect;
  }
  if (ledger) r["ledger"] = ledger_json(*ledger);
  const auto u = uniform_report(traj, scheme);
  json uj;
  const auto uv = u.values();
  for (std::size_t i = 0; i < UniformReport::names.size(); ++i) uj[UniformReport::names[i]] = uv[i];
  r["uniform"] = uj;
  const auto d = dual_norm_rate(traj, scheme);
  r["dual_norm"] = {{"identity_value", d.identity_value}, {"direct_value", d.direct_value},
                    {"embedding_constant", d.embedding_constant}, {"mu_jump_l2", d.mu_jump_l2},
                    {"Ar_mu_l2", d.Ar_mu_l2},   {"bound", d.bound}};
  return r;
}

double mu_bar_value(const std::string& desc, double t) {
  if (desc == "zero") return 0.0;
  if (desc == "sin") return std::sin(t);
  if (desc == "one") return 1.0;
  if (desc == "minus_one") return -1.0;
  if (desc.rfind("constant:", 0) == 0) {
    const std::string num = desc.substr(9);
    double v = 0;
    const auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), v);
    if (ec == std::errc() && p == num.data() + num.size()) return v;
  }
  throw ConfigError("unknown mu_bar '" + desc + "' (zero, sin, one, minus_one, constant:c)",
                    "mu_bar");
}

}  // namespace

fs::path output_dir(const RunConfig& config, const std::optional<fs::path>& override) {
  if (override) return *override;
  const fs::path dir(config.output.dir);
  return dir.is_absolute() ? dir : config.base_dir / dir;
}

SimulateResult simulate(const RunConfig& config, const fs::path& out_dir) {
  Problem p = build_problem(config);
  SimulateResult result;
  result.validation = validate(p.scheme, p.data);
  result.trajectory = run(p.scheme, p.data);
  const auto& traj = result.trajectory;
  write_file(out_dir / "trajectory.csv", trajectory_csv(traj, p.scheme));
  write_file(out_dir / "y_snapshots.csv",
             snapshots_csv(traj, Component::Y, config.output.snapshot_every));
  write_file(out_dir / "mu_snapshots.csv",
             snapshots_csv(traj, Component::Mu, config.output.snapshot_every));
  if (config.output.ledger) {
    result.ledger = gronwall_ledger(traj, p.data, p.scheme);
    write_file(out_dir / "ledger.tsv", ledger_tsv(*result.ledger));
  }
  if (config.output.report) {
    result.report = simulate_report(config, p.scheme, traj, result.validation, result.ledger);
    write_file(out_dir / "report.json", result.report.dump(2) + "\n");
  }
  if (config.output.plot) write_file(out_dir / "plot.gp", plot_script(config.output.ledger));
  return result;
}

json longtime_report(const RunConfig& config, const fs::path& out_dir,
                     const LongtimeOptions& options) {
  Problem p = build_problem(config);
  fs::path source_dir = out_dir;
  if (options.from) {
    source_dir = *options.from;
  } else {
    simulate(config, out_dir);
  }
  // Fresh and stored runs are analysed through the same reload path.
  const DiscreteTrajectory traj =
      read_snapshots(source_dir / "y_snapshots.csv", source_dir / "mu_snapshots.csv",
                     p.data.y0.grid_ptr(), p.scheme.h);
  if (traj.steps() < 1) throw ConfigError("longtime analysis needs at least one step", "insufficient_data");
  const Field& u_inf = p.data.source.u_infinity();
  const auto times = log_spaced_probe_times(traj, options.probes);
  const auto omega =
      omega_probe(traj, times, p.scheme, u_inf, {options.window, options.domain_tol});
  const auto tail = mu_tail_stats(traj, p.scheme.op_A, options.window);
  const auto range = range_certificate(traj, p.scheme.spec, p.scheme.yosida_lambda);

  json r;
  r["branch"] = to_string(omega.branch);
  r["snapshot_h"] = traj.h;
  r["T"] = traj.T();
  r["probe_times"] = omega.probe_times;
  r["probe_steps"] = omega.probe_steps;
  r["cauchy_gaps"] = omega.cauchy_gaps;
  r["b_sigma_bound"] = omega.b_sigma_bound;
  r["stationarity"] = to_json(omega.stationarity);
  r["initial_stationarity"] = to_json(omega.initial_stationarity);
  r["stationarity_ratio"] = omega.initial_stationarity.residual > 0
                                ? omega.stationarity.residual / omega.initial_stationarity.residual
                                : 0.0;
  r["mu_inf_used"] = omega.mu_inf_used;
  r["tail"] = {{"window_start", tail.window_start},
               {"sup_norm_mu", tail.sup_norm_mu},
               {"sup_norm_mu_head", tail.sup_norm_mu_head},
               {"integral_Ar_mu_sq", tail.integral_Ar_mu_sq},
               {"mean_mu_series", to_json(tail.mean_mu_series)}};
  if (omega.mu_infinity) {
    const auto& m = *omega.mu_infinity;
    r["mu_infinity"] = {{"series", to_json(m.series)},
                        {"flatness", m.flatness},
                        {"average", m.average},
                        {"spread", m.spread}};
  }
  r["range"] = {{"y_min", range.y_min},       {"y_max", range.y_max},
                {"a", range.a},               {"b", range.b},
                {"closed_a", range.closed_a}, {"closed_b", range.closed_b},
                {"contained", range.contained}, {"overshoot", range.overshoot},
                {"yosida_lambda", range.yosida_lambda}};
  r["density_assumed"] = omega.density_assumed;
  write_file(out_dir / "longtime.json", r.dump(2) + "\n");
  return r;
}

std::vector<ExampleBestRow> example_best(const RunConfig& config, const fs::path& out_dir,
                                         const ExampleBestOptions& options) {
  if (options.samples < 1) throw ConfigError("example-best needs at least one sample", "samples");
  if (!(options.horizon >= 0)) throw ConfigError("horizon must be nonnegative", "horizon");
  const FractionalOperator A = build_operator(config.op_A, config.base_dir);
  const FractionalOperator B = build_operator(config.op_B, config.base_dir);
  std::vector<double> times;
  for (int i = 0; i < options.samples; ++i)
    times.push_back(options.samples == 1 ? 0.0
                                         : options.horizon * i / (options.samples - 1));
  std::vector<ExampleBestRow> rows;
  for (const auto& desc : options.mu_bars) {
    mu_bar_value(desc, 0.0);
    const auto rep =
        example_best_check([&](double t) { return mu_bar_value(desc, t); }, times, A, B);
    ExampleBestRow row;
    row.mu_bar = desc;
    for (const auto& s : rep.samples) {
      row.first_equation = std::max(row.first_equation, s.first_equation);
      row.selection = std::max(row.selection, s.selection);
      row.second_equation = std::max(row.second_equation, s.second_equation);
    }
    row.max_violation = rep.max_violation;
    row.pass = rep.max_violation <= options.tolerance;
    rows.push_back(row);
  }
  std::ostringstream out;
  out << "mu_bar\tfirst_equation\tselection\tsecond_equation\tmax_violation\tpass\n";
  for (const auto& r : rows)
    out << r.mu_bar << '\t' << format_number(r.first_equation) << '\t'
        << format_number(r.selection) << '\t' << format_number(r.second_equation) << '\t'
        << format_number(r.max_violation) << '\t' << (r.pass ? "true" : "false") << '\n';
  write_file(out_dir / "example_best.tsv", out.str());
  return rows;
}

std::vector<SweepRow> sweep(const RunConfig& config, const fs::path& out_dir, int levels) {
  if (levels < 1) throw ConfigError("sweep needs at least one level", "levels");
  const int runs = levels + 2;
  struct Run {
    std::string ladder;
    int level;
    RunConfig cfg;
  };
  std::vector<Run> plan;
  for (int k = 0; k < runs; ++k) {
    RunConfig c = config;
    c.scheme.h = config.scheme.h / std::ldexp(1.0, k);
    c.scheme.steps = config.scheme.steps << k;
    c.output.snapshot_every = 1;
    plan.push_back({"h", k, c});
  }
  for (int k = 0; k < runs; ++k) {
    RunConfig c = config;
    c.scheme.lambda = config.scheme.lambda / std::ldexp(1.0, k);
    c.output.snapshot_every = 1;
    plan.push_back({"lambda", k, c});
  }
  std::vector<std::future<DiscreteTrajectory>> futures;
  for (const auto& r : plan) {
    const fs::path dir = out_dir / (r.ladder + "_" + std::to_string(r.level));
    futures.push_back(std::async(std::launch::async, [&r, dir] {
      Problem p = build_problem(r.cfg);
      DiscreteTrajectory traj = run(p.scheme, p.data);
      write_file(dir / "trajectory.csv", trajectory_csv(traj, p.scheme));
      return traj;
    }));
  }
  std::vector<DiscreteTrajectory> trajs;
  for (auto& f : futures) trajs.push_back(f.get());

  std::vector<SweepRow> rows;
  for (int ladder = 0; ladder < 2; ++ladder) {
    double prev = kNaN;
    for (int k = 0; k + 1 < runs; ++k) {
      const auto& coarse = trajs[ladder * runs + k];
      const auto& fine = trajs[ladder * runs + k + 1];
      const double diff = norm(coarse.ys.back() - fine.ys.back());
      const auto& c = plan[ladder * runs + k].cfg.scheme;
      rows.push_back({plan[ladder * runs + k].ladder, k, c.h, c.lambda, diff, prev / diff});
      prev = diff;
    }
  }
  std::ostringstream out;
  out << "ladder\tlevel\th\tlambda\tdiff\tratio\n";
  for (const auto& r : rows)
    out << r.ladder << '\t' << r.level << '\t' << format_number(r.h) << '\t'
        << format_number(r.lambda) << '\t' << format_number(r.diff) << '\t'
        << format_number(r.ratio) << '\n';
  write_file(out_dir / "sweep.tsv", out.str());
  write_file(out_dir / "plot.gp",
             "set terminal pngcairo size 800,600\n"
             "set datafile separator '\\t'\n"
             "set logscale y\n"
             "set output 'sweep.png'\n"
             "plot 'sweep.tsv' using 2:(strcol(1) eq 'h' ? $5 : 1/0) with linespoints title 'h', "
             "'' using 2:(strcol(1) eq 'lambda' ? $5 : 1/0) with linespoints title 'lambda'\n");
  return rows;
}

std::vector<PotentialCheckRow> check_potentials(const std::optional<RunConfig>& config,
                                                const PotentialCheckOptions& options) {
  std::vector<std::pair<std::string, PotentialParams>> specs;
  if (config) {
    specs.emplace_back(config->potential.name, config->potential.params);
  } else {
    specs = {{"regular", {}},
             {"logarithmic", {{"c1", 2.0}}},
             {"obstacle", {{"c2", 1.0}}},
             {"example_best", {}}};
  }
  std::vector<PotentialCheckRow> rows;
  for (const auto& [name, params] : specs) {
    const PotentialSpec spec = make_potential(name, params);
    for (double lambda : options.lambdas) {
      PotentialCheckRow row;
      row.potential = name;
      row.lambda = lambda;
      row.coercivity = coercivity_check(spec, {lambda}, {-10.0, 10.0}, 4001);
      row.oracle = yosida_grid_oracle(spec, lambda, options.samples, options.points, options.seed);
      rows.push_back(row);
    }
  }
  return rows;
}

std::string potential_check_tsv(const std::vector<PotentialCheckRow>& rows) {
  std::ostringstream out;
  out << "potential\tlambda\talpha\tC\tC_prime\tgrid_spacing\tresolvent_error\tyosida_error"
         "\tprimal_error\tselection\n";
  for (const auto& r : rows)
    out << r.potential << '\t' << format_number(r.lambda) << '\t'
        << format_number(r.coercivity.alpha) << '\t' << format_number(r.coercivity.C) << '\t'
        << format_number(r.coercivity.C_prime) << '\t' << format_number(r.oracle.grid_spacing)
        << '\t' << format_number(r.oracle.resolvent_error) << '\t'
        << format_number(r.oracle.yosida_error) << '\t' << format_number(r.oracle.primal_error)
        << '\t' << format_number(r.oracle.selection) << '\n';
  return out.str();
}

json error_json(const std::exception& e) {
  json j;
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    j["kind"] = kind_name(err->kind());
    j["code"] = err->code();
    j["exit_code"] = exit_code(err->kind());
  } else {
    j["kind"] = "internal";
    j["code"] = "internal";
    j["exit_code"] = 1;
  }
  j["message"] = e.what();
  if (const auto* fe = dynamic_cast<const FieldErrors*>(&e)) {
    json list = json::array();
    for (const auto& f : fe->errors())
      list.push_back({{"section", f.section}, {"key", f.key}, {"message", f.message},
                      {"code", f.code}});
    j["field_errors"] = list;
  }
  return j;
}

int error_exit_code(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) return exit_code(err->kind());
  return 1;
}

}  // namespace fch
