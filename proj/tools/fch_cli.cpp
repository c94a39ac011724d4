#include <CLI11.hpp>

#include <iostream>

#include "fch/commands.hpp"
#include "fch/errors.hpp"
#include "fch/io.hpp"

using namespace fch;
namespace fs = std::filesystem;

namespace {

// Set once the output directory is known, so failures land next to the outputs.
std::optional<fs::path> g_error_dir;

int report_failure(const std::exception& e) {
  const auto j = error_json(e);
  std::cerr << j.dump() << '\n';
  if (g_error_dir) {
    try {
      write_file(*g_error_dir / "error.json", j.dump(2) + "\n");
    } catch (...) {
    }
  }
  return error_exit_code(e);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral solver and verification harness for fractional Cahn-Hilliard systems"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out;

  auto* sim = app.add_subcommand("simulate", "run the scheme; write trajectory, ledger, report");
  sim->add_option("config", config_path, "config file")->required();
  sim->add_option("--out", out, "output directory (default: output.dir)");

  LongtimeOptions lt;
  std::optional<std::string> from;
  auto* lon = app.add_subcommand("longtime-report", "long-time analysis of a fresh or stored run");
  lon->add_option("config", config_path, "config file")->required();
  lon->add_option("--out", out, "output directory (default: output.dir)");
  lon->add_option("--from", from, "directory with stored y/mu snapshots");
  lon->add_option("--probes", lt.probes, "number of log-spaced probe times")->capture_default_str();
  lon->add_option("--window", lt.window, "tail window fraction")->capture_default_str();
  lon->add_option("--domain-tol", lt.domain_tol, "projection tolerance onto D(beta)")
      ->capture_default_str();

  ExampleBestOptions eb;
  auto* best = app.add_subcommand("example-best", "check the constant-mu nonuniqueness example");
  best->add_option("config", config_path, "config file")->required();
  best->add_option("--out", out, "output directory (default: output.dir)");
  best->add_option("--mu-bar", eb.mu_bars, "zero | sin | one | minus_one | constant:c")
      ->capture_default_str();
  best->add_option("--samples", eb.samples, "sample times on [0, horizon]")->capture_default_str();
  best->add_option("--horizon", eb.horizon, "last sample time")->capture_default_str();

  int levels = 3;
  auto* sw = app.add_subcommand("sweep", "dyadic h and lambda refinement ladders");
  sw->add_option("config", config_path, "config file")->required();
  sw->add_option("--out", out, "output directory (default: output.dir)");
  sw->add_option("--levels", levels, "ratios per ladder (levels + 2 runs each)")
      ->capture_default_str();

  PotentialCheckOptions pc;
  auto* chk = app.add_subcommand("check-potentials", "coercivity and Yosida oracle table");
  chk->add_option("config", config_path, "config file (default: all built-in potentials)");
  chk->add_option("--out", out, "also write potentials.tsv here");
  chk->add_option("--points", pc.points, "oracle grid points")->capture_default_str();
  chk->add_option("--samples", pc.samples, "oracle samples per level")->capture_default_str();
  chk->add_option("--seed", pc.seed, "oracle seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return report_failure(ConfigError(e.what(), "usage"));
  }

  try {
    if (chk->parsed()) {
      std::optional<RunConfig> cfg;
      if (!config_path.empty()) cfg = load_config(config_path);
      const auto tsv = potential_check_tsv(check_potentials(cfg, pc));
      std::cout << tsv;
      if (out) {
        g_error_dir = fs::path(*out);
        write_file(fs::path(*out) / "potentials.tsv", tsv);
      }
      return 0;
    }

    const RunConfig cfg = load_config(config_path);
    const fs::path dir = output_dir(cfg, out ? std::optional<fs::path>(*out) : std::nullopt);
    g_error_dir = dir;

    if (sim->parsed()) {
      const auto r = simulate(cfg, dir);
      std::cout << "steps " << r.trajectory.steps() << ", outputs in " << dir.string() << '\n';
    } else if (lon->parsed()) {
      if (from) lt.from = fs::path(*from);
      const auto r = longtime_report(cfg, dir, lt);
      std::cout << "branch " << r["branch"].get<std::string>() << ", report in "
                << (dir / "longtime.json").string() << '\n';
    } else if (best->parsed()) {
      bool all = true;
      for (const auto& row : example_best(cfg, dir, eb)) {
        std::cout << row.mu_bar << '\t' << format_number(row.max_violation) << '\t'
                  << (row.pass ? "pass" : "fail") << '\n';
        all = all && row.pass;
      }
      if (!all) throw NumericalError("example_best residual above tolerance", "example_best");
    } else if (sw->parsed()) {
      for (const auto& row : sweep(cfg, dir, levels))
        std::cout << row.ladder << '\t' << row.level << '\t' << format_number(row.diff) << '\t'
                  << format_number(row.ratio) << '\n';
    }
  } catch (const std::exception& e) {
    return report_failure(e);
  }
  return 0;
}
