#pragma once

// Subcommand bodies behind the fch executable. Each writes into its own
// output directory and returns what it wrote in structured form.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fch/config.hpp"
#include "fch/estimates.hpp"
#include "fch/longtime.hpp"
#include "fch/stepper.hpp"

namespace fch {

/// `override` if given, else output.dir resolved against the config directory.
std::filesystem::path output_dir(const RunConfig& config,
                                 const std::optional<std::filesystem::path>& override = {});

struct SimulateResult {
  DiscreteTrajectory trajectory;
  ValidationReport validation;
  std::optional<EnergyLedger> ledger;
  nlohmann::json report;
};

/// Runs the scheme and writes trajectory.csv, y/mu_snapshots.csv, ledger.tsv,
/// report.json and plot.gp (the last three subject to the output toggles).
SimulateResult simulate(const RunConfig& config, const std::filesystem::path& out_dir);

struct LongtimeOptions {
  int probes{4};
  double window{0.5};
  double domain_tol{0.0};
  std::optional<std::filesystem::path> from;  // directory holding stored snapshots
};

/// Long-time analysis of the snapshot trajectory (stored, or freshly simulated
/// into `out_dir` and reloaded), written to longtime.json.
nlohmann::json longtime_report(const RunConfig& config, const std::filesystem::path& out_dir,
                               const LongtimeOptions& options);

struct ExampleBestOptions {
  std::vector<std::string> mu_bars{"zero", "sin", "one", "minus_one"};
  int samples{21};
  double horizon{10.0};
  double tolerance{1e-12};
};

struct ExampleBestRow {
  std::string mu_bar;
  double first_equation{0};
  double selection{0};
  double second_equation{0};
  double max_violation{0};
  bool pass{false};
};

/// Checks (y ≡ 0, μ ≡ μ̄(t)) for each μ̄ (zero | sin | one | minus_one |
/// constant:c) on the configured operators; writes example_best.tsv.
std::vector<ExampleBestRow> example_best(const RunConfig& config,
                                         const std::filesystem::path& out_dir,
                                         const ExampleBestOptions& options);

struct SweepRow {
  std::string ladder;  // "h" or "lambda"
  int level{0};
  double h{0};
  double lambda{0};
  double diff{0};   // ‖y_level(T) - y_{level+1}(T)‖
  double ratio{0};  // diff_{level-1} / diff_level, NaN at level 0
};

/// Dyadic refinement of h (N doubled, T fixed) and of λ (h fixed): `levels`
/// ratios from levels + 2 runs per ladder. Runs execute concurrently, each in
/// its own subdirectory; the table goes to sweep.tsv.
std::vector<SweepRow> sweep(const RunConfig& config, const std::filesystem::path& out_dir,
                            int levels);

struct PotentialCheckRow {
  std::string potential;
  double lambda{0};
  CoercivityCertificate coercivity;
  YosidaOracleReport oracle;
};

struct PotentialCheckOptions {
  std::vector<double> lambdas{0.1, 0.01, 0.001};
  int samples{100};
  int points{100000};
  std::uint64_t seed{1};
};

/// Coercivity certificate and grid-oracle agreement per potential and level.
/// Without a config all four built-ins are checked, with c1 = 2 and c2 = 1.
std::vector<PotentialCheckRow> check_potentials(const std::optional<RunConfig>& config,
                                                const PotentialCheckOptions& options);
std::string potential_check_tsv(const std::vector<PotentialCheckRow>& rows);

/// Machine-readable description of a failure: kind, code, message,
/// exit_code, and field_errors for config documents.
nlohmann::json error_json(const std::exception& e);
int error_exit_code(const std::exception& e);

}  // namespace fch
