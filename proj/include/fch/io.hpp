#pragma once

// Output files. Numbers in CSV/TSV use 17 significant digits, JSON uses the
// shortest exact form; both round-trip doubles bit-for-bit. Nothing written
// depends on the clock or on absolute paths.
//
//   trajectory.csv   t,mean_y,mean_mu,norm_y,norm_B_sigma_y,norm_mu,norm_Ar_mu,newton_iters
//   y_snapshots.csv  step,t,v0,...,v{m-1}   (every k-th step, including 0 and N)
//   mu_snapshots.csv same layout for μ
//   ledger.tsv       step, the eight ledger terms, slack, relative_slack,
//                    rhs_bound, data_bound, source_bound

#include <filesystem>
#include <string>

#include "fch/config.hpp"
#include "fch/estimates.hpp"
#include "fch/stepper.hpp"

namespace fch {

std::string format_number(double v);

/// Writes `content` to `path`, creating parent directories.
void write_file(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

std::string trajectory_csv(const DiscreteTrajectory& traj, const SchemeConfig& config);
std::string snapshots_csv(const DiscreteTrajectory& traj, Component which, int every);
std::string ledger_tsv(const EnergyLedger& ledger);

/// Rebuilds the subsampled trajectory (step h·k) from the two snapshot files.
/// Values must live on `grid`, and the stored times must match `h`; the
/// result carries no Newton statistics.
DiscreteTrajectory read_snapshots(const std::filesystem::path& y_csv,
                                  const std::filesystem::path& mu_csv, const GridPtr& grid,
                                  double h);

/// Gnuplot command file plotting the run's CSV/TSV files by relative path.
std::string plot_script(bool with_ledger);

}  // namespace fch
