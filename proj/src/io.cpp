#include "fch/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fch/errors.hpp"

namespace fch {

namespace fs = std::filesystem;

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string(), "file");
  out << content;
  if (!out) throw ConfigError("failed writing " + path.string(), "file");
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string(), "file");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string trajectory_csv(const DiscreteTrajectory& traj, const SchemeConfig& config) {
  std::ostringstream out;
  out << "t,mean_y,mean_mu,norm_y,norm_B_sigma_y,norm_mu,norm_Ar_mu,newton_iters\n";
  for (int n = 0; n <= traj.steps(); ++n) {
    const Field& y = traj.ys[n];
    const Field& mu = traj.mus[n];
    const int iters = n == 0 || traj.stats.size() < std::size_t(n) ? 0 : traj.stats[n - 1].iterations;
    out << format_number(traj.time(n)) << ',' << format_number(mean(y)) << ','
        << format_number(mean(mu)) << ',' << format_number(norm(y)) << ','
        << format_number(power_norm(config.op_B, y)) << ',' << format_number(norm(mu)) << ','
        << format_number(power_norm(config.op_A, mu)) << ',' << iters << '\n';
  }
  return out.str();
}

std::string snapshots_csv(const DiscreteTrajectory& traj, Component which, int every) {
  if (every < 1 || traj.steps() % every != 0)
    throw PreconditionError("snapshot cadence must divide the step count");
  const auto& nodes = which == Component::Y ? traj.ys : traj.mus;
  std::ostringstream out;
  out << "step,t";
  for (Index i = 0; i < nodes.front().size(); ++i) out << ",v" << i;
  out << '\n';
  for (int n = 0; n <= traj.steps(); n += every) {
    out << n << ',' << format_number(traj.time(n));
    for (Index i = 0; i < nodes[n].size(); ++i) out << ',' << format_number(nodes[n][i]);
    out << '\n';
  }
  return out.str();
}

std::string ledger_tsv(const EnergyLedger& ledger) {
  std::ostringstream out;
  out << "step";
  for (const char* name : LedgerTerms::names) out << '\t' << name;
  out << "\tslack\trelative_slack\trhs_bound\tdata_bound\tsource_bound\n";
  for (const auto& e : ledger.entries) {
    out << e.step;
    for (double v : e.lhs_terms.values()) out << '\t' << format_number(v);
    out << '\t' << format_number(e.slack) << '\t' << format_number(e.relative_slack()) << '\t'
        << format_number(e.rhs_bound) << '\t' << format_number(e.data_bound) << '\t'
        << format_number(e.source_bound) << '\n';
  }
  return out.str();
}

namespace {

struct SnapshotTable {
  std::vector<int> steps;
  std::vector<double> times;
  std::vector<Vector> rows;
};

double parse_number(const std::string& cell, const fs::path& path) {
  double v = 0;
  const auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || p != cell.data() + cell.size())
    throw ConfigError("malformed number '" + cell + "' in " + path.string(), "file");
  return v;
}

SnapshotTable read_table(const fs::path& path, Index width) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || line.rfind("step,t", 0) != 0)
    throw ConfigError("missing snapshot header in " + path.string(), "file");
  SnapshotTable t;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (static_cast<Index>(cells.size()) != width + 2)
      throw DimensionError("snapshot row in " + path.string() + " has " +
                           std::to_string(cells.size() - 2) + " values, grid has " +
                           std::to_string(width));
    t.steps.push_back(static_cast<int>(parse_number(cells[0], path)));
    t.times.push_back(parse_number(cells[1], path));
    Vector row(width);
    for (Index i = 0; i < width; ++i) row(i) = parse_number(cells[i + 2], path);
    t.rows.push_back(std::move(row));
  }
  if (t.rows.empty()) throw ConfigError("no snapshots in " + path.string(), "file");
  return t;
}

}  // namespace

DiscreteTrajectory read_snapshots(const fs::path& y_csv, const fs::path& mu_csv,
                                  const GridPtr& grid, double h) {
  const auto ys = read_table(y_csv, grid->size());
  const auto mus = read_table(mu_csv, grid->size());
  if (ys.steps != mus.steps)
    throw ConfigError("y and mu snapshots list different steps", "snapshot_mismatch");
  if (ys.steps.front() != 0)
    throw ConfigError("snapshots must start at step 0", "snapshot_mismatch");
  const int every = ys.steps.size() > 1 ? ys.steps[1] : 1;
  for (std::size_t i = 0; i < ys.steps.size(); ++i) {
    if (ys.steps[i] != static_cast<int>(i) * every)
      throw ConfigError("snapshot steps are not evenly spaced", "snapshot_mismatch");
    if (ys.times[i] != h * ys.steps[i])
      throw ConfigError("snapshot times do not match the configured step size",
                        "snapshot_mismatch");
  }
  DiscreteTrajectory traj;
  traj.h = h * every;
  for (std::size_t i = 0; i < ys.rows.size(); ++i) {
    traj.ys.emplace_back(grid, ys.rows[i]);
    traj.mus.emplace_back(grid, mus.rows[i]);
  }
  return traj;
}

std::string plot_script(bool with_ledger) {
  std::ostringstream out;
  out << "set terminal pngcairo size 1000,700\n"
         "set datafile separator ','\n"
         "set key autotitle columnhead\n"
         "set xlabel 't'\n"
         "set output 'trajectory.png'\n"
         "set multiplot layout 2,2\n"
         "plot 'trajectory.csv' using 1:2 with lines, '' using 1:3 with lines\n"
         "plot 'trajectory.csv' using 1:4 with lines, '' using 1:6 with lines\n"
         "plot 'trajectory.csv' using 1:5 with lines, '' using 1:7 with lines\n"
         "plot 'trajectory.csv' using 1:8 with steps\n"
         "unset multiplot\n";
  if (with_ledger) {
    out << "set datafile separator '\\t'\n"
           "set xlabel 'step'\n"
           "set output 'ledger.png'\n"
           "plot 'ledger.tsv' using 1:11 with lines, '' using 1:12 with lines\n";
  }
  return out.str();
}

}  // namespace fch
