#pragma once

// Run configuration: a sectioned key = value document.
//
//   [operator_A]  kind = neumann | dirichlet | matrix
//                 n (modes), length, grid_points, exponent, matrix_file
//   [operator_B]  same keys
//   [potential]   name = regular | logarithmic | obstacle | example_best
//                 c1 (logarithmic), c2 (obstacle)
//   [scheme]      tau, lambda, h, N (steps), newton_tol, newton_max
//   [data]        y0, source_inf, source_decay, source_rate, source_table
//   [output]      dir, snapshot_every, ledger, report, plot
//   [run]         seed
//
// Field descriptors (y0, source_inf, source_decay):
//   constant:c            c everywhere
//   cosine:a0,a1,...      Σ a_k cos(kπx/L)
//   sine:a1,a2,...        Σ a_k sin(kπx/L)
//   random:m,a,K          m + a Σ_{k=1..K} g_k cos(kπx/L)/k, g_k ~ N(0,1) from the seed
//   file:path             one value per grid node
// Matrix-backed operators live on the unit-weight grid, where x is the node
// index. Relative paths are resolved against the config file's directory.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fch/errors.hpp"
#include "fch/potentials.hpp"
#include "fch/spectral.hpp"
#include "fch/stepper.hpp"

namespace fch {

struct OperatorSection {
  BasisKind kind{BasisKind::Neumann};
  int modes{0};
  double length{1.0};
  int grid_points{0};  // 0: modes for Neumann, modes + 2 for Dirichlet
  double exponent{0.5};
  std::string matrix_file;
};

struct PotentialSection {
  std::string name;
  PotentialParams params;
};

struct SchemeSection {
  double tau{0.0};
  double lambda{1e-2};
  double h{1e-2};
  int steps{0};
  double newton_tol{1e-10};
  int newton_max{50};
};

struct DataSection {
  std::string y0{"constant:0"};
  std::string source_inf{"constant:0"};
  std::string source_decay{"constant:0"};
  double source_rate{0.0};
  std::string source_table;  // "t0=desc;t1=desc;..." overrides the decaying form
};

struct OutputSection {
  std::string dir{"out"};
  int snapshot_every{1};
  bool ledger{true};
  bool report{true};
  bool plot{true};
};

struct RunConfig {
  OperatorSection op_A;
  OperatorSection op_B;
  PotentialSection potential;
  SchemeSection scheme;
  DataSection data;
  OutputSection output;
  std::uint64_t seed{1};
  std::filesystem::path base_dir{"."};
};

struct FieldError {
  std::string section;
  std::string key;
  std::string message;
  std::string code{"config"};
};

struct ParseResult {
  std::optional<RunConfig> config;
  std::vector<FieldError> errors;
  bool ok() const { return config.has_value(); }
};

/// Parses a config document. Unknown sections or keys, malformed values,
/// bound violations and missing referenced files are all collected as
/// field-level errors; `config` is set only if there are none.
ParseResult parse_config(const std::string& text,
                         const std::filesystem::path& base_dir = ".");

/// Joins field errors into one message.
std::string format_errors(const std::vector<FieldError>& errors);

/// ConfigError carrying every field-level error of a document.
class FieldErrors : public ConfigError {
 public:
  explicit FieldErrors(std::vector<FieldError> errors);
  const std::vector<FieldError>& errors() const { return errors_; }

 private:
  std::vector<FieldError> errors_;
};

/// Reads and parses a file; throws FieldErrors listing every field error.
RunConfig load_config(const std::filesystem::path& path);

/// Everything a run needs, built from a RunConfig.
struct Problem {
  SchemeConfig scheme;
  ProblemData data;
};

FractionalOperator build_operator(const OperatorSection& section,
                                  const std::filesystem::path& base_dir);
Field build_field(const std::string& descriptor, const GridPtr& grid, std::uint64_t seed,
                  const std::filesystem::path& base_dir);
Problem build_problem(const RunConfig& config);

}  // namespace fch
