#include "fch/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "fch/errors.hpp"

namespace fch {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::optional<double> to_double(const std::string& text) {
  const std::string t = trim(text);
  double v = 0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty()) return std::nullopt;
  return v;
}

std::optional<long long> to_int(const std::string& text) {
  const std::string t = trim(text);
  long long v = 0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty()) return std::nullopt;
  return v;
}

std::optional<bool> to_bool(const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "yes" || t == "on" || t == "1") return true;
  if (t == "false" || t == "no" || t == "off" || t == "0") return false;
  return std::nullopt;
}

std::vector<double> parse_list(const std::string& text, bool& ok) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  ok = true;
  while (std::getline(ss, item, ',')) {
    const auto v = to_double(item);
    if (!v) {
      ok = false;
      return {};
    }
    out.push_back(*v);
  }
  if (out.empty()) ok = false;
  return out;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

// Checks the shape of a field descriptor without building it.
std::optional<std::string> check_descriptor(const std::string& desc, const fs::path& base) {
  const auto colon = desc.find(':');
  if (colon == std::string::npos) return "descriptor must look like kind:arguments";
  const std::string kind = trim(desc.substr(0, colon));
  const std::string args = trim(desc.substr(colon + 1));
  bool ok = false;
  if (kind == "constant") {
    if (!to_double(args)) return "constant descriptor needs one number";
  } else if (kind == "cosine" || kind == "sine") {
    parse_list(args, ok);
    if (!ok) return kind + " descriptor needs a comma-separated list of numbers";
  } else if (kind == "random") {
    const auto v = parse_list(args, ok);
    if (!ok || v.size() != 3 || v[2] < 1 || v[2] != std::floor(v[2]))
      return "random descriptor needs mean,amplitude,K with integer K >= 1";
  } else if (kind == "file") {
    if (args.empty()) return "file descriptor needs a path";
    const fs::path p = resolve(base, args);
    if (!fs::exists(p)) return "file not found: " + p.string();
  } else {
    return "unknown descriptor kind '" + kind + "'";
  }
  return std::nullopt;
}

class SectionReader {
 public:
  SectionReader(const pt::ptree* tree, std::string section, std::vector<FieldError>& errors)
      : tree_(tree), section_(std::move(section)), errors_(errors) {}

  bool present() const { return tree_ != nullptr; }

  std::optional<std::string> raw(const std::string& key) {
    used_.insert(key);
    if (!tree_) return std::nullopt;
    const auto child = tree_->get_child_optional(key);
    if (!child) return std::nullopt;
    return trim(child->data());
  }

  template <typename T, typename Parse>
  void read(const std::string& key, T& out, Parse parse, const char* what) {
    const auto v = raw(key);
    if (!v) return;
    const auto parsed = parse(*v);
    if (!parsed) {
      error(key, "expected " + std::string(what) + ", got '" + *v + "'");
      return;
    }
    out = static_cast<T>(*parsed);
  }

  void number(const std::string& key, double& out) { read(key, out, to_double, "a number"); }
  void integer(const std::string& key, int& out) { read(key, out, to_int, "an integer"); }
  void boolean(const std::string& key, bool& out) { read(key, out, to_bool, "a boolean"); }
  void text(const std::string& key, std::string& out) {
    if (const auto v = raw(key)) out = *v;
  }

  void error(const std::string& key, const std::string& message,
             const std::string& code = "config") {
    errors_.push_back({section_, key, message, code});
  }

  void reject_unknown() {
    if (!tree_) return;
    for (const auto& [key, value] : *tree_)
      if (!used_.count(key)) error(key, "unknown key");
  }

 private:
  const pt::ptree* tree_;
  std::string section_;
  std::vector<FieldError>& errors_;
  std::set<std::string> used_;
};

void read_operator(SectionReader& r, OperatorSection& op, const fs::path& base) {
  if (!r.present()) {
    r.error("", "missing section");
    return;
  }
  std::string kind;
  r.text("kind", kind);
  if (kind == "neumann") op.kind = BasisKind::Neumann;
  else if (kind == "dirichlet") op.kind = BasisKind::Dirichlet;
  else if (kind == "matrix") op.kind = BasisKind::Matrix;
  else if (kind.empty()) r.error("kind", "missing (neumann, dirichlet or matrix)");
  else r.error("kind", "unknown operator kind '" + kind + "'");
  r.integer("n", op.modes);
  r.number("length", op.length);
  r.integer("grid_points", op.grid_points);
  r.number("exponent", op.exponent);
  r.text("matrix_file", op.matrix_file);
  r.reject_unknown();

  if (!(op.exponent > 0)) r.error("exponent", "must be positive");
  if (op.kind == BasisKind::Matrix) {
    if (op.matrix_file.empty()) {
      r.error("matrix_file", "required for matrix operators");
    } else {
      const fs::path p = resolve(base, op.matrix_file);
      if (!fs::exists(p)) r.error("matrix_file", "file not found: " + p.string(), "file");
    }
    return;
  }
  if (!op.matrix_file.empty()) r.error("matrix_file", "only valid for matrix operators");
  if (op.modes < 1) r.error("n", "must be a positive integer");
  if (!(op.length > 0)) r.error("length", "must be positive");
  const int min_points = op.kind == BasisKind::Dirichlet ? op.modes + 2 : op.modes;
  if (op.grid_points == 0) op.grid_points = std::max(min_points, 2);
  if (op.grid_points < min_points || op.grid_points < 2)
    r.error("grid_points", "must be at least " + std::to_string(std::max(min_points, 2)));
}

}  // namespace

std::string format_errors(const std::vector<FieldError>& errors) {
  std::ostringstream msg;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (i) msg << "; ";
    msg << '[' << errors[i].section << ']';
    if (!errors[i].key.empty()) msg << ' ' << errors[i].key;
    msg << ": " << errors[i].message;
  }
  return msg.str();
}

namespace {
std::string errors_code(const std::vector<FieldError>& errors) {
  const bool file = !errors.empty() && std::all_of(errors.begin(), errors.end(),
                                                   [](const FieldError& e) { return e.code == "file"; });
  return file ? "file" : "config";
}
}  // namespace

FieldErrors::FieldErrors(std::vector<FieldError> errors)
    : ConfigError(format_errors(errors), errors_code(errors)), errors_(std::move(errors)) {}

ParseResult parse_config(const std::string& text, const fs::path& base_dir) {
  ParseResult result;
  auto& errors = result.errors;
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    errors.push_back({"", "", "malformed document: " + e.message() + " (line " +
                                  std::to_string(e.line()) + ")"});
    return result;
  }

  static const std::set<std::string> known{"operator_A", "operator_B", "potential", "scheme",
                                           "data",       "output",     "run"};
  for (const auto& [name, child] : tree) {
    if (!known.count(name)) {
      if (child.empty()) errors.push_back({"", name, "key outside any section"});
      else errors.push_back({name, "", "unknown section"});
    }
  }
  auto section = [&](const char* name) -> const pt::ptree* {
    const auto c = tree.get_child_optional(name);
    return c ? &*c : nullptr;
  };

  RunConfig cfg;
  cfg.base_dir = base_dir;
  {
    SectionReader r(section("operator_A"), "operator_A", errors);
    read_operator(r, cfg.op_A, base_dir);
  }
  {
    SectionReader r(section("operator_B"), "operator_B", errors);
    read_operator(r, cfg.op_B, base_dir);
  }
  {
    SectionReader r(section("potential"), "potential", errors);
    if (!r.present()) {
      r.error("", "missing section");
    } else {
      r.text("name", cfg.potential.name);
      for (const char* p : {"c1", "c2"}) {
        double v = 0;
        if (r.raw(p)) {
          r.number(p, v);
          cfg.potential.params[p] = v;
        }
      }
      r.reject_unknown();
      if (cfg.potential.name.empty()) {
        r.error("name", "missing");
      } else {
        try {
          make_potential(cfg.potential.name, cfg.potential.params);
        } catch (const Error& e) {
          r.error(e.code() == "potential_name" ? "name" : "", e.what());
        }
      }
    }
  }
  {
    SectionReader r(section("scheme"), "scheme", errors);
    auto& s = cfg.scheme;
    r.number("tau", s.tau);
    r.number("lambda", s.lambda);
    r.number("h", s.h);
    r.integer("N", s.steps);
    r.number("newton_tol", s.newton_tol);
    r.integer("newton_max", s.newton_max);
    r.reject_unknown();
    if (!(s.tau >= 0 && s.tau <= 1)) r.error("tau", "must lie in [0, 1]");
    if (!(s.lambda > 0)) r.error("lambda", "must be positive");
    if (!(s.h > 0)) r.error("h", "must be positive");
    if (s.steps < 0) r.error("N", "must be nonnegative");
    if (!(s.newton_tol > 0)) r.error("newton_tol", "must be positive");
    if (s.newton_max < 1) r.error("newton_max", "must be at least 1");
  }
  {
    SectionReader r(section("data"), "data", errors);
    auto& d = cfg.data;
    r.text("y0", d.y0);
    r.text("source_inf", d.source_inf);
    r.text("source_decay", d.source_decay);
    r.number("source_rate", d.source_rate);
    r.text("source_table", d.source_table);
    r.reject_unknown();
    for (auto [key, value] : {std::pair{"y0", &d.y0}, std::pair{"source_inf", &d.source_inf},
                              std::pair{"source_decay", &d.source_decay}}) {
      if (const auto msg = check_descriptor(*value, base_dir))
        r.error(key, *msg, msg->rfind("file not found", 0) == 0 ? "file" : "config");
    }
    if (!(d.source_rate >= 0)) r.error("source_rate", "must be nonnegative");
    if (!d.source_table.empty()) {
      std::stringstream ss(d.source_table);
      std::string entry;
      while (std::getline(ss, entry, ';')) {
        const auto eq = entry.find('=');
        if (eq == std::string::npos || !to_double(entry.substr(0, eq))) {
          r.error("source_table", "entries must look like time=descriptor");
          break;
        }
        if (const auto msg = check_descriptor(trim(entry.substr(eq + 1)), base_dir)) {
          r.error("source_table", *msg);
          break;
        }
      }
    }
  }
  {
    SectionReader r(section("output"), "output", errors);
    auto& o = cfg.output;
    r.text("dir", o.dir);
    r.integer("snapshot_every", o.snapshot_every);
    r.boolean("ledger", o.ledger);
    r.boolean("report", o.report);
    r.boolean("plot", o.plot);
    r.reject_unknown();
    if (o.snapshot_every < 1) r.error("snapshot_every", "must be at least 1");
    else if (cfg.scheme.steps % o.snapshot_every != 0)
      r.error("snapshot_every", "must divide scheme.N");
  }
  {
    SectionReader r(section("run"), "run", errors);
    long long seed = static_cast<long long>(cfg.seed);
    r.read("seed", seed, to_int, "an integer");
    r.reject_unknown();
    if (seed < 0) r.error("seed", "must be nonnegative");
    cfg.seed = static_cast<std::uint64_t>(seed);
  }

  if (errors.empty()) result.config = std::move(cfg);
  return result;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string(), "file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
  auto result = parse_config(buffer.str(), base);
  if (!result.ok()) throw FieldErrors(std::move(result.errors));
  return std::move(*result.config);
}

FractionalOperator build_operator(const OperatorSection& s, const fs::path& base_dir) {
  if (s.kind == BasisKind::Matrix) {
    const Matrix m = read_matrix_file(resolve(base_dir, s.matrix_file).string());
    return FractionalOperator(build_matrix_basis<double>(m), s.exponent);
  }
  return FractionalOperator(build_interval_basis(s.kind, s.modes, s.length, s.grid_points),
                            s.exponent);
}

Field build_field(const std::string& descriptor, const GridPtr& grid, std::uint64_t seed,
                  const fs::path& base_dir) {
  if (const auto msg = check_descriptor(descriptor, base_dir))
    throw ConfigError(*msg + " in '" + descriptor + "'", "descriptor");
  const auto colon = descriptor.find(':');
  const std::string kind = trim(descriptor.substr(0, colon));
  const std::string args = trim(descriptor.substr(colon + 1));
  const double L = grid->length;
  const double pi = std::numbers::pi;
  Vector v = Vector::Zero(grid->size());
  bool ok = true;
  if (kind == "constant") {
    v.setConstant(*to_double(args));
  } else if (kind == "cosine" || kind == "sine") {
    const auto a = parse_list(args, ok);
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double wave = kind == "cosine" ? double(k) : double(k + 1);
      for (Index i = 0; i < v.size(); ++i) {
        const double arg = wave * pi * grid->nodes(i) / L;
        v(i) += a[k] * (kind == "cosine" ? std::cos(arg) : std::sin(arg));
      }
    }
  } else if (kind == "random") {
    const auto a = parse_list(args, ok);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    v.setConstant(a[0]);
    for (int k = 1; k <= static_cast<int>(a[2]); ++k) {
      const double c = a[1] * g(rng) / k;
      for (Index i = 0; i < v.size(); ++i) v(i) += c * std::cos(k * pi * grid->nodes(i) / L);
    }
  } else {
    const fs::path p = resolve(base_dir, args);
    std::ifstream in(p);
    if (!in) throw ConfigError("cannot open field file: " + p.string(), "file");
    for (Index i = 0; i < v.size(); ++i)
      if (!(in >> v(i)))
        throw ConfigError("field file " + p.string() + " has fewer than " +
                              std::to_string(v.size()) + " values",
                          "file");
    std::string extra;
    if (in >> extra) throw ConfigError("field file " + p.string() + " has extra values", "file");
  }
  return Field(grid, v);
}

Problem build_problem(const RunConfig& c) {
  FractionalOperator A = build_operator(c.op_A, c.base_dir);
  FractionalOperator B = build_operator(c.op_B, c.base_dir);
  if (!(A.basis().grid() == B.basis().grid()))
    throw ConfigError("operators A and B are built on different grids", "grid_mismatch");
  const GridPtr grid = A.basis().grid_ptr();
  SchemeConfig scheme{A, B, make_potential(c.potential.name, c.potential.params)};
  scheme.yosida_lambda = c.scheme.lambda;
  scheme.tau = c.scheme.tau;
  scheme.h = c.scheme.h;
  scheme.N = c.scheme.steps;
  scheme.newton_tol = c.scheme.newton_tol;
  scheme.newton_max = c.scheme.newton_max;

  // Independent streams for the initial datum and the source fields.
  const Field y0 = build_field(c.data.y0, grid, c.seed, c.base_dir);
  const Field u_inf = build_field(c.data.source_inf, grid, c.seed + 1, c.base_dir);
  const Field decay = build_field(c.data.source_decay, grid, c.seed + 2, c.base_dir);
  SourceTerm source = SourceTerm::decaying(u_inf, decay, c.data.source_rate);
  if (!c.data.source_table.empty()) {
    std::vector<double> times;
    std::vector<Field> values;
    std::stringstream ss(c.data.source_table);
    std::string entry;
    std::uint64_t stream = 3;
    while (std::getline(ss, entry, ';')) {
      const auto eq = entry.find('=');
      times.push_back(*to_double(entry.substr(0, eq)));
      values.push_back(build_field(trim(entry.substr(eq + 1)), grid, c.seed + stream++, c.base_dir));
    }
    source = SourceTerm::tabulated(u_inf, std::move(times), std::move(values));
  }
  return {std::move(scheme), {y0, std::move(source)}};
}

}  // namespace fch
