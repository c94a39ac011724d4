#pragma once

#include <stdexcept>
#include <string>

namespace fch {

/// Error families; each maps onto one CLI exit status.
enum class ErrorKind {
  Config,      // malformed input, counts, grids, ranges
  Numerical,   // solver failures
  Hypothesis,  // a structural or data assumption does not hold
};

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return 2;
    case ErrorKind::Numerical: return 3;
    case ErrorKind::Hypothesis: return 4;
  }
  return 1;
}

inline const char* kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return "config";
    case ErrorKind::Numerical: return "numerical";
    case ErrorKind::Hypothesis: return "hypothesis";
  }
  return "unknown";
}

/// Base of every error raised by the library. `code()` is a stable
/// machine-readable name (e.g. "mean_not_interior").
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string code, const std::string& message)
      : std::runtime_error(message), kind_(kind), code_(std::move(code)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& code() const noexcept { return code_; }

 private:
  ErrorKind kind_;
  std::string code_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message, std::string code = "config")
      : Error(ErrorKind::Config, std::move(code), message) {}
};

/// Field/grid or vector length mismatch.
class DimensionError : public ConfigError {
 public:
  explicit DimensionError(const std::string& message)
      : ConfigError(message, "dimension") {}
};

/// Operation called outside of its documented precondition.
class PreconditionError : public ConfigError {
 public:
  explicit PreconditionError(const std::string& message)
      : ConfigError(message, "precondition") {}
};

class RangeError : public ConfigError {
 public:
  explicit RangeError(const std::string& message)
      : ConfigError(message, "range") {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& message,
                          std::string code = "numerical")
      : Error(ErrorKind::Numerical, std::move(code), message) {}
};

class HypothesisError : public Error {
 public:
  HypothesisError(std::string code, const std::string& message)
      : Error(ErrorKind::Hypothesis, std::move(code), message) {}
};

/// Argument outside the effective domain of a graph or potential.
class DomainError : public HypothesisError {
 public:
  explicit DomainError(const std::string& message)
      : HypothesisError("domain", message) {}
};

}  // namespace fch
