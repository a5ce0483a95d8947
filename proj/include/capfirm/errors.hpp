#pragma once

#include <stdexcept>
#include <string>

namespace capfirm {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid configuration values or unknown configuration keys.
struct ConfigError : Error {
  using Error::Error;
};

/// Malformed or inconsistent input data (files, series, histories).
struct DataError : Error {
  using Error::Error;
};

/// Vector or matrix dimensions that do not agree.
struct ShapeError : Error {
  using Error::Error;
};

/// Argument outside the mathematical domain of a function.
struct DomainError : Error {
  using Error::Error;
};

/// The optimization engine could not produce a usable point.
struct SolverError : Error {
  using Error::Error;
};

/// A planning or control problem has no feasible solution.
struct InfeasibleError : SolverError {
  InfeasibleError(const std::string& what, int period, int scenario = -1)
      : SolverError(what), period(period), scenario(scenario) {}
  int period;
  int scenario;
};

}  // namespace capfirm
