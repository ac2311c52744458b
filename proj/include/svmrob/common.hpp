#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace svmrob {

/// An input point x in R^d.
using Point = std::vector<double>;

/// Invalid configuration, option, or input value. CLI exit code 2.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// The solver failed to reach the requested certificate tolerance. CLI exit code 3.
class SolverError : public std::runtime_error {
public:
  SolverError(const std::string& what, int iterations, double residual)
      : std::runtime_error(what), iterations(iterations), residual(residual) {}
  int iterations;
  double residual;
};

/// Unreadable or unwritable file. CLI exit code 4.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace svmrob
