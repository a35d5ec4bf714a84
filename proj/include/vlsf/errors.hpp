#pragma once

#include <stdexcept>
#include <string>

namespace vlsf {

/// Bad arguments or inconsistent inputs (CLI exit code 3).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The requested design point is outside the construction's domain (CLI exit code 2).
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configured memory/work budget would be exceeded (CLI exit code 3).
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative solver failed; carries the last iterate for diagnostics (CLI exit code 4).
class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(const std::string& what, double last_iterate, double residual,
                      int iterations)
      : std::runtime_error(what + " (last iterate " + std::to_string(last_iterate) +
                           ", residual " + std::to_string(residual) + ", after " +
                           std::to_string(iterations) + " iterations)"),
        last_iterate(last_iterate),
        residual(residual),
        iterations(iterations) {}

  double last_iterate = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

}  // namespace vlsf
