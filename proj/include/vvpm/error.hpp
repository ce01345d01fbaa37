#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vvpm {

// Numerical failure modes. Contract violations (bad dimensions, t_b <= t_a, ...)
// are reported as std::invalid_argument instead.
enum class ErrorKind {
  SingularMetric,
  NoConvergence,
  SingularShootingJacobian,
  ConjugatePoint,
  VectorPotentialPresent,
  CausticRegion,
  NotQuadraticModel,
  FocalPoint,
  SeriesDivergence,
  MidpointOffPath,
  TurningPoint,
  NonSPDMass,
  UnstableMode,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail);

  ErrorKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept { return to_string(kind_); }

 private:
  ErrorKind kind_;
};

class NoConvergence : public Error {
 public:
  NoConvergence(int iterations, double best_residual);

  int iterations() const noexcept { return iterations_; }
  double best_residual() const noexcept { return best_residual_; }

 private:
  int iterations_;
  double best_residual_;
};

// Invalid scenario configuration (maps to CLI exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vvpm
