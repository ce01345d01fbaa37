#pragma once

#include <optional>

#include "vvpm/dynamics.hpp"
#include "vvpm/fluctuation.hpp"
#include "vvpm/linalg.hpp"

namespace vvpm {

/// Closed-form reference results.
struct AnalyticResult {
  FluctuationFactor factor;
  std::optional<double> action;  // filled when endpoints are supplied
  Vec frequencies;               // normal-mode omega_i (harmonic), mass eigenvalues (free)
  Mat modes;                     // columns: normal modes
  Mat energy_hessian;            // d^2 E / dx_b dx_b where known in closed form
  std::optional<Vec> orbit_center;  // magnetic case, plane (x1, x2)
};

struct Endpoints {
  Vec x_a, x_b;
};

/// sqrt(det M) / (2 pi i hbar T)^(D/2). Modes from the orthogonal diagonalization of M.
AnalyticResult free_particle_factor(const Mat& mass, double duration, double hbar,
                                    const std::optional<Endpoints>& ends = std::nullopt);

/// Constant oscillator with potential 1/2 x^T K x. Normal modes from K u = omega^2 M u;
/// F = sqrt(det M) / (2 pi i hbar T)^(D/2) prod_i sqrt(omega_i T / sin(omega_i T)).
/// Throws Error(UnstableMode) for omega_i^2 < 0, Error(FocalPoint) once omega_i T >= pi.
AnalyticResult harmonic_constant_factor(const Mat& mass, const Mat& stiffness, double duration,
                                        double hbar,
                                        const std::optional<Endpoints>& ends = std::nullopt);

/// [M / (2 pi i hbar T)]^(D/2) (omega T / 2) / sin(omega T / 2). The orbit center
/// follows the cot formulas of the classical solution of
///   x1'' = omega x2',  x2'' = -omega x1'.
AnalyticResult magnetic_factor(double mass, double omega, int dim, double duration, double hbar,
                               const std::optional<Endpoints>& ends = std::nullopt);

/// (2 pi i hbar)^(-1/2) [xdot_a xdot_b int dt / xdot^2 / M]^(-1/2) for a constant
/// mass M, the integral by Simpson on the stored grid. Throws Error(TurningPoint)
/// if min |xdot| < 1e-8 max |xdot|.
AnalyticResult one_dim_dalembert_factor(const ClassicalPath& path, double hbar);

}  // namespace vvpm
