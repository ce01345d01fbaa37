#pragma once

#include <complex>
#include <optional>
#include <string>
#include <string_view>

#include "vvpm/dynamics.hpp"
#include "vvpm/hessian.hpp"
#include "vvpm/linalg.hpp"

namespace vvpm {

using Complex = std::complex<double>;

enum class FactorMethod {
  VVPM,
  ShortTime,
  EnergyHessian,
  GeneralVelocityGradient,
  GelfandYaglom,
  Analytic,
};

std::string_view to_string(FactorMethod method);

/// Complex prefactor F multiplying exp(iA/hbar). Magnitude and phase are kept
/// alongside the value because they are computed exactly rather than recovered
/// from `value` with atan2.
struct FluctuationFactor {
  Complex value;
  int dim = 1;
  double hbar = 1.0;
  FactorMethod method = FactorMethod::VVPM;
  std::string branch_note;
  double magnitude = 0.0;
  double phase = 0.0;
};

/// Builds (2 pi i hbar)^(-D/2) * amplitude for a real positive amplitude. The
/// prefactor uses the principal root, so the phase is exactly -D pi / 4.
FluctuationFactor make_factor(double amplitude, int dim, double hbar, FactorMethod method,
                              std::string branch_note);

/// det^power for a determinant that must be real positive; throws
/// Error(CausticRegion) otherwise. `what` names the determinant in the message.
double positive_determinant_power(double det, double power, std::string_view what);

/// Relative deviation |a - b| / max(|a|, |b|).
double relative_deviation(const FluctuationFactor& a, const FluctuationFactor& b);

FluctuationFactor vvpm_factor(const ActionHessian& h, int dim, double hbar);

/// (2 pi i hbar)^(-D/2) det(g(x_a, t_a) / dt)^(1/2).
FluctuationFactor short_time_factor(const LagrangianModel& model, const Vec& x_a, double t_a,
                                    double dt);

/// Throws Error(NotQuadraticModel) unless g is position independent, a is at
/// most linear and V at most quadratic in x. Probes seeded random points around
/// the segment [x_a, x_b] over [t_a, t_b].
void certify_quadratic(const LagrangianModel& model, const Vec& x_a, const Vec& x_b, double t_a,
                       double t_b, unsigned seed = 12345);

/// d^2 E / dx_b dx_b with E the energy at t_a of the classical path, as a
/// function of the endpoints. Central differences over re-solved BVPs.
Mat energy_hessian(const ClassicalPath& path, std::optional<double> h = std::nullopt);

/// (2 pi i hbar)^(-D/2) det g(t_a)^(1/4) det(d^2 E / dx_b dx_b)^(1/4). Quadratic models only.
FluctuationFactor energy_hessian_factor(const ClassicalPath& path,
                                        std::optional<double> h = std::nullopt);

/// F^2 = det g(x_a, t_a) det(d v(t_a) / d x_b) / (2 pi i hbar)^D from the Jacobi fields.
FluctuationFactor general_factor(const ClassicalPath& path);

}  // namespace vvpm
