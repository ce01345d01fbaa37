#pragma once

#include <optional>

#include "vvpm/dynamics.hpp"
#include "vvpm/fluctuation.hpp"
#include "vvpm/hessian.hpp"

namespace vvpm {

struct CompositionThresholds {
  double factor = 1e-6;
  double momentum = 1e-8;
  double action = 1e-8;
  double jacobian = 1e-7;
};

/// Split of [t_a, t_b] at t_mid into left = [t_a, t_mid] and right = [t_mid, t_b].
struct CompositionReport {
  double t_mid = 0.0;
  Vec x_mid;
  double momentum_mismatch = 0.0;           // |p_b(left) - p_a(right)|_inf
  double action_additivity_residual = 0.0;  // |A_left + A_right - A|
  double factor_residual = 0.0;             // relative, recombined halves vs full factor
  double jacobian_identity_residual = 0.0;  // relative determinant residual
  FluctuationFactor full, left, right;
  Complex recombined;
  CompositionThresholds thresholds;
  bool diagnostic = false;  // junction deliberately moved off the classical path

  bool passed() const;
};

struct MomentumMatching {
  double momentum_mismatch = 0.0;
  double action_additivity_residual = 0.0;
};

/// (2 pi i hbar)^(D/2) prod_i lambda_i^(-1/2) over the eigenvalues of the
/// symmetric junction Hessian s, principal root per eigenvalue.
Complex gaussian_junction_factor(const Mat& s, double hbar);

/// Solves the full path and both halves through x_mid = x_cl(t_mid) and
/// evaluates every residual. With `midpoint_offset` the junction is shifted by
/// that vector (diagnostic mode, no MidpointOffPath check). Throws
/// Error(MidpointOffPath) when a half path departs from the through path by more than 1e-6.
CompositionReport verify_composition(ModelPtr model, const Vec& x_a, const Vec& x_b, double t_a,
                                     double t_b, double t_mid,
                                     const CompositionThresholds& thresholds = {},
                                     const std::optional<Vec>& midpoint_offset = std::nullopt,
                                     const BvpOptions& options = {});

MomentumMatching verify_momentum_matching(const ClassicalPath& full, const ClassicalPath& left,
                                          const ClassicalPath& right);

/// |det(mixed_full) det(bb_left + aa_right) - det(mixed_left) det(mixed_right)|
/// divided by the larger of the two terms.
double verify_jacobian_identity(const ActionHessian& full, const ActionHessian& left,
                                const ActionHessian& right);

struct AcausalReport {
  double t_mid = 0.0;
  Vec x_mid;
  double factor_residual = 0.0;
  double momentum_mismatch = 0.0;
  FluctuationFactor full;
  Complex recombined;
};

/// Split with t_mid > t_b: forward to t_mid, then backward to t_b. The backward
/// segment carries action -A, Hessian -bb and factor i^D F of its forward
/// counterpart. Quadratic models only (Error(NotQuadraticModel) otherwise).
AcausalReport verify_acausal_composition(ModelPtr model, const Vec& x_a, const Vec& x_b,
                                         double t_a, double t_b, double t_mid,
                                         const BvpOptions& options = {});

}  // namespace vvpm
