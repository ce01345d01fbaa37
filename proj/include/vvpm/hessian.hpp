#pragma once

#include <optional>

#include "vvpm/dynamics.hpp"
#include "vvpm/linalg.hpp"

namespace vvpm {

enum class HessianMethod { JacobiField, FiniteDifference };

/// Endpoint second derivatives of the classical action A(x_b, x_a; t_b, t_a).
///   mixed(i,j) = -d^2 A / dx_a^i dx_b^j
///   aa(i,j)    =  d^2 A / dx_a^i dx_a^j
///   bb(i,j)    =  d^2 A / dx_b^i dx_b^j
/// With these signs a free particle of mass M over duration T gives
/// mixed = aa = bb = M / T.
struct ActionHessian {
  Mat mixed;
  Mat aa;
  Mat bb;
  HessianMethod method = HessianMethod::JacobiField;
  int n_steps = 0;
  double fd_step = 0.0;
};

/// Phase-space boundary maps of the Jacobi fields along a path.
struct JacobiFields {
  Mat transition;        // d(x, v)(t_b) / d(x, v)(t_a)
  Mat dx_b_dp_a;         // position response to the initial momentum
  Mat dv_a_dx_b;         // d xdot(t_a) / d x_b at fixed x_a, (i,j) = d v_a^i / d x_b^j
  Mat dp_b_dx_a;         // d p_b / d x_a at fixed x_b
};

/// Re-integrates the linearized flow along `path` and extracts the boundary
/// maps. Throws Error(ConjugatePoint) when the endpoints are conjugate.
JacobiFields jacobi_fields(const ClassicalPath& path);

ActionHessian action_hessian_jacobi(const ClassicalPath& path);

/// Central second differences of the classical action over endpoint
/// perturbations +-h e_i, re-solving the BVP from the base path's initial
/// velocity. Default h = 1e-4 * max(1, |x_b - x_a|). Test oracle only.
ActionHessian action_hessian_fd(const ClassicalPath& base, std::optional<double> h = std::nullopt,
                                BvpOptions options = {});

/// g^-1 d^2 V along the classical path. Requires a vanishing vector potential
/// (Error(VectorPotentialPresent) otherwise). Between grid points the path is
/// Hermite-interpolated.
Mat frequency_matrix_along_path(const ClassicalPath& path, double t);

/// Same as above, validated once and returned as a reusable t -> matrix callback
/// that keeps the path alive.
std::function<Mat(double)> frequency_function(ClassicalPath path);

}  // namespace vvpm
