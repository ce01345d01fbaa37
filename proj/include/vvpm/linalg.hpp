#pragma once

#include <Eigen/Dense>

namespace vvpm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline Mat symmetrized(const Mat& m) { return 0.5 * (m + m.transpose()); }

/// Caustic test for a Jacobi boundary block. `y` is the position response
/// ∂x(t_b)/∂v(t_a) and `y_dot` the matching velocity response. The scale is
/// the Frobenius norm of the stacked column [y; duration * y_dot], which has
/// the units of y and stays O(duration) at a focal point where y itself
/// collapses.
bool boundary_block_singular(const Mat& y, const Mat& y_dot, double duration,
                             double threshold = 1e-12);

}  // namespace vvpm
