#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vvpm/linalg.hpp"
#include "vvpm/model.hpp"

namespace vvpm {

struct PathSample {
  double t = 0.0;
  Vec x;
  Vec v;
};

/// Solved two-point boundary trajectory. Immutable once returned.
struct ClassicalPath {
  ModelPtr model;
  std::string model_ref;
  Vec x_a, x_b;
  double t_a = 0.0, t_b = 0.0;
  int n_steps = 0;
  std::vector<PathSample> samples;  // uniform grid, n_steps + 1 points
  double action = 0.0;
  Vec p_a, p_b;
  double energy_a = 0.0;
  double bvp_residual = 0.0;
  int iterations = 0;

  double duration() const { return t_b - t_a; }
  const Vec& initial_velocity() const { return samples.front().v; }
};

/// Trajectory together with the state-transition matrix of the linearized
/// (Jacobi) flow, d(x, v)(t_b) / d(x, v)(t_a), ordered as [[xx, xv], [vx, vv]].
struct VariationalTrajectory {
  std::vector<PathSample> samples;
  Mat transition;

  int dim() const { return static_cast<int>(transition.rows() / 2); }
  Mat dx_dx() const { return transition.topLeftCorner(dim(), dim()); }
  Mat dx_dv() const { return transition.topRightCorner(dim(), dim()); }
  Mat dv_dx() const { return transition.bottomLeftCorner(dim(), dim()); }
  Mat dv_dv() const { return transition.bottomRightCorner(dim(), dim()); }
};

/// Solves g(x,t) dv/dt = rhs of the Euler-Lagrange equations.
Vec acceleration(const LagrangianModel& model, const Vec& x, const Vec& v, double t);

struct AccelerationJacobian {
  Vec value;
  Mat d_dx;
  Mat d_dv;
};

/// Linearization of `acceleration`. The velocity part is exact; the position
/// part uses the supplied potential Hessian and central differences of the
/// metric / vector-potential terms, which vanish identically when g is constant
/// and a is linear.
AccelerationJacobian acceleration_jacobian(const LagrangianModel& model, const Vec& x,
                                           const Vec& v, double t);

/// Classic fixed-step RK4 of the first-order system (x, v).
std::vector<PathSample> integrate_ivp(const LagrangianModel& model, const Vec& x0, const Vec& v0,
                                      double t_a, double t_b, int n_steps);

/// RK4 of the trajectory augmented with the 2D x 2D variational system. The
/// transition matrix is the exact derivative of the discrete RK4 map.
VariationalTrajectory integrate_variational(const LagrangianModel& model, const Vec& x0,
                                            const Vec& v0, double t_a, double t_b, int n_steps);

struct BvpOptions {
  int n_steps = 1000;
  double tol = 1e-12;
  int max_iter = 50;
  std::optional<Vec> v0_guess;
};

/// Newton shooting on the initial velocity. Throws NoConvergence,
/// Error(SingularShootingJacobian) at a conjugate point, Error(SingularMetric).
ClassicalPath solve_bvp(ModelPtr model, const Vec& x_a, const Vec& x_b, double t_a, double t_b,
                        const BvpOptions& options = {});

/// Composite Simpson rule on uniformly spaced values (odd count >= 3).
double simpson(const std::vector<double>& f, double h);

/// Simpson quadrature of L over the samples (even number of steps).
double classical_action(const LagrangianModel& model, const std::vector<PathSample>& samples);

/// State at time t: exact sample on the grid, cubic Hermite interpolation of
/// x (from x and v) and of v (from v and the acceleration) in between.
PathSample sample_at(const ClassicalPath& path, double t);

/// Hamiltonian along the trajectory, evaluated on sample_at(path, t).
double path_energy(const ClassicalPath& path, double t);

}  // namespace vvpm
