#pragma once

#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "vvpm/linalg.hpp"

namespace vvpm {

/// Lagrangian at most quadratic in the velocities,
///
///   L(x, v, t) = 1/2 v^T g(x,t) v + v^T a(x,t) - V(x,t),
///
/// described by evaluation functions for g, a, V and their first derivatives.
/// Instances are immutable after construction and the functions must be pure,
/// so a model can be shared between threads.
struct LagrangianModel {
  using VectorField = std::function<Vec(const Vec&, double)>;
  using MatrixField = std::function<Mat(const Vec&, double)>;
  using ScalarField = std::function<double(const Vec&, double)>;

  std::string name;
  int dim = 1;
  double hbar = 1.0;

  MatrixField metric;                                               // g_ij
  std::function<std::vector<Mat>(const Vec&, double)> metric_grad;  // [k](i,j) = d_k g_ij
  VectorField vector_potential;                                     // a_i
  MatrixField vector_potential_grad;                                // (i,j) = d_j a_i
  ScalarField potential;                                            // V
  VectorField potential_grad;                                       // d_i V
  MatrixField potential_hess;                                       // d_i d_j V

  // Explicit time derivatives of g and a. Central differences in t are used
  // when these are left empty.
  MatrixField metric_dt;
  VectorField vector_potential_dt;
};

using ModelPtr = std::shared_ptr<const LagrangianModel>;

double evaluate_lagrangian(const LagrangianModel& model, const Vec& x, const Vec& v, double t);

/// 1/2 (p-a)^T g^-1 (p-a) + V. Throws Error(SingularMetric) if g is not invertible at x.
double evaluate_hamiltonian(const LagrangianModel& model, const Vec& x, const Vec& p, double t);

/// LU factorization of g(x,t); throws Error(SingularMetric) naming the point
/// when g is numerically singular.
Eigen::PartialPivLU<Mat> factor_metric(const LagrangianModel& model, const Vec& x, double t);

/// p = g v + a.
Vec legendre_momentum(const LagrangianModel& model, const Vec& x, const Vec& v, double t);

/// Time derivatives, falling back to central differences when not supplied.
Mat metric_time_derivative(const LagrangianModel& model, const Vec& x, double t);
Vec vector_potential_time_derivative(const LagrangianModel& model, const Vec& x, double t);

/// Wraps value-only callbacks into a full model; every derivative is taken by
/// central differences with step cbrt(eps) * max(1, |x|).
ModelPtr finite_difference_model(std::string name, int dim,
                                 LagrangianModel::MatrixField metric,
                                 LagrangianModel::VectorField vector_potential,
                                 LagrangianModel::ScalarField potential, double hbar = 1.0);

// ---------------------------------------------------------------------------
// Built-in systems

struct FreeParticle {
  Mat mass;
};

/// L = 1/2 v^T M v - 1/2 x^T K(t) x with stiffness K(t) = M omega^2(t).
struct HarmonicOscillator {
  Mat mass;
  std::function<Mat(double)> stiffness;
  bool time_dependent = false;
};

/// Charged particle in a constant field normal to the (x1, x2) plane, in the
/// gauge a = (0, -M omega x1, 0, ...), omega being the Larmor frequency.
struct MagneticField {
  double mass = 1.0;
  double omega = 1.0;
  int dim = 2;
};

/// Arbitrary time-dependent potential in one dimension with explicit derivatives.
struct OneDimPotential {
  std::function<double(double, double)> value;
  std::function<double(double, double)> first;
  std::function<double(double, double)> second;
  double mass = 1.0;
  std::string label = "potential_1d";
};

using BuiltinModel = std::variant<FreeParticle, HarmonicOscillator, MagneticField, OneDimPotential>;

ModelPtr make_model(const BuiltinModel& spec, double hbar = 1.0);

HarmonicOscillator constant_oscillator(const Mat& mass, const Mat& stiffness);
/// Isotropic oscillator with K(t) = M omega(t)^2.
HarmonicOscillator isotropic_oscillator(const Mat& mass, std::function<double(double)> omega);
/// V = coupling * x^4 / 4.
OneDimPotential quartic_potential(double coupling = 1.0, double mass = 1.0);

}  // namespace vvpm
