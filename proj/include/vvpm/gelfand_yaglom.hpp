#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "vvpm/dynamics.hpp"
#include "vvpm/fluctuation.hpp"
#include "vvpm/linalg.hpp"

namespace vvpm {

/// t -> Omega^2(t) = g^-1 d^2 V, a D x D matrix.
using FrequencyFunction = std::function<Mat(double)>;

enum class BoundaryMethod { DirectODE, NeumannSeries, TimeOrderedSinh };

struct BoundaryGridPoint {
  double t = 0.0;
  Mat b;
};

/// Solution of  B'' + Omega^2(t) B = 0,  B(t_a) = 0,  B(t_b) = I.
struct JacobiBoundarySolution {
  Mat b_dot_a;                          // dB/dt at t_a
  std::vector<BoundaryGridPoint> grid;  // sampled B(t); only DirectODE fills it
  FrequencyFunction omega2;
  BoundaryMethod method = BoundaryMethod::DirectODE;
  int order = 0;     // Neumann order or number of time slices
  double t_a = 0.0, t_b = 0.0;
  double last_term_norm = 0.0;  // Neumann series: norm of the last retained term
};

/// RK4 of the matrix system with B(t_a) = 0, B'(t_a) = seed (identity by
/// default), followed by rescaling with the inverse of the raw B(t_b).
/// Throws Error(FocalPoint) when the raw B(t_b) is singular.
JacobiBoundarySolution solve_b_direct(const FrequencyFunction& omega2, double t_a, double t_b,
                                      int n_steps = 2000,
                                      const std::optional<Mat>& seed = std::nullopt);

/// Truncated Neumann series  sum_{n<=k} (-1)^n U_n(t_b),  U_0 = (t - t_a) I,
/// U_n(t) = int_{t_a}^t ds int_{t_a}^s du Omega^2(u) U_{n-1}(u), on Gauss-Legendre
/// nodes. Throws Error(SeriesDivergence) when a term outgrows its predecessor.
JacobiBoundarySolution solve_b_neumann(const FrequencyFunction& omega2, double t_a, double t_b,
                                       int order, int quad_points = 24);

/// Ordered product of slice exponentials of [[0, I], [-Omega^2(mid), 0]]; the
/// upper-right block of the full map is inverted for B'(t_a).
JacobiBoundarySolution solve_b_time_ordered(const FrequencyFunction& omega2, double t_a,
                                            double t_b, int n_slices);

/// (det M)^(1/2) / (2 pi i hbar T)^(D/2) [det(T B'(t_a))]^(1/2).
FluctuationFactor gy_fluctuation_factor(const JacobiBoundarySolution& sol, const Mat& mass,
                                        double hbar);

/// Omega^2(t) = M^-1 K(t) for a harmonic oscillator.
FrequencyFunction harmonic_frequency(const Mat& mass, std::function<Mat(double)> stiffness);

}  // namespace vvpm
