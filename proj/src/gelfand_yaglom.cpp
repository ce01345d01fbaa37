#include "vvpm/gelfand_yaglom.hpp"

#include <gsl/gsl_integration.h>

#include <cmath>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <unsupported/Eigen/MatrixFunctions>

#include "vvpm/error.hpp"

namespace vvpm {

namespace {

void check_interval(double t_a, double t_b) {
  if (!(t_b > t_a)) throw std::invalid_argument("Jacobi boundary problem requires t_b > t_a");
}

void throw_focal(double t_a, double t_b) {
  std::ostringstream os;
  os << "B(t_b) is singular on [" << t_a << ", " << t_b << "]; t_b is a focal time";
  throw Error(ErrorKind::FocalPoint, os.str());
}

struct GaussLegendre {
  std::vector<double> nodes, weights;
};

GaussLegendre gauss_legendre(int n, double a, double b) {
  std::unique_ptr<gsl_integration_glfixed_table, decltype(&gsl_integration_glfixed_table_free)>
      table(gsl_integration_glfixed_table_alloc(n), &gsl_integration_glfixed_table_free);
  if (!table) throw std::runtime_error("failed to allocate Gauss-Legendre table");
  GaussLegendre out;
  out.nodes.resize(n);
  out.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    gsl_integration_glfixed_point(a, b, static_cast<size_t>(i), &out.nodes[i], &out.weights[i],
                                  table.get());
  }
  return out;
}

// Values of the Lagrange basis on `nodes` at x (barycentric form).
Eigen::RowVectorXd lagrange_row(const std::vector<double>& nodes, const Eigen::VectorXd& bary,
                                double x) {
  const int n = static_cast<int>(nodes.size());
  Eigen::RowVectorXd row(n);
  for (int m = 0; m < n; ++m) {
    if (x == nodes[m]) {
      row.setZero();
      row[m] = 1.0;
      return row;
    }
    row[m] = bary[m] / (x - nodes[m]);
  }
  return row / row.sum();
}

}  // namespace

JacobiBoundarySolution solve_b_direct(const FrequencyFunction& omega2, double t_a, double t_b,
                                      int n_steps, const std::optional<Mat>& seed) {
  check_interval(t_a, t_b);
  if (n_steps < 1) throw std::invalid_argument("solve_b_direct requires n_steps >= 1");
  const Mat w0 = omega2(t_a);
  const int d = static_cast<int>(w0.rows());
  const Mat s = seed ? *seed : Mat::Identity(d, d);
  if (s.rows() != d || s.cols() != d) throw std::invalid_argument("seed dimension mismatch");

  const double h = (t_b - t_a) / n_steps;
  Mat y = Mat::Zero(d, d), yd = s;
  std::vector<BoundaryGridPoint> raw;
  raw.reserve(n_steps + 1);
  raw.push_back({t_a, y});
  for (int k = 0; k < n_steps; ++k) {
    const double t = t_a + k * h;
    const Mat w_a = omega2(t), w_m = omega2(t + 0.5 * h), w_b = omega2(t + h);
    const Mat k1y = yd, k1v = -w_a * y;
    const Mat k2y = yd + 0.5 * h * k1v, k2v = -w_m * (y + 0.5 * h * k1y);
    const Mat k3y = yd + 0.5 * h * k2v, k3v = -w_m * (y + 0.5 * h * k2y);
    const Mat k4y = yd + h * k3v, k4v = -w_b * (y + h * k3y);
    y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
    yd += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    raw.push_back({k + 1 == n_steps ? t_b : t + h, y});
  }
  if (boundary_block_singular(y, yd, t_b - t_a)) throw_focal(t_a, t_b);

  const Mat y_inv = y.inverse();
  JacobiBoundarySolution sol;
  sol.method = BoundaryMethod::DirectODE;
  sol.order = n_steps;
  sol.t_a = t_a;
  sol.t_b = t_b;
  sol.omega2 = omega2;
  sol.b_dot_a = s * y_inv;
  for (auto& p : raw) p.b = p.b * y_inv;
  sol.grid = std::move(raw);
  return sol;
}

JacobiBoundarySolution solve_b_neumann(const FrequencyFunction& omega2, double t_a, double t_b,
                                       int order, int quad_points) {
  check_interval(t_a, t_b);
  if (order < 0) throw std::invalid_argument("Neumann order must be >= 0");
  if (quad_points < 2) throw std::invalid_argument("Neumann series needs >= 2 quadrature points");
  const int n = quad_points;
  const GaussLegendre gl = gauss_legendre(n, t_a, t_b);
  const GaussLegendre ref = gauss_legendre(n, 0.0, 1.0);

  Eigen::VectorXd bary(n);
  for (int m = 0; m < n; ++m) {
    double p = 1.0;
    for (int j = 0; j < n; ++j) {
      if (j != m) p *= gl.nodes[m] - gl.nodes[j];
    }
    bary[m] = 1.0 / p;
  }

  // kernel(j, m) = int_{t_a}^{tau_j} (tau_j - u) l_m(u) du, exact for the interpolant.
  Mat kernel = Mat::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    const double len = gl.nodes[j] - t_a;
    for (int q = 0; q < n; ++q) {
      const double u = t_a + len * ref.nodes[q];
      kernel.row(j) += len * ref.weights[q] * (gl.nodes[j] - u) * lagrange_row(gl.nodes, bary, u);
    }
  }

  const Mat w0 = omega2(t_a);
  const int d = static_cast<int>(w0.rows());
  std::vector<Mat> w(n);
  for (int m = 0; m < n; ++m) w[m] = omega2(gl.nodes[m]);

  const double duration = t_b - t_a;
  std::vector<Mat> u(n);
  for (int m = 0; m < n; ++m) u[m] = (gl.nodes[m] - t_a) * Mat::Identity(d, d);
  Mat y_b = duration * Mat::Identity(d, d);
  Mat yd_b = Mat::Identity(d, d);
  double prev_norm = y_b.norm(), last_norm = prev_norm;

  for (int k = 1; k <= order; ++k) {
    std::vector<Mat> f(n);
    for (int m = 0; m < n; ++m) f[m] = w[m] * u[m];
    Mat u_b = Mat::Zero(d, d), ud_b = Mat::Zero(d, d);
    for (int m = 0; m < n; ++m) {
      u_b += gl.weights[m] * (t_b - gl.nodes[m]) * f[m];
      ud_b += gl.weights[m] * f[m];
    }
    std::vector<Mat> next(n, Mat::Zero(d, d));
    for (int j = 0; j < n; ++j) {
      for (int m = 0; m < n; ++m) next[j] += kernel(j, m) * f[m];
    }
    u = std::move(next);
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    y_b += sign * u_b;
    yd_b += sign * ud_b;
    prev_norm = last_norm;
    last_norm = u_b.norm();
  }
  if (order >= 1 && last_norm > prev_norm) {
    std::ostringstream os;
    os << "Neumann term " << order << " (norm " << last_norm << ") exceeds term " << order - 1
       << " (norm " << prev_norm << ")";
    throw Error(ErrorKind::SeriesDivergence, os.str());
  }
  if (boundary_block_singular(y_b, yd_b, duration)) throw_focal(t_a, t_b);

  JacobiBoundarySolution sol;
  sol.method = BoundaryMethod::NeumannSeries;
  sol.order = order;
  sol.t_a = t_a;
  sol.t_b = t_b;
  sol.omega2 = omega2;
  sol.b_dot_a = y_b.inverse();
  sol.last_term_norm = last_norm;
  return sol;
}

JacobiBoundarySolution solve_b_time_ordered(const FrequencyFunction& omega2, double t_a,
                                            double t_b, int n_slices) {
  check_interval(t_a, t_b);
  if (n_slices < 1) throw std::invalid_argument("time-ordered product needs n_slices >= 1");
  const int d = static_cast<int>(omega2(t_a).rows());
  const double h = (t_b - t_a) / n_slices;
  Mat map = Mat::Identity(2 * d, 2 * d);
  Mat gen = Mat::Zero(2 * d, 2 * d);
  gen.topRightCorner(d, d) = h * Mat::Identity(d, d);
  for (int k = 0; k < n_slices; ++k) {
    gen.bottomLeftCorner(d, d) = -h * omega2(t_a + (k + 0.5) * h);
    map = Mat(gen.exp()) * map;
  }
  const Mat y_b = map.topRightCorner(d, d);
  if (boundary_block_singular(y_b, map.bottomRightCorner(d, d), t_b - t_a)) throw_focal(t_a, t_b);

  JacobiBoundarySolution sol;
  sol.method = BoundaryMethod::TimeOrderedSinh;
  sol.order = n_slices;
  sol.t_a = t_a;
  sol.t_b = t_b;
  sol.omega2 = omega2;
  sol.b_dot_a = y_b.inverse();
  return sol;
}

FluctuationFactor gy_fluctuation_factor(const JacobiBoundarySolution& sol, const Mat& mass,
                                        double hbar) {
  const int d = static_cast<int>(mass.rows());
  if (sol.b_dot_a.rows() != d) throw std::invalid_argument("mass and B dimensions differ");
  const double duration = sol.t_b - sol.t_a;
  const double det_m = mass.determinant();
  if (!(det_m > 0)) throw Error(ErrorKind::NonSPDMass, "mass matrix determinant is not positive");
  const Mat scaled = duration * sol.b_dot_a;
  const double det_b = scaled.determinant();
  if (!std::isfinite(det_b) || !(det_b > 0)) {
    throw Error(ErrorKind::FocalPoint, "det(T dB/dt(t_a)) is not positive; beyond a focal time");
  }
  const double amp = std::sqrt(det_m) * std::pow(duration, -0.5 * d) * std::sqrt(det_b);
  return make_factor(amp, d, hbar, FactorMethod::GelfandYaglom,
                     "principal roots; (2 pi i hbar T)^(-D/2) with arg -D pi/4, det(T B') > 0");
}

FrequencyFunction harmonic_frequency(const Mat& mass, std::function<Mat(double)> stiffness) {
  const Eigen::PartialPivLU<Mat> lu(mass);
  return [lu, stiffness = std::move(stiffness)](double t) -> Mat { return lu.solve(stiffness(t)); };
}

}  // namespace vvpm
