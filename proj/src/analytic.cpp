#include "vvpm/analytic.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "vvpm/error.hpp"

namespace vvpm {

namespace {

void require_spd(const Mat& mass) {
  if (mass.rows() != mass.cols() || mass.rows() < 1) {
    throw std::invalid_argument("mass matrix must be square and non-empty");
  }
  if ((mass - mass.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, mass.norm()) ||
      Eigen::LLT<Mat>(mass).info() != Eigen::Success) {
    throw Error(ErrorKind::NonSPDMass, "mass matrix is not symmetric positive definite");
  }
}

void require_duration(double duration) {
  if (!(duration > 0)) throw std::invalid_argument("duration must be positive");
}

void require_ends(const std::optional<Endpoints>& ends, int d) {
  if (ends && (ends->x_a.size() != d || ends->x_b.size() != d)) {
    throw std::invalid_argument("endpoint dimension mismatch");
  }
}

// x / sin x, continuous at 0.
double x_over_sin(double x) {
  if (std::abs(x) < 1e-6) return 1.0 + x * x / 6.0;
  return x / std::sin(x);
}

}  // namespace

AnalyticResult free_particle_factor(const Mat& mass, double duration, double hbar,
                                    const std::optional<Endpoints>& ends) {
  require_spd(mass);
  require_duration(duration);
  const int d = static_cast<int>(mass.rows());
  require_ends(ends, d);
  AnalyticResult r;
  const double amp = std::sqrt(mass.determinant()) * std::pow(duration, -0.5 * d);
  r.factor = make_factor(amp, d, hbar, FactorMethod::Analytic,
                         "closed form sqrt(det M) / (2 pi i hbar T)^(D/2), arg -D pi/4");
  const Eigen::SelfAdjointEigenSolver<Mat> eig(symmetrized(mass));
  r.frequencies = eig.eigenvalues();
  r.modes = eig.eigenvectors();
  r.energy_hessian = mass / (duration * duration);
  if (ends) {
    const Vec dx = ends->x_b - ends->x_a;
    r.action = 0.5 * dx.dot(mass * dx) / duration;
  }
  return r;
}

AnalyticResult harmonic_constant_factor(const Mat& mass, const Mat& stiffness, double duration,
                                        double hbar, const std::optional<Endpoints>& ends) {
  require_spd(mass);
  require_duration(duration);
  const int d = static_cast<int>(mass.rows());
  if (stiffness.rows() != d || stiffness.cols() != d) {
    throw std::invalid_argument("stiffness and mass dimensions differ");
  }
  require_ends(ends, d);
  const Eigen::GeneralizedSelfAdjointEigenSolver<Mat> eig(symmetrized(stiffness),
                                                          symmetrized(mass));
  const Vec w2 = eig.eigenvalues();
  const Mat u = eig.eigenvectors();  // u^T M u = I

  AnalyticResult r;
  r.frequencies.resize(d);
  r.modes = u;
  double ratio = 1.0;
  Vec mixed_modes(d);
  for (int i = 0; i < d; ++i) {
    if (w2[i] < -1e-14 * std::max(1.0, stiffness.norm())) {
      std::ostringstream os;
      os << "mode " << i << " has omega^2 = " << w2[i] << " < 0";
      throw Error(ErrorKind::UnstableMode, os.str());
    }
    const double w = std::sqrt(std::max(0.0, w2[i]));
    const double wt = w * duration;
    if (wt >= std::numbers::pi || std::abs(std::sin(wt)) < 1e-12 * std::max(1.0, wt)) {
      std::ostringstream os;
      os << "mode " << i << " reaches a focal point (omega T = " << wt << ")";
      throw Error(ErrorKind::FocalPoint, os.str());
    }
    r.frequencies[i] = w;
    ratio *= x_over_sin(wt);
    mixed_modes[i] = x_over_sin(wt) / duration;
  }
  const double amp = std::sqrt(mass.determinant()) * std::pow(duration, -0.5 * d) * std::sqrt(ratio);
  r.factor = make_factor(amp, d, hbar, FactorMethod::Analytic,
                         "closed form over normal modes, principal roots, arg -D pi/4");
  const Mat mu = mass * u;
  r.energy_hessian = mu * mixed_modes.array().square().matrix().asDiagonal() * mu.transpose();
  if (ends) {
    const Vec ya = mu.transpose() * ends->x_a;
    const Vec yb = mu.transpose() * ends->x_b;
    double a = 0.0;
    for (int i = 0; i < d; ++i) {
      const double w = r.frequencies[i];
      if (w * duration < 1e-8) {
        a += 0.5 * (yb[i] - ya[i]) * (yb[i] - ya[i]) / duration;
      } else {
        const double wt = w * duration;
        a += w / (2.0 * std::sin(wt)) *
             ((ya[i] * ya[i] + yb[i] * yb[i]) * std::cos(wt) - 2.0 * ya[i] * yb[i]);
      }
    }
    r.action = a;
  }
  return r;
}

AnalyticResult magnetic_factor(double mass, double omega, int dim, double duration, double hbar,
                               const std::optional<Endpoints>& ends) {
  if (dim < 2) throw std::invalid_argument("magnetic_factor requires D >= 2");
  if (!(mass > 0)) throw Error(ErrorKind::NonSPDMass, "mass must be positive");
  require_duration(duration);
  require_ends(ends, dim);
  const double half = 0.5 * omega * duration;
  if (std::abs(half) >= std::numbers::pi ||
      (half != 0.0 && std::abs(std::sin(half)) < 1e-12 * std::max(1.0, std::abs(half)))) {
    std::ostringstream os;
    os << "omega T / 2 = " << half << " is at or beyond the focal point";
    throw Error(ErrorKind::FocalPoint, os.str());
  }
  AnalyticResult r;
  const double amp = std::pow(mass / duration, 0.5 * dim) * x_over_sin(half);
  r.factor = make_factor(amp, dim, hbar, FactorMethod::Analytic,
                         "closed form [M/(2 pi i hbar T)]^(D/2) (wT/2)/sin(wT/2), arg -D pi/4");
  r.frequencies = Vec::Zero(dim);
  r.frequencies[0] = r.frequencies[1] = omega;
  r.modes = Mat::Identity(dim, dim);
  r.energy_hessian = Mat::Identity(dim, dim) * mass / (duration * duration);
  const double plane = mass / (duration * duration) * std::pow(x_over_sin(half), 2);
  r.energy_hessian(0, 0) = r.energy_hessian(1, 1) = plane;  // M w^2 / (4 sin^2(wT/2))
  if (ends) {
    const Vec& a = ends->x_a;
    const Vec& b = ends->x_b;
    if (half == 0.0) {
      throw std::invalid_argument("orbit center is undefined for omega = 0");
    }
    const double cot = std::cos(half) / std::sin(half);
    Vec c(2);
    c[0] = 0.5 * ((b[0] + a[0]) + (b[1] - a[1]) * cot);
    c[1] = 0.5 * ((b[1] + a[1]) - (b[0] - a[0]) * cot);
    r.orbit_center = c;
  }
  return r;
}

AnalyticResult one_dim_dalembert_factor(const ClassicalPath& path, double hbar) {
  if (path.model->dim != 1) throw std::invalid_argument("D'Alembert construction is one-dimensional");
  const auto& s = path.samples;
  double vmin = std::abs(s.front().v[0]), vmax = vmin;
  std::vector<double> inv_sq(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double v = std::abs(s[i].v[0]);
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
    inv_sq[i] = 1.0 / (s[i].v[0] * s[i].v[0]);
  }
  if (!(vmin >= 1e-8 * vmax) || vmax == 0.0) {
    std::ostringstream os;
    os << "velocity drops to " << vmin << " (max " << vmax << "); path has a turning point";
    throw Error(ErrorKind::TurningPoint, os.str());
  }
  const double h = path.duration() / static_cast<double>(s.size() - 1);
  const double integral = simpson(inv_sq, h);
  const double mass = path.model->metric(path.x_a, path.t_a)(0, 0);
  const double denom = s.front().v[0] * s.back().v[0] * integral;
  AnalyticResult r;
  r.factor = make_factor(std::sqrt(mass / denom), 1, hbar, FactorMethod::Analytic,
                         "D'Alembert construction, principal roots, arg -pi/4");
  r.frequencies = Vec();
  r.modes = Mat();
  r.action = path.action;
  return r;
}

}  // namespace vvpm
