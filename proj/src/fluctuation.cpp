#include "vvpm/fluctuation.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "vvpm/error.hpp"

namespace vvpm {

std::string_view to_string(FactorMethod method) {
  switch (method) {
    case FactorMethod::VVPM: return "vvpm";
    case FactorMethod::ShortTime: return "short-time";
    case FactorMethod::EnergyHessian: return "energy-hessian";
    case FactorMethod::GeneralVelocityGradient: return "general";
    case FactorMethod::GelfandYaglom: return "gelfand-yaglom";
    case FactorMethod::Analytic: return "analytic";
  }
  return "unknown";
}

FluctuationFactor make_factor(double amplitude, int dim, double hbar, FactorMethod method,
                              std::string branch_note) {
  if (!(amplitude > 0) || !std::isfinite(amplitude)) {
    throw Error(ErrorKind::CausticRegion, "fluctuation amplitude is not finite and positive");
  }
  FluctuationFactor f;
  f.dim = dim;
  f.hbar = hbar;
  f.method = method;
  f.branch_note = std::move(branch_note);
  f.magnitude = amplitude * std::pow(2.0 * std::numbers::pi * hbar, -0.5 * dim);
  f.phase = -0.25 * std::numbers::pi * dim;
  f.value = std::polar(f.magnitude, f.phase);
  return f;
}

double positive_determinant_power(double det, double power, std::string_view what) {
  if (!std::isfinite(det) || !(det > 0)) {
    std::ostringstream os;
    os << "det(" << what << ") = " << det << " is not positive; path is beyond a caustic";
    throw Error(ErrorKind::CausticRegion, os.str());
  }
  return std::pow(det, power);
}

double relative_deviation(const FluctuationFactor& a, const FluctuationFactor& b) {
  const double scale = std::max(std::abs(a.value), std::abs(b.value));
  return scale > 0 ? std::abs(a.value - b.value) / scale : 0.0;
}

FluctuationFactor vvpm_factor(const ActionHessian& h, int dim, double hbar) {
  if (h.mixed.rows() != dim || h.mixed.cols() != dim) {
    throw std::invalid_argument("vvpm_factor: Hessian dimension mismatch");
  }
  const double amp = positive_determinant_power(h.mixed.determinant(), 0.5, "mixed Hessian");
  return make_factor(amp, dim, hbar, FactorMethod::VVPM,
                     "principal roots; (2 pi i hbar)^(-D/2) with arg -D pi/4, det(mixed) > 0");
}

FluctuationFactor short_time_factor(const LagrangianModel& model, const Vec& x_a, double t_a,
                                    double dt) {
  if (!(dt > 0)) throw std::invalid_argument("short_time_factor requires dt > 0");
  factor_metric(model, x_a, t_a);
  const Mat g = model.metric(x_a, t_a) / dt;
  const double amp = positive_determinant_power(g.determinant(), 0.5, "g / dt");
  return make_factor(amp, model.dim, model.hbar, FactorMethod::ShortTime,
                     "principal roots; free-particle anchor, arg -D pi/4");
}

void certify_quadratic(const LagrangianModel& model, const Vec& x_a, const Vec& x_b, double t_a,
                       double t_b, unsigned seed) {
  const int d = model.dim;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double spread = std::max(1.0, (x_b - x_a).norm());
  const double thr = 1e-10;

  auto random_vec = [&] {
    Vec v(d);
    for (int i = 0; i < d; ++i) v[i] = normal(rng);
    return v;
  };
  auto fail = [](const std::string& what) {
    throw Error(ErrorKind::NotQuadraticModel, what + "; energy-Hessian formula needs a quadratic Lagrangian");
  };

  for (int probe = 0; probe < 8; ++probe) {
    const double s = unit(rng);
    const double t = t_a + unit(rng) * (t_b - t_a);
    const Vec x = x_a + s * (x_b - x_a) + spread * random_vec();
    const Vec dir = spread * random_vec();

    const Mat g0 = model.metric(x, t);
    const Mat g1 = model.metric(x + dir, t);
    if ((g1 - g0).norm() > thr * std::max(1.0, g0.norm())) fail("metric depends on position");

    const Vec a0 = model.vector_potential(x, t);
    const Vec a1 = model.vector_potential(x + dir, t);
    const Vec a2 = model.vector_potential(x + 2.0 * dir, t);
    const double a_scale = std::max({1.0, a0.norm(), a1.norm(), a2.norm()});
    if ((a2 - 2.0 * a1 + a0).norm() > thr * a_scale) fail("vector potential is not linear");

    double v[4], v_scale = 1.0;
    for (int k = 0; k < 4; ++k) {
      v[k] = model.potential(x + k * dir, t);
      v_scale = std::max(v_scale, std::abs(v[k]));
    }
    if (std::abs(v[3] - 3.0 * v[2] + 3.0 * v[1] - v[0]) > thr * v_scale) {
      fail("potential is not quadratic");
    }
  }
}

Mat energy_hessian(const ClassicalPath& path, std::optional<double> h_opt) {
  const int d = path.model->dim;
  const double h = h_opt ? *h_opt : 1e-4 * std::max(1.0, (path.x_b - path.x_a).norm());
  if (!(h > 0)) throw std::invalid_argument("energy_hessian requires h > 0");
  BvpOptions options;
  options.n_steps = path.n_steps;
  options.v0_guess = path.initial_velocity();
  auto energy = [&](int si, int i, int sj, int j) {
    Vec xb = path.x_b;
    xb[i] += si * h;
    xb[j] += sj * h;
    return solve_bvp(path.model, path.x_a, xb, path.t_a, path.t_b, options).energy_a;
  };
  Mat out(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) {
      out(i, j) = out(j, i) =
          (energy(1, i, 1, j) - energy(1, i, -1, j) - energy(-1, i, 1, j) + energy(-1, i, -1, j)) /
          (4.0 * h * h);
    }
  }
  return out;
}

FluctuationFactor energy_hessian_factor(const ClassicalPath& path, std::optional<double> h) {
  const LagrangianModel& model = *path.model;
  certify_quadratic(model, path.x_a, path.x_b, path.t_a, path.t_b);
  const double g_det = model.metric(path.x_a, path.t_a).determinant();
  const double amp = positive_determinant_power(g_det, 0.25, "g(t_a)") *
                     positive_determinant_power(energy_hessian(path, h).determinant(), 0.25,
                                                "energy Hessian");
  return make_factor(amp, model.dim, model.hbar, FactorMethod::EnergyHessian,
                     "principal quartic roots, continuous with the short-time limit; arg -D pi/4");
}

FluctuationFactor general_factor(const ClassicalPath& path) {
  const LagrangianModel& model = *path.model;
  const JacobiFields jf = jacobi_fields(path);
  const double det = model.metric(path.x_a, path.t_a).determinant() * jf.dv_a_dx_b.determinant();
  const double amp = positive_determinant_power(det, 0.5, "g(x_a) dv_a/dx_b");
  return make_factor(amp, model.dim, model.hbar, FactorMethod::GeneralVelocityGradient,
                     "principal roots; (2 pi i hbar)^(-D/2) with arg -D pi/4, det > 0");
}

}  // namespace vvpm
