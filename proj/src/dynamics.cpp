#include "vvpm/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "vvpm/error.hpp"

namespace vvpm {

namespace {

void require_dim(const LagrangianModel& model, const Vec& v, const char* what) {
  if (v.size() != model.dim) {
    std::ostringstream os;
    os << what << " has dimension " << v.size() << ", expected " << model.dim;
    throw std::invalid_argument(os.str());
  }
}

// Velocity/position dependent part of the Euler-Lagrange right-hand side,
//   Q_k = 1/2 v.dk g.v - (d_m g_kj v_m) v_j - (d_t g v)_k + ((J^T - J) v)_k - (d_t a)_k,
// with J_ij = d_j a_i, so that g dv/dt = Q - grad V.
Vec gauge_metric_terms(const LagrangianModel& model, const Vec& x, const Vec& v, double t) {
  const int d = model.dim;
  const std::vector<Mat> dg = model.metric_grad(x, t);
  const Mat ja = model.vector_potential_grad(x, t);
  Vec q = (ja.transpose() - ja) * v - metric_time_derivative(model, x, t) * v -
          vector_potential_time_derivative(model, x, t);
  for (int k = 0; k < d; ++k) {
    q[k] += 0.5 * v.dot(dg[k] * v);
    q.noalias() -= v[k] * (dg[k] * v);
  }
  return q;
}

}  // namespace

double simpson(const std::vector<double>& f, double h) {
  if (f.size() < 3 || f.size() % 2 == 0) {
    throw std::invalid_argument("Simpson rule needs an even number of intervals");
  }
  const std::size_t n = f.size() - 1;
  double s = f.front() + f.back();
  for (std::size_t i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f[i];
  return s * h / 3.0;
}

Vec acceleration(const LagrangianModel& model, const Vec& x, const Vec& v, double t) {
  const auto lu = factor_metric(model, x, t);
  return lu.solve(gauge_metric_terms(model, x, v, t) - model.potential_grad(x, t));
}

AccelerationJacobian acceleration_jacobian(const LagrangianModel& model, const Vec& x,
                                           const Vec& v, double t) {
  const int d = model.dim;
  const auto lu = factor_metric(model, x, t);
  const std::vector<Mat> dg = model.metric_grad(x, t);
  const Mat ja = model.vector_potential_grad(x, t);
  const Vec acc = lu.solve(gauge_metric_terms(model, x, v, t) - model.potential_grad(x, t));

  // dQ/dv, exact: Q is quadratic in v.
  Mat dq_dv = ja.transpose() - ja - metric_time_derivative(model, x, t);
  Mat sum_vg = Mat::Zero(d, d);
  for (int m = 0; m < d; ++m) sum_vg += v[m] * dg[m];
  dq_dv -= sum_vg;
  for (int k = 0; k < d; ++k) dq_dv.row(k) += (dg[k] * v).transpose();
  for (int n = 0; n < d; ++n) dq_dv.col(n) -= dg[n] * v;

  // dQ/dx by central differences of Q; identically zero for constant g and linear a.
  static const double base = std::cbrt(std::numeric_limits<double>::epsilon());
  Mat dq_dx(d, d);
  for (int m = 0; m < d; ++m) {
    const double h = base * std::max(1.0, std::abs(x[m]));
    Vec xp = x, xm = x;
    xp[m] += h;
    xm[m] -= h;
    dq_dx.col(m) = (gauge_metric_terms(model, xp, v, t) - gauge_metric_terms(model, xm, v, t)) /
                   (xp[m] - xm[m]);
  }
  Mat rhs_x = dq_dx - model.potential_hess(x, t);
  for (int m = 0; m < d; ++m) rhs_x.col(m) -= dg[m] * acc;

  return AccelerationJacobian{acc, lu.solve(rhs_x), lu.solve(dq_dv)};
}

std::vector<PathSample> integrate_ivp(const LagrangianModel& model, const Vec& x0, const Vec& v0,
                                      double t_a, double t_b, int n_steps) {
  require_dim(model, x0, "x0");
  require_dim(model, v0, "v0");
  if (!(t_b > t_a)) throw std::invalid_argument("integrate_ivp requires t_b > t_a");
  if (n_steps < 8) throw std::invalid_argument("integrate_ivp requires n_steps >= 8");

  const double h = (t_b - t_a) / n_steps;
  std::vector<PathSample> out;
  out.reserve(n_steps + 1);
  Vec x = x0, v = v0;
  out.push_back({t_a, x, v});
  for (int i = 0; i < n_steps; ++i) {
    const double t = t_a + i * h;
    const Vec k1x = v;
    const Vec k1v = acceleration(model, x, v, t);
    const Vec k2x = v + 0.5 * h * k1v;
    const Vec k2v = acceleration(model, x + 0.5 * h * k1x, k2x, t + 0.5 * h);
    const Vec k3x = v + 0.5 * h * k2v;
    const Vec k3v = acceleration(model, x + 0.5 * h * k2x, k3x, t + 0.5 * h);
    const Vec k4x = v + h * k3v;
    const Vec k4v = acceleration(model, x + h * k3x, k4x, t + h);
    x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    out.push_back({i + 1 == n_steps ? t_b : t_a + (i + 1) * h, x, v});
  }
  return out;
}

VariationalTrajectory integrate_variational(const LagrangianModel& model, const Vec& x0,
                                            const Vec& v0, double t_a, double t_b, int n_steps) {
  require_dim(model, x0, "x0");
  require_dim(model, v0, "v0");
  if (!(t_b > t_a)) throw std::invalid_argument("integrate_variational requires t_b > t_a");
  if (n_steps < 8) throw std::invalid_argument("integrate_variational requires n_steps >= 8");

  const int d = model.dim;
  const double h = (t_b - t_a) / n_steps;

  struct Derivative {
    Vec dx, dv;
    Mat dphi;
  };
  auto rhs = [&](double t, const Vec& x, const Vec& v, const Mat& phi) {
    const AccelerationJacobian jac = acceleration_jacobian(model, x, v, t);
    Mat gen(2 * d, 2 * d);
    gen << Mat::Zero(d, d), Mat::Identity(d, d), jac.d_dx, jac.d_dv;
    return Derivative{v, jac.value, gen * phi};
  };

  VariationalTrajectory out;
  out.samples.reserve(n_steps + 1);
  Vec x = x0, v = v0;
  Mat phi = Mat::Identity(2 * d, 2 * d);
  out.samples.push_back({t_a, x, v});
  for (int i = 0; i < n_steps; ++i) {
    const double t = t_a + i * h;
    const Derivative k1 = rhs(t, x, v, phi);
    const Derivative k2 =
        rhs(t + 0.5 * h, x + 0.5 * h * k1.dx, v + 0.5 * h * k1.dv, phi + 0.5 * h * k1.dphi);
    const Derivative k3 =
        rhs(t + 0.5 * h, x + 0.5 * h * k2.dx, v + 0.5 * h * k2.dv, phi + 0.5 * h * k2.dphi);
    const Derivative k4 = rhs(t + h, x + h * k3.dx, v + h * k3.dv, phi + h * k3.dphi);
    x += h / 6.0 * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
    v += h / 6.0 * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv);
    phi += h / 6.0 * (k1.dphi + 2.0 * k2.dphi + 2.0 * k3.dphi + k4.dphi);
    out.samples.push_back({i + 1 == n_steps ? t_b : t_a + (i + 1) * h, x, v});
  }
  out.transition = std::move(phi);
  return out;
}

double classical_action(const LagrangianModel& model, const std::vector<PathSample>& samples) {
  const std::size_t n = samples.size() - 1;
  if (samples.size() < 3 || n % 2 != 0) {
    throw std::invalid_argument("Simpson action needs an even number of steps");
  }
  std::vector<double> lag;
  lag.reserve(samples.size());
  for (const auto& s : samples) lag.push_back(evaluate_lagrangian(model, s.x, s.v, s.t));
  return simpson(lag, (samples.back().t - samples.front().t) / static_cast<double>(n));
}

ClassicalPath solve_bvp(ModelPtr model, const Vec& x_a, const Vec& x_b, double t_a, double t_b,
                        const BvpOptions& options) {
  if (!model) throw std::invalid_argument("solve_bvp: null model");
  require_dim(*model, x_a, "x_a");
  require_dim(*model, x_b, "x_b");
  if (!(t_b > t_a)) throw std::invalid_argument("solve_bvp requires t_b > t_a");
  if (!(options.tol > 0)) throw std::invalid_argument("solve_bvp requires tol > 0");
  if (options.n_steps < 8 || options.n_steps % 2 != 0) {
    throw std::invalid_argument("solve_bvp requires an even n_steps >= 8");
  }

  const double duration = t_b - t_a;
  const double tol = options.tol * std::max(1.0, x_b.lpNorm<Eigen::Infinity>());
  Vec v0 = options.v0_guess ? *options.v0_guess : Vec((x_b - x_a) / duration);
  require_dim(*model, v0, "v0_guess");

  auto run = [&](const Vec& v) {
    return integrate_variational(*model, x_a, v, t_a, t_b, options.n_steps);
  };
  auto residual_of = [&](const VariationalTrajectory& tr) {
    return (tr.samples.back().x - x_b).lpNorm<Eigen::Infinity>();
  };
  auto newton_direction = [&](const VariationalTrajectory& tr) -> Vec {
    if (boundary_block_singular(tr.dx_dv(), tr.dv_dv(), duration)) {
      throw Error(ErrorKind::SingularShootingJacobian,
                  "dx(t_b)/dv0 is singular; the endpoints are conjugate (caustic)");
    }
    return -tr.dx_dv().partialPivLu().solve(tr.samples.back().x - x_b);
  };

  VariationalTrajectory traj = run(v0);
  double residual = residual_of(traj);
  double best = residual;
  int iterations = 0;
  while (!(residual <= tol)) {
    if (iterations >= options.max_iter || !std::isfinite(residual)) {
      throw NoConvergence(iterations, best);
    }
    const Vec step = newton_direction(traj);
    bool accepted = false;
    double lambda = 1.0;
    for (int ls = 0; ls < 30 && !accepted; ++ls, lambda *= 0.5) {
      const Vec trial_v = v0 + lambda * step;
      VariationalTrajectory trial = run(trial_v);
      const double r = residual_of(trial);
      if (std::isfinite(r) && r < residual) {
        v0 = trial_v;
        traj = std::move(trial);
        residual = r;
        accepted = true;
      }
    }
    ++iterations;
    best = std::min(best, residual);
    if (!accepted) throw NoConvergence(iterations, best);
  }
  // One polishing step: finite-difference consumers need the residual at roundoff level.
  if (residual > 0.0) {
    const Vec trial_v = v0 + newton_direction(traj);
    VariationalTrajectory trial = run(trial_v);
    const double r = residual_of(trial);
    if (r < residual) {
      v0 = trial_v;
      traj = std::move(trial);
      residual = r;
    }
  }

  ClassicalPath path;
  path.model = model;
  path.model_ref = model->name;
  path.x_a = x_a;
  path.x_b = x_b;
  path.t_a = t_a;
  path.t_b = t_b;
  path.n_steps = options.n_steps;
  path.samples = std::move(traj.samples);
  path.action = classical_action(*model, path.samples);
  const PathSample& last = path.samples.back();
  path.p_a = legendre_momentum(*model, x_a, v0, t_a);
  path.p_b = legendre_momentum(*model, last.x, last.v, t_b);
  path.energy_a = evaluate_hamiltonian(*model, x_a, path.p_a, t_a);
  path.bvp_residual = residual;
  path.iterations = iterations;
  return path;
}

PathSample sample_at(const ClassicalPath& path, double t) {
  if (t < path.t_a || t > path.t_b) throw std::invalid_argument("sample_at: t outside [t_a, t_b]");
  const double h = path.duration() / path.n_steps;
  const double u = (t - path.t_a) / h;
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(std::floor(u)), path.n_steps - 1);
  const double s = u - static_cast<double>(k);
  if (std::abs(s) < 1e-12) return path.samples[k];
  if (std::abs(s - 1.0) < 1e-12) return path.samples[k + 1];

  const PathSample& p = path.samples[k];
  const PathSample& q = path.samples[k + 1];
  const double s2 = s * s, s3 = s2 * s;
  PathSample out;
  out.t = t;
  out.x = (2 * s3 - 3 * s2 + 1) * p.x + (s3 - 2 * s2 + s) * h * p.v + (-2 * s3 + 3 * s2) * q.x +
          (s3 - s2) * h * q.v;
  const Vec acc_p = acceleration(*path.model, p.x, p.v, p.t);
  const Vec acc_q = acceleration(*path.model, q.x, q.v, q.t);
  out.v = (2 * s3 - 3 * s2 + 1) * p.v + (s3 - 2 * s2 + s) * h * acc_p + (-2 * s3 + 3 * s2) * q.v +
          (s3 - s2) * h * acc_q;
  return out;
}

double path_energy(const ClassicalPath& path, double t) {
  if (t < path.t_a || t > path.t_b) throw std::invalid_argument("path_energy: t outside [t_a, t_b]");
  const PathSample q = sample_at(path, t);
  return evaluate_hamiltonian(*path.model, q.x, legendre_momentum(*path.model, q.x, q.v, t), t);
}

}  // namespace vvpm
