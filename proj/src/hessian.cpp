#include "vvpm/hessian.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

#include "vvpm/error.hpp"

namespace vvpm {

namespace {

// d p / d x at fixed v: (i,m) = d_m g_ij v_j + d_m a_i.
Mat momentum_position_gradient(const LagrangianModel& model, const Vec& x, const Vec& v,
                               double t) {
  const std::vector<Mat> dg = model.metric_grad(x, t);
  Mat out = model.vector_potential_grad(x, t);
  for (int m = 0; m < model.dim; ++m) out.col(m) += dg[m] * v;
  return out;
}

struct PhaseSpaceMap {
  Mat xx, xp, px, pp;  // d(x_b, p_b) / d(x_a, p_a)
  Mat transition;
};

PhaseSpaceMap phase_space_map(const ClassicalPath& path) {
  const LagrangianModel& model = *path.model;
  const VariationalTrajectory traj = integrate_variational(
      model, path.x_a, path.initial_velocity(), path.t_a, path.t_b, path.n_steps);
  if (boundary_block_singular(traj.dx_dv(), traj.dv_dv(), path.duration())) {
    throw Error(ErrorKind::ConjugatePoint,
                "Jacobi boundary matrix dx(t_b)/dv(t_a) is singular; endpoints are conjugate");
  }
  const PathSample& a = traj.samples.front();
  const PathSample& b = traj.samples.back();
  const Mat g_a_inv = factor_metric(model, a.x, a.t).inverse();
  const Mat g_b = model.metric(b.x, b.t);
  const Mat p_a = momentum_position_gradient(model, a.x, a.v, a.t);
  const Mat p_b = momentum_position_gradient(model, b.x, b.v, b.t);

  PhaseSpaceMap out;
  out.xp = traj.dx_dv() * g_a_inv;
  out.xx = traj.dx_dx() - out.xp * p_a;
  out.pp = (p_b * traj.dx_dv() + g_b * traj.dv_dv()) * g_a_inv;
  out.px = p_b * traj.dx_dx() + g_b * traj.dv_dx() - out.pp * p_a;
  out.transition = traj.transition;
  return out;
}

}  // namespace

JacobiFields jacobi_fields(const ClassicalPath& path) {
  const PhaseSpaceMap m = phase_space_map(path);
  const int d = path.model->dim;
  const auto xp_lu = m.xp.partialPivLu();
  JacobiFields out;
  out.transition = m.transition;
  out.dx_b_dp_a = m.xp;
  out.dv_a_dx_b = m.transition.topRightCorner(d, d).inverse();
  out.dp_b_dx_a = m.px - m.pp * xp_lu.solve(m.xx);
  return out;
}

ActionHessian action_hessian_jacobi(const ClassicalPath& path) {
  const PhaseSpaceMap m = phase_space_map(path);
  const Mat xp_inv = m.xp.inverse();
  ActionHessian h;
  h.method = HessianMethod::JacobiField;
  h.n_steps = path.n_steps;
  // delta p_a = xp^-1 (delta x_b - xx delta x_a); dA = p_b dx_b - p_a dx_a.
  h.mixed = xp_inv;
  h.aa = xp_inv * m.xx;
  h.bb = m.pp * xp_inv;
  return h;
}

ActionHessian action_hessian_fd(const ClassicalPath& base, std::optional<double> h_opt,
                                BvpOptions options) {
  const int d = base.model->dim;
  const double h = h_opt ? *h_opt : 1e-4 * std::max(1.0, (base.x_b - base.x_a).norm());
  if (!(h > 0)) throw std::invalid_argument("action_hessian_fd requires h > 0");
  options.n_steps = base.n_steps;
  options.v0_guess = base.initial_velocity();

  auto action = [&](const Vec& xa, const Vec& xb) {
    return solve_bvp(base.model, xa, xb, base.t_a, base.t_b, options).action;
  };
  auto unit = [d](int i) { return Vec(Vec::Unit(d, i)); };

  // Four-point cross stencil; for i == j it reduces to the 2h second difference.
  auto cross = [&](auto&& eval) {
    Mat out(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        out(i, j) = (eval(+1, i, +1, j) - eval(+1, i, -1, j) - eval(-1, i, +1, j) +
                     eval(-1, i, -1, j)) /
                    (4.0 * h * h);
      }
    }
    return out;
  };

  ActionHessian out;
  out.method = HessianMethod::FiniteDifference;
  out.n_steps = base.n_steps;
  out.fd_step = h;
  out.mixed = -cross([&](int si, int i, int sj, int j) {
    return action(base.x_a + si * h * unit(i), base.x_b + sj * h * unit(j));
  });
  out.aa = cross([&](int si, int i, int sj, int j) {
    return action(base.x_a + si * h * unit(i) + sj * h * unit(j), base.x_b);
  });
  out.bb = cross([&](int si, int i, int sj, int j) {
    return action(base.x_a, base.x_b + si * h * unit(i) + sj * h * unit(j));
  });
  return out;
}

std::function<Mat(double)> frequency_function(ClassicalPath path) {
  const LagrangianModel& model = *path.model;
  for (const auto& s : path.samples) {
    if (model.vector_potential(s.x, s.t).cwiseAbs().maxCoeff() > 1e-14) {
      throw Error(ErrorKind::VectorPotentialPresent,
                  "frequency matrix is defined only for a vanishing vector potential");
    }
  }
  auto shared = std::make_shared<const ClassicalPath>(std::move(path));
  return [shared](double t) -> Mat {
    const LagrangianModel& m = *shared->model;
    const PathSample s = sample_at(*shared, t);
    return factor_metric(m, s.x, t).solve(m.potential_hess(s.x, t));
  };
}

Mat frequency_matrix_along_path(const ClassicalPath& path, double t) {
  return frequency_function(path)(t);
}

}  // namespace vvpm
