#include "vvpm/composition.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "vvpm/error.hpp"

namespace vvpm {

namespace {

double relative(Complex a, Complex b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale > 0 ? std::abs(a - b) / scale : 0.0;
}

void check_same_branch(const Vec& half, const Vec& through, const char* which) {
  const double diff = (half - through).cwiseAbs().maxCoeff();
  if (diff > 1e-6 * std::max(1.0, through.cwiseAbs().maxCoeff())) {
    std::ostringstream os;
    os << which << " half path leaves the through trajectory (velocity mismatch " << diff << ")";
    throw Error(ErrorKind::MidpointOffPath, os.str());
  }
}

}  // namespace

bool CompositionReport::passed() const {
  return factor_residual <= thresholds.factor && momentum_mismatch <= thresholds.momentum &&
         action_additivity_residual <= thresholds.action &&
         jacobian_identity_residual <= thresholds.jacobian;
}

Complex gaussian_junction_factor(const Mat& s, double hbar) {
  const Eigen::SelfAdjointEigenSolver<Mat> eig(symmetrized(s), Eigen::EigenvaluesOnly);
  const int d = static_cast<int>(s.rows());
  Complex out = std::pow(Complex(0.0, 2.0 * std::numbers::pi * hbar), 0.5 * d);
  for (int i = 0; i < d; ++i) {
    const double lambda = eig.eigenvalues()[i];
    if (lambda == 0.0) throw Error(ErrorKind::CausticRegion, "junction Hessian is singular");
    out /= std::sqrt(Complex(lambda, 0.0));
  }
  return out;
}

MomentumMatching verify_momentum_matching(const ClassicalPath& full, const ClassicalPath& left,
                                          const ClassicalPath& right) {
  MomentumMatching out;
  out.momentum_mismatch = (left.p_b - right.p_a).cwiseAbs().maxCoeff();
  out.action_additivity_residual = std::abs(left.action + right.action - full.action);
  return out;
}

double verify_jacobian_identity(const ActionHessian& full, const ActionHessian& left,
                                const ActionHessian& right) {
  const double lhs = full.mixed.determinant() * Mat(left.bb + right.aa).determinant();
  const double rhs = left.mixed.determinant() * right.mixed.determinant();
  const double scale = std::max(std::abs(lhs), std::abs(rhs));
  return scale > 0 ? std::abs(lhs - rhs) / scale : 0.0;
}

CompositionReport verify_composition(ModelPtr model, const Vec& x_a, const Vec& x_b, double t_a,
                                     double t_b, double t_mid,
                                     const CompositionThresholds& thresholds,
                                     const std::optional<Vec>& midpoint_offset,
                                     const BvpOptions& options) {
  if (!(t_a < t_mid && t_mid < t_b)) {
    throw std::invalid_argument("verify_composition requires t_a < t_mid < t_b");
  }
  const int d = model->dim;
  const ClassicalPath full = solve_bvp(model, x_a, x_b, t_a, t_b, options);
  const auto through =
      integrate_ivp(*model, x_a, full.initial_velocity(), t_a, t_mid, options.n_steps);

  CompositionReport rep;
  rep.t_mid = t_mid;
  rep.thresholds = thresholds;
  rep.x_mid = through.back().x;
  if (midpoint_offset) {
    if (midpoint_offset->size() != d) throw std::invalid_argument("midpoint offset dimension");
    rep.x_mid += *midpoint_offset;
    rep.diagnostic = true;
  }

  BvpOptions left_opt = options, right_opt = options;
  left_opt.v0_guess = full.initial_velocity();
  right_opt.v0_guess = through.back().v;
  const ClassicalPath left = solve_bvp(model, x_a, rep.x_mid, t_a, t_mid, left_opt);
  const ClassicalPath right = solve_bvp(model, rep.x_mid, x_b, t_mid, t_b, right_opt);
  if (!rep.diagnostic) {
    check_same_branch(left.initial_velocity(), full.initial_velocity(), "left");
    check_same_branch(right.initial_velocity(), through.back().v, "right");
  }

  const MomentumMatching mm = verify_momentum_matching(full, left, right);
  rep.momentum_mismatch = mm.momentum_mismatch;
  rep.action_additivity_residual = mm.action_additivity_residual;

  const ActionHessian h_full = action_hessian_jacobi(full);
  const ActionHessian h_left = action_hessian_jacobi(left);
  const ActionHessian h_right = action_hessian_jacobi(right);
  rep.full = vvpm_factor(h_full, d, model->hbar);
  rep.left = vvpm_factor(h_left, d, model->hbar);
  rep.right = vvpm_factor(h_right, d, model->hbar);
  rep.recombined = rep.left.value * rep.right.value *
                   gaussian_junction_factor(h_left.bb + h_right.aa, model->hbar);
  rep.factor_residual = relative(rep.recombined, rep.full.value);
  rep.jacobian_identity_residual = verify_jacobian_identity(h_full, h_left, h_right);
  return rep;
}

AcausalReport verify_acausal_composition(ModelPtr model, const Vec& x_a, const Vec& x_b,
                                         double t_a, double t_b, double t_mid,
                                         const BvpOptions& options) {
  if (!(t_a < t_b && t_b < t_mid)) {
    throw std::invalid_argument("acausal split requires t_a < t_b < t_mid");
  }
  certify_quadratic(*model, x_a, x_b, t_a, t_mid);
  const int d = model->dim;
  const ClassicalPath full = solve_bvp(model, x_a, x_b, t_a, t_b, options);
  const auto continued =
      integrate_ivp(*model, x_a, full.initial_velocity(), t_a, t_mid, options.n_steps);

  AcausalReport rep;
  rep.t_mid = t_mid;
  rep.x_mid = continued.back().x;

  BvpOptions fwd_opt = options;
  fwd_opt.v0_guess = continued.back().v;
  const ClassicalPath out_leg = solve_bvp(model, x_a, rep.x_mid, t_a, t_mid, fwd_opt);
  // Backward leg x_mid(t_mid) -> x_b(t_b), realized by its forward counterpart.
  BvpOptions back_opt = options;
  back_opt.v0_guess = full.samples.back().v;
  const ClassicalPath back_fwd = solve_bvp(model, x_b, rep.x_mid, t_b, t_mid, back_opt);

  const ActionHessian h_out = action_hessian_jacobi(out_leg);
  const ActionHessian h_back = action_hessian_jacobi(back_fwd);
  rep.full = vvpm_factor(action_hessian_jacobi(full), d, model->hbar);
  const Complex f_out = vvpm_factor(h_out, d, model->hbar).value;
  const Complex f_back = std::pow(Complex(0.0, 1.0), d) * vvpm_factor(h_back, d, model->hbar).value;
  // d^2(A_out + A_back)/dx_mid^2 with A_back = -A(back_fwd).
  rep.recombined = f_out * f_back * gaussian_junction_factor(h_out.bb - h_back.bb, model->hbar);
  rep.factor_residual = relative(rep.recombined, rep.full.value);
  rep.momentum_mismatch = (out_leg.p_b - back_fwd.p_b).cwiseAbs().maxCoeff();
  return rep;
}

}  // namespace vvpm
