#include "vvpm/model.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "vvpm/error.hpp"

namespace vvpm {

namespace {

void check_dim(const LagrangianModel& model, const Vec& v, const char* what) {
  if (v.size() != model.dim) {
    std::ostringstream os;
    os << what << " has dimension " << v.size() << ", model '" << model.name << "' expects "
       << model.dim;
    throw std::invalid_argument(os.str());
  }
}

double fd_step(double x) {
  static const double base = std::cbrt(std::numeric_limits<double>::epsilon());
  return base * std::max(1.0, std::abs(x));
}

std::string point_string(const Vec& x, double t) {
  std::ostringstream os;
  os << "x = (";
  for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << "), t = " << t;
  return os.str();
}

}  // namespace

Eigen::PartialPivLU<Mat> factor_metric(const LagrangianModel& model, const Vec& x, double t) {
  const Mat g = model.metric(x, t);
  Eigen::PartialPivLU<Mat> lu(g);
  const double rc = lu.rcond();
  if (!(rc > 1e-14) || !g.allFinite()) {
    throw Error(ErrorKind::SingularMetric, "metric not invertible at " + point_string(x, t));
  }
  return lu;
}

double evaluate_lagrangian(const LagrangianModel& model, const Vec& x, const Vec& v, double t) {
  check_dim(model, x, "position");
  check_dim(model, v, "velocity");
  return 0.5 * v.dot(model.metric(x, t) * v) + v.dot(model.vector_potential(x, t)) -
         model.potential(x, t);
}

double evaluate_hamiltonian(const LagrangianModel& model, const Vec& x, const Vec& p, double t) {
  check_dim(model, x, "position");
  check_dim(model, p, "momentum");
  const Vec kinetic = p - model.vector_potential(x, t);
  const auto lu = factor_metric(model, x, t);
  return 0.5 * kinetic.dot(lu.solve(kinetic)) + model.potential(x, t);
}

Vec legendre_momentum(const LagrangianModel& model, const Vec& x, const Vec& v, double t) {
  check_dim(model, x, "position");
  check_dim(model, v, "velocity");
  return model.metric(x, t) * v + model.vector_potential(x, t);
}

Mat metric_time_derivative(const LagrangianModel& model, const Vec& x, double t) {
  if (model.metric_dt) return model.metric_dt(x, t);
  const double h = fd_step(t);
  return (model.metric(x, t + h) - model.metric(x, t - h)) / (2.0 * h);
}

Vec vector_potential_time_derivative(const LagrangianModel& model, const Vec& x, double t) {
  if (model.vector_potential_dt) return model.vector_potential_dt(x, t);
  const double h = fd_step(t);
  return (model.vector_potential(x, t + h) - model.vector_potential(x, t - h)) / (2.0 * h);
}

ModelPtr finite_difference_model(std::string name, int dim, LagrangianModel::MatrixField metric,
                                 LagrangianModel::VectorField vector_potential,
                                 LagrangianModel::ScalarField potential, double hbar) {
  if (dim < 1) throw std::invalid_argument("model dimension must be positive");
  auto m = std::make_shared<LagrangianModel>();
  m->name = std::move(name);
  m->dim = dim;
  m->hbar = hbar;
  m->metric = metric;
  m->vector_potential = vector_potential;
  m->potential = potential;

  m->metric_grad = [metric, dim](const Vec& x, double t) {
    std::vector<Mat> out;
    out.reserve(dim);
    for (int k = 0; k < dim; ++k) {
      const double h = fd_step(x[k]);
      Vec xp = x, xm = x;
      xp[k] += h;
      xm[k] -= h;
      out.push_back((metric(xp, t) - metric(xm, t)) / (xp[k] - xm[k]));
    }
    return out;
  };
  m->vector_potential_grad = [vector_potential, dim](const Vec& x, double t) {
    Mat out(dim, dim);
    for (int j = 0; j < dim; ++j) {
      const double h = fd_step(x[j]);
      Vec xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      out.col(j) = (vector_potential(xp, t) - vector_potential(xm, t)) / (xp[j] - xm[j]);
    }
    return out;
  };
  m->potential_grad = [potential, dim](const Vec& x, double t) {
    Vec out(dim);
    for (int i = 0; i < dim; ++i) {
      const double h = fd_step(x[i]);
      Vec xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      out[i] = (potential(xp, t) - potential(xm, t)) / (xp[i] - xm[i]);
    }
    return out;
  };
  // Second derivatives use a larger step: the truncation/roundoff balance is eps^(1/4).
  m->potential_hess = [potential, dim](const Vec& x, double t) {
    static const double base = std::pow(std::numeric_limits<double>::epsilon(), 0.25);
    Mat out(dim, dim);
    for (int i = 0; i < dim; ++i) {
      for (int j = i; j < dim; ++j) {
        const double hi = base * std::max(1.0, std::abs(x[i]));
        const double hj = base * std::max(1.0, std::abs(x[j]));
        auto at = [&](double si, double sj) {
          Vec y = x;
          y[i] += si * hi;
          y[j] += sj * hj;
          return potential(y, t);
        };
        const double val =
            (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * hi * hj);
        out(i, j) = out(j, i) = val;
      }
    }
    return out;
  };
  return m;
}

// ---------------------------------------------------------------------------

namespace {

void require_spd(const Mat& mass, const char* what) {
  if (mass.rows() != mass.cols() || mass.rows() < 1) {
    throw std::invalid_argument(std::string(what) + ": mass matrix must be square and non-empty");
  }
  if ((mass - mass.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, mass.norm())) {
    throw Error(ErrorKind::NonSPDMass, std::string(what) + ": mass matrix is not symmetric");
  }
  Eigen::LLT<Mat> llt(mass);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::NonSPDMass, std::string(what) + ": mass matrix is not positive definite");
  }
}

std::shared_ptr<LagrangianModel> constant_metric_base(std::string name, const Mat& mass,
                                                      double hbar) {
  auto m = std::make_shared<LagrangianModel>();
  const int d = static_cast<int>(mass.rows());
  m->name = std::move(name);
  m->dim = d;
  m->hbar = hbar;
  m->metric = [mass](const Vec&, double) { return mass; };
  m->metric_grad = [d](const Vec&, double) { return std::vector<Mat>(d, Mat::Zero(d, d)); };
  m->metric_dt = [d](const Vec&, double) { return Mat::Zero(d, d); };
  m->vector_potential = [d](const Vec&, double) { return Vec::Zero(d); };
  m->vector_potential_grad = [d](const Vec&, double) { return Mat::Zero(d, d); };
  m->vector_potential_dt = [d](const Vec&, double) { return Vec::Zero(d); };
  m->potential = [](const Vec&, double) { return 0.0; };
  m->potential_grad = [d](const Vec&, double) { return Vec::Zero(d); };
  m->potential_hess = [d](const Vec&, double) { return Mat::Zero(d, d); };
  return m;
}

struct ModelBuilder {
  double hbar;

  ModelPtr operator()(const FreeParticle& p) const {
    require_spd(p.mass, "FreeParticle");
    return constant_metric_base("free_particle", p.mass, hbar);
  }

  ModelPtr operator()(const HarmonicOscillator& p) const {
    require_spd(p.mass, "HarmonicOscillator");
    if (!p.stiffness) throw std::invalid_argument("HarmonicOscillator: stiffness function missing");
    auto m = constant_metric_base("harmonic_oscillator", p.mass, hbar);
    auto k = p.stiffness;
    m->potential = [k](const Vec& x, double t) { return 0.5 * x.dot(k(t) * x); };
    m->potential_grad = [k](const Vec& x, double t) -> Vec { return k(t) * x; };
    m->potential_hess = [k](const Vec&, double t) -> Mat { return symmetrized(k(t)); };
    return m;
  }

  ModelPtr operator()(const MagneticField& p) const {
    if (p.dim < 2) throw std::invalid_argument("MagneticField requires dim >= 2");
    if (!(p.mass > 0)) throw Error(ErrorKind::NonSPDMass, "MagneticField: mass must be positive");
    const int d = p.dim;
    auto m = constant_metric_base("magnetic_field", p.mass * Mat::Identity(d, d), hbar);
    const double coupling = p.mass * p.omega;  // eB/c
    m->vector_potential = [d, coupling](const Vec& x, double) {
      Vec a = Vec::Zero(d);
      a[1] = -coupling * x[0];
      return a;
    };
    m->vector_potential_grad = [d, coupling](const Vec&, double) {
      Mat j = Mat::Zero(d, d);
      j(1, 0) = -coupling;
      return j;
    };
    return m;
  }

  ModelPtr operator()(const OneDimPotential& p) const {
    if (!p.value || !p.first || !p.second) {
      throw std::invalid_argument("OneDimPotential: value and both derivatives are required");
    }
    if (!(p.mass > 0)) throw Error(ErrorKind::NonSPDMass, "OneDimPotential: mass must be positive");
    auto m = constant_metric_base(p.label, Mat::Constant(1, 1, p.mass), hbar);
    auto v = p.value, dv = p.first, d2v = p.second;
    m->potential = [v](const Vec& x, double t) { return v(x[0], t); };
    m->potential_grad = [dv](const Vec& x, double t) { return Vec::Constant(1, dv(x[0], t)); };
    m->potential_hess = [d2v](const Vec& x, double t) { return Mat::Constant(1, 1, d2v(x[0], t)); };
    return m;
  }
};

}  // namespace

ModelPtr make_model(const BuiltinModel& spec, double hbar) {
  if (!(hbar > 0)) throw std::invalid_argument("hbar must be positive");
  return std::visit(ModelBuilder{hbar}, spec);
}

HarmonicOscillator constant_oscillator(const Mat& mass, const Mat& stiffness) {
  if (stiffness.rows() != mass.rows() || stiffness.cols() != mass.cols()) {
    throw std::invalid_argument("stiffness and mass dimensions differ");
  }
  if ((stiffness - stiffness.transpose()).cwiseAbs().maxCoeff() >
      1e-12 * std::max(1.0, stiffness.norm())) {
    throw std::invalid_argument("stiffness matrix must be symmetric");
  }
  return HarmonicOscillator{mass, [stiffness](double) { return stiffness; }, false};
}

HarmonicOscillator isotropic_oscillator(const Mat& mass, std::function<double(double)> omega) {
  return HarmonicOscillator{mass,
                            [mass, omega](double t) {
                              const double w = omega(t);
                              return Mat(w * w * mass);
                            },
                            true};
}

OneDimPotential quartic_potential(double coupling, double mass) {
  OneDimPotential p;
  p.value = [coupling](double x, double) { return 0.25 * coupling * x * x * x * x; };
  p.first = [coupling](double x, double) { return coupling * x * x * x; };
  p.second = [coupling](double x, double) { return 3.0 * coupling * x * x; };
  p.mass = mass;
  p.label = "quartic";
  return p;
}

}  // namespace vvpm
