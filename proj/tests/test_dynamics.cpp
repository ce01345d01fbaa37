#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "vvpm/dynamics.hpp"
#include "vvpm/error.hpp"

using namespace vvpm;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double kPi = std::numbers::pi;

Vec v1(double x) { return Vec::Constant(1, x); }
Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}
Mat scalar(double m) { return Mat::Constant(1, 1, m); }

ModelPtr free1() { return make_model(FreeParticle{scalar(1)}); }
ModelPtr ho1() { return make_model(constant_oscillator(scalar(1), scalar(1))); }

// Independent RK4 for x'' = -w(t)^2 x, used as a fine-grid reference.
std::pair<double, double> reference_ho(double x0, double v0, double T, int n, double (*w)(double)) {
  double x = x0, v = v0;
  const double h = T / n;
  auto acc = [&](double t, double xx) { return -w(t) * w(t) * xx; };
  for (int k = 0; k < n; ++k) {
    const double t = k * h;
    const double k1x = v, k1v = acc(t, x);
    const double k2x = v + 0.5 * h * k1v, k2v = acc(t + 0.5 * h, x + 0.5 * h * k1x);
    const double k3x = v + 0.5 * h * k2v, k3v = acc(t + 0.5 * h, x + 0.5 * h * k2x);
    const double k4x = v + h * k3v, k4v = acc(t + h, x + h * k3x);
    x += h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x);
    v += h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v);
  }
  return {x, v};
}

}  // namespace

TEST_CASE("initial value problems", "[dynamics]") {
  auto s = integrate_ivp(*free1(), v1(0), v1(1), 0, 1, 100);
  CHECK_THAT(s.back().x[0], WithinAbs(1.0, 1e-14));
  CHECK_THAT(s.back().v[0], WithinAbs(1.0, 1e-14));
  CHECK(s.size() == 101);

  s = integrate_ivp(*ho1(), v1(1), v1(0), 0, kPi / 2, 1000);
  CHECK_THAT(s.back().x[0], WithinAbs(0.0, 1e-8));
  CHECK_THAT(s.back().v[0], WithinAbs(-1.0, 1e-8));

  const ModelPtr mag = make_model(MagneticField{1.0, 1.0, 2});
  s = integrate_ivp(*mag, v2(0, 0), v2(1, 0), 0, 2 * kPi, 1000);
  CHECK(s.back().x.norm() < 1e-6);
  // Sense of rotation follows the Lagrangian: x1'' = -omega x2', x2'' = omega x1'.
  const Vec acc = acceleration(*mag, v2(0, 0), v2(1, 0), 0);
  CHECK_THAT(acc[0], WithinAbs(0.0, 1e-15));
  CHECK_THAT(acc[1], WithinAbs(1.0, 1e-15));

  CHECK_THROWS_AS(integrate_ivp(*free1(), v1(0), v1(1), 0, 1, 4), std::invalid_argument);
  CHECK_THROWS_AS(integrate_ivp(*free1(), v1(0), v1(1), 1, 0, 100), std::invalid_argument);
}

TEST_CASE("boundary value problems", "[dynamics]") {
  ClassicalPath p = solve_bvp(free1(), v1(0), v1(3), 0, 2);
  CHECK_THAT(p.initial_velocity()[0], WithinAbs(1.5, 1e-12));
  CHECK_THAT(p.action, WithinAbs(2.25, 1e-12));
  CHECK(p.samples.front().x[0] == 0.0);
  CHECK(p.bvp_residual <= 1e-12);
  CHECK(p.samples.size() == 1001);

  p = solve_bvp(ho1(), v1(0), v1(1), 0, kPi / 2);
  CHECK_THAT(p.action, WithinAbs(0.0, 1e-8));  // (cot T (x_a^2 + x_b^2) - 2 x_a x_b / sin T) / 2

  try {
    solve_bvp(ho1(), v1(0), v1(1), 0, kPi);
    FAIL("expected SingularShootingJacobian");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SingularShootingJacobian);
  }
}

TEST_CASE("shooting reports non-convergence", "[dynamics][errors]") {
  BvpOptions o;
  o.max_iter = 1;
  try {
    solve_bvp(make_model(quartic_potential(50.0)), v1(0), v1(2), 0, 1, o);
    FAIL("expected NoConvergence");
  } catch (const NoConvergence& e) {
    CHECK(e.kind() == ErrorKind::NoConvergence);
    CHECK(e.iterations() == 1);
    CHECK(e.best_residual() > 1e-12);
  }
}

TEST_CASE("trajectory energy", "[dynamics]") {
  const ClassicalPath f = solve_bvp(free1(), v1(0), v1(2), 0, 2);
  for (double t : {0.0, 0.5, 1.234, 2.0}) CHECK_THAT(path_energy(f, t), WithinAbs(0.5, 1e-12));
  const ClassicalPath h = solve_bvp(ho1(), v1(0), v1(1), 0, kPi / 2);
  for (double t : {0.0, 0.3, 1.0, kPi / 2}) CHECK_THAT(path_energy(h, t), WithinAbs(0.5, 1e-9));
  CHECK_THAT(h.energy_a, WithinAbs(0.5, 1e-9));

  // omega(t) = 1 + 0.1 t: energy changes; compare with a 10x finer independent integration.
  auto w = [](double t) { return 1.0 + 0.1 * t; };
  const ModelPtr td = make_model(isotropic_oscillator(scalar(1), w));
  const ClassicalPath p = solve_bvp(td, v1(0), v1(1), 0, 1.0);
  const auto ref = reference_ho(0.0, p.initial_velocity()[0], 1.0, 10000,
                                [](double t) { return 1.0 + 0.1 * t; });
  const double e_ref = 0.5 * ref.second * ref.second + 0.5 * w(1.0) * w(1.0) * ref.first * ref.first;
  CHECK_THAT(path_energy(p, 1.0), WithinRel(e_ref, 1e-10));
  CHECK(std::abs(path_energy(p, 1.0) - p.energy_a) > 1e-3);
}

TEST_CASE("endpoint momenta are action gradients", "[dynamics][property]") {
  BvpOptions o;
  o.n_steps = 2000;
  const ModelPtr models[] = {make_model(quartic_potential()), ho1()};
  for (const auto& m : models) {
    const ClassicalPath p = solve_bvp(m, v1(0.1), v1(1), 0, 0.6, o);
    const double h = 1e-5;
    o.v0_guess = p.initial_velocity();
    const double dadb = (solve_bvp(m, v1(0.1), v1(1 + h), 0, 0.6, o).action -
                         solve_bvp(m, v1(0.1), v1(1 - h), 0, 0.6, o).action) / (2 * h);
    const double dada = (solve_bvp(m, v1(0.1 + h), v1(1), 0, 0.6, o).action -
                         solve_bvp(m, v1(0.1 - h), v1(1), 0, 0.6, o).action) / (2 * h);
    CHECK_THAT(p.p_b[0], WithinRel(dadb, 1e-6));
    CHECK_THAT(p.p_a[0], WithinRel(-dada, 1e-6));
    o.v0_guess.reset();
  }
}

TEST_CASE("fourth-order integrator and energy drift", "[dynamics][property]") {
  const ModelPtr m = make_model(quartic_potential());
  const Vec x0 = v1(0.3), v0 = v1(1.2);
  const double ref = integrate_ivp(*m, x0, v0, 0, 3, 12800).back().x[0];
  const double e1 = std::abs(integrate_ivp(*m, x0, v0, 0, 3, 100).back().x[0] - ref);
  const double e2 = std::abs(integrate_ivp(*m, x0, v0, 0, 3, 200).back().x[0] - ref);
  CHECK_THAT(e1 / e2, WithinRel(16.0, 0.1));

  auto drift = [&](int n) {
    const auto s = integrate_ivp(*m, x0, v0, 0, 3, n);
    const double e0 = 0.5 * v0.squaredNorm() + m->potential(x0, 0);
    double d = 0;
    for (const auto& q : s) d = std::max(d, std::abs(0.5 * q.v.squaredNorm() + m->potential(q.x, q.t) - e0));
    return d;
  };
  CHECK_THAT(drift(100) / drift(200), WithinRel(16.0, 0.15));
}

TEST_CASE("action is stationary under endpoint-preserving bumps", "[dynamics][property]") {
  const ModelPtr m = make_model(quartic_potential());
  const ClassicalPath p = solve_bvp(m, v1(0), v1(1), 0, 0.5);
  auto delta = [&](double eps) {
    auto s = p.samples;
    for (auto& q : s) {
      const double u = q.t / 0.5;
      q.x[0] += eps * u * u * (1 - u);
      q.v[0] += eps * (2 * u - 3 * u * u) / 0.5;
    }
    return classical_action(*m, s) - p.action;
  };
  const double r = delta(1e-3) / delta(1e-4);
  CHECK_THAT(r, WithinRel(100.0, 1e-3));
}

TEST_CASE("interpolated samples", "[dynamics]") {
  const ClassicalPath p = solve_bvp(ho1(), v1(0), v1(1), 0, kPi / 2);
  const PathSample s = sample_at(p, 0.7777);
  CHECK_THAT(s.x[0], WithinAbs(std::sin(0.7777), 1e-10));
  CHECK_THAT(s.v[0], WithinAbs(std::cos(0.7777), 1e-10));
}
