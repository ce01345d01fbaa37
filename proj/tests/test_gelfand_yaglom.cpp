#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "vvpm/dynamics.hpp"
#include "vvpm/error.hpp"
#include "vvpm/fluctuation.hpp"
#include "vvpm/gelfand_yaglom.hpp"
#include "vvpm/hessian.hpp"

using namespace vvpm;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double kPi = std::numbers::pi;
const Complex kI{0.0, 1.0};

Vec v1(double x) { return Vec::Constant(1, x); }
Mat scalar(double m) { return Mat::Constant(1, 1, m); }

FrequencyFunction constant(const Mat& w2) {
  return [w2](double) { return w2; };
}

FrequencyFunction drifting_2d() {
  return [](double t) {
    Mat w(2, 2);
    w << 1.0 + 0.5 * t, 0.2 * std::sin(t), 0.2 * std::sin(t), 2.0 - 0.3 * t * t;
    return w;
  };
}

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no vvpm::Error thrown");
  return ErrorKind::NoConvergence;
}

}  // namespace

TEST_CASE("boundary solution of the free and oscillator problems", "[gelfand_yaglom]") {
  const JacobiBoundarySolution free = solve_b_direct(constant(scalar(0)), 0, 2);
  CHECK_THAT(free.b_dot_a(0, 0), WithinAbs(0.5, 1e-12));
  CHECK(free.method == BoundaryMethod::DirectODE);
  CHECK(free.grid.front().b.norm() == 0.0);
  CHECK_THAT(free.grid.back().b(0, 0), WithinAbs(1.0, 1e-12));

  for (double T : {0.5, 1.0, 2.5}) {
    const double exact = 1.0 / std::sin(T);  // omega / sin(omega T), omega = 1
    CHECK_THAT(solve_b_direct(constant(scalar(1)), 0, T).b_dot_a(0, 0), WithinRel(exact, 1e-12));
    CHECK_THAT(solve_b_neumann(constant(scalar(1)), 0, T, 16).b_dot_a(0, 0), WithinRel(exact, 1e-12));
    CHECK_THAT(solve_b_time_ordered(constant(scalar(1)), 0, T, 50).b_dot_a(0, 0), WithinRel(exact, 1e-12));
  }
  // Direct RK4 grid follows sin(t) / sin(T).
  const JacobiBoundarySolution s = solve_b_direct(constant(scalar(1)), 0, 1, 1000);
  const BoundaryGridPoint& mid = s.grid[500];
  CHECK_THAT(mid.t, WithinAbs(0.5, 1e-15));
  CHECK_THAT(mid.b(0, 0), WithinRel(std::sin(0.5) / std::sin(1.0), 1e-12));
}

TEST_CASE("reference boundary problems", "[gelfand_yaglom]") {
  auto slow = [](double t) { return scalar((1 + 0.2 * std::sin(t)) * (1 + 0.2 * std::sin(t))); };
  CHECK_THAT(solve_b_direct(slow, 0, 1).b_dot_a(0, 0),
             WithinAbs(solve_b_neumann(slow, 0, 1, 8).b_dot_a(0, 0), 1e-8));
  CHECK_THAT(solve_b_direct(constant(scalar(1)), 0, kPi / 2).b_dot_a(0, 0), WithinAbs(1.0, 1e-12));

  Mat two(2, 2);
  two << 1.0, 0.1, 0.1, 4.0;
  for (int k : {0, 3, 7}) {
    CHECK((solve_b_neumann(constant(Mat::Zero(2, 2)), 0, 1.5, k).b_dot_a - Mat::Identity(2, 2) / 1.5).norm() < 1e-14);
  }
  CHECK_THAT(solve_b_neumann(constant(scalar(1)), 0, 0.5, 4).b_dot_a(0, 0), WithinAbs(2.08582964, 1e-6));
  CHECK((solve_b_neumann(constant(two), 0, 0.3, 6).b_dot_a - solve_b_direct(constant(two), 0, 0.3).b_dot_a).norm() < 1e-9);

  CHECK_THAT(solve_b_time_ordered(constant(scalar(0)), 0, 2, 1).b_dot_a(0, 0), WithinAbs(0.5, 1e-15));
  auto ramp = [](double t) { return scalar(1 + t); };
  CHECK_THAT(solve_b_time_ordered(ramp, 0, 1, 2000).b_dot_a(0, 0),
             WithinAbs(solve_b_direct(ramp, 0, 1).b_dot_a(0, 0), 1e-7));

  // omega(t) = 1 + 0.2 sin t against the BVP route.
  const ModelPtr td = make_model(isotropic_oscillator(scalar(1), [](double t) { return 1 + 0.2 * std::sin(t); }));
  const ClassicalPath p = solve_bvp(td, v1(0), v1(1), 0, 1);
  const FluctuationFactor ref = vvpm_factor(action_hessian_jacobi(p), 1, 1.0);
  CHECK(relative_deviation(gy_fluctuation_factor(solve_b_direct(slow, 0, 1), scalar(1), 1.0), ref) < 1e-6);
}

TEST_CASE("factor from the boundary solution", "[gelfand_yaglom]") {
  const double m = 2.0, w = 1.5, T = 0.8, hbar = 0.3;
  const JacobiBoundarySolution s = solve_b_direct(harmonic_frequency(scalar(m), [&](double) { return scalar(m * w * w); }), 0, T);
  const FluctuationFactor f = gy_fluctuation_factor(s, scalar(m), hbar);
  const Complex exact = std::sqrt(m * w / (2 * kPi * kI * hbar * std::sin(w * T)));
  CHECK(std::abs(f.value - exact) / std::abs(exact) < 1e-12);
  CHECK(f.method == FactorMethod::GelfandYaglom);
  CHECK(f.phase == -kPi / 4);
}

TEST_CASE("the three solvers agree on a time-dependent matrix problem", "[gelfand_yaglom][property]") {
  const FrequencyFunction w = drifting_2d();
  const Mat direct = solve_b_direct(w, 0.1, 1.3, 4000).b_dot_a;
  const JacobiBoundarySolution neu = solve_b_neumann(w, 0.1, 1.3, 16, 32);
  const Mat ordered = solve_b_time_ordered(w, 0.1, 1.3, 2000).b_dot_a;
  CHECK((neu.b_dot_a - direct).norm() / direct.norm() < 1e-10);
  CHECK((ordered - direct).norm() / direct.norm() < 1e-6);
  CHECK(neu.order == 16);
  CHECK(neu.last_term_norm < 1e-12);
}

TEST_CASE("result does not depend on the initial slope", "[gelfand_yaglom][property]") {
  Mat seed(2, 2);
  seed << 2.0, 1.0, -0.5, 0.7;
  const FrequencyFunction w = drifting_2d();
  const Mat a = solve_b_direct(w, 0, 1.2).b_dot_a;
  const Mat b = solve_b_direct(w, 0, 1.2, 2000, seed).b_dot_a;
  CHECK((a - b).norm() <= 1e-12 * a.norm());
}

TEST_CASE("Neumann truncation error shrinks with order", "[gelfand_yaglom][property]") {
  const double exact = 1.0 / std::sin(1.0);
  double prev = 1.0;
  for (int k = 1; k <= 6; ++k) {
    const double err = std::abs(solve_b_neumann(constant(scalar(1)), 0, 1, k).b_dot_a(0, 0) - exact);
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 1e-9);
}

TEST_CASE("agreement with the path determinant", "[gelfand_yaglom]") {
  const ModelPtr q = make_model(quartic_potential(2.0));
  const ClassicalPath p = solve_bvp(q, v1(0.2), v1(1.1), 0, 0.9);
  const FluctuationFactor ref = vvpm_factor(action_hessian_jacobi(p), 1, 1.0);
  const FluctuationFactor gy = gy_fluctuation_factor(solve_b_direct(frequency_function(p), 0, 0.9), scalar(1), 1.0);
  CHECK(relative_deviation(gy, ref) < 1e-8);

  const ModelPtr td = make_model(isotropic_oscillator(scalar(1.5), [](double t) { return 1 + 0.4 * t; }));
  const ClassicalPath pt = solve_bvp(td, v1(0), v1(1), 0, 1.2);
  const FluctuationFactor rt = vvpm_factor(action_hessian_jacobi(pt), 1, 1.0);
  const FrequencyFunction w2 = harmonic_frequency(scalar(1.5), [](double t) {
    return scalar(1.5 * (1 + 0.4 * t) * (1 + 0.4 * t));
  });
  CHECK(relative_deviation(gy_fluctuation_factor(solve_b_time_ordered(w2, 0, 1.2, 2000), scalar(1.5), 1.0), rt) < 1e-6);
}

TEST_CASE("focal points and divergent series", "[gelfand_yaglom][errors]") {
  CHECK(kind_of([] { solve_b_direct(constant(scalar(1)), 0, kPi); }) == ErrorKind::FocalPoint);
  const JacobiBoundarySolution past = solve_b_direct(constant(scalar(1)), 0, 3.5);
  CHECK(kind_of([&] { gy_fluctuation_factor(past, scalar(1), 1.0); }) == ErrorKind::FocalPoint);
  CHECK(kind_of([] { solve_b_neumann(constant(scalar(100)), 0, 1, 2); }) == ErrorKind::SeriesDivergence);
  CHECK_THROWS_AS(solve_b_neumann(constant(scalar(1)), 0, 1, -1), std::invalid_argument);
  CHECK_THROWS_AS(solve_b_direct(constant(scalar(1)), 1, 0), std::invalid_argument);
}
