// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>

#include "doctest.h"
#include "impulsive/system.hpp"

using namespace impulsive;

namespace {

Mat scalar_mat(double v) {
  Mat m(1, 1);
  m << v;
  return m;
}

Vec scalar_vec(double v) {
  Vec x(1);
  x << v;
  return x;
}

// Pure exponential decay with identity-scaled jumps x -> (1 + delta) x.
ImpulsiveSystem decaying_system(double delta, ImpulseSequence seq) {
  ImpulsiveSystem sys;
  sys.n = 1;
  sys.m = 1;
  sys.f = [](double, const Vec& x, const Vec&) { return Vec(-x); };
  sys.g = [delta](double, const Vec& x, const Vec&) { return Vec((1.0 + delta) * x); };
  sys.seq = std::move(seq);
  return sys.finalize();
}

}  // namespace

TEST_SUITE_BEGIN("system");

TEST_CASE("unit jumps reproduce the pure exponential at every sample") {
  auto sys = decaying_system(0.0, harmonic_sequence(100));
  auto traj = simulate(sys, 1.0, scalar_vec(1.0), InputSignal::zero(1), 5.0, {1e-3, 1e12});
  for (const auto& s : traj.samples)
    CHECK(s.x(0) == doctest::Approx(std::exp(-(s.t - 1.0))).epsilon(1e-7));
  CHECK(traj.final_state()(0) == doctest::Approx(std::exp(-4.0)).epsilon(1e-7));
}

TEST_CASE("a solution begins by flowing even when t0 is an impulse time") {
  auto sys = decaying_system(0.5, ImpulseSequence({1.0, 2.0}, 3.0));
  auto traj = simulate(sys, 1.0, scalar_vec(1.0), InputSignal::zero(1), 3.0, {1e-3, 1e12});
  REQUIRE(!traj.jumps.empty());
  CHECK(traj.jumps.size() == 1);  // only the impulse at t = 2
  CHECK(traj.jumps.front().second == 2.0);
  CHECK(traj.samples.front().phase == TrajectorySample::Phase::flow);
  // Exactly one pre/post pair at t = 2.
  int pre = 0, post = 0;
  for (const auto& s : traj.samples) {
    if (s.phase == TrajectorySample::Phase::pre_jump) ++pre;
    if (s.phase == TrajectorySample::Phase::post_jump) ++post;
  }
  CHECK(pre == 1);
  CHECK(post == 1);
}

TEST_CASE("zero flow with identity jumps holds the state") {
  ImpulsiveSystem sys;
  sys.n = 2;
  sys.m = 1;
  sys.f = [](double, const Vec& x, const Vec&) { return Vec(Vec::Zero(x.size())); };
  sys.g = [](double, const Vec& x, const Vec&) { return x; };
  sys.seq = ImpulseSequence({0.5, 1.5}, 2.0);
  sys.finalize();
  Vec x0(2);
  x0 << 3.0, -4.0;
  auto u = InputSignal::callable(1, [](double t) { return Vec(scalar_vec(std::sin(t))); });
  auto traj = simulate(sys, 0.0, x0, u, 2.0, {1e-2, 1e12});
  for (const auto& s : traj.samples) CHECK((s.x - x0).norm() == 0.0);
}

TEST_CASE("expanding jumps against harmonic gaps match the product oracle") {
  auto sys = decaying_system(0.1, harmonic_sequence(101));
  double t_end = harmonic_sequence(101).times().back();
  auto traj = simulate(sys, 1.0, scalar_vec(1.0), InputSignal::zero(1), t_end, {1e-3, 1e12});
  double oracle = 1.0;
  for (int k = 1; k <= 100; ++k) oracle *= 1.1 * std::exp(-1.0 / k);
  double ratio = traj.final_state()(0);
  CHECK(ratio == doctest::Approx(oracle).epsilon(1e-9));
  CHECK(ratio >= 70.0);
  CHECK(ratio <= 85.0);
}

TEST_CASE("escape guard reports the blow-up time") {
  ImpulsiveSystem sys;
  sys.n = 1;
  sys.m = 1;
  sys.f = [](double, const Vec& x, const Vec&) { return Vec(10.0 * x); };
  sys.g = [](double, const Vec& x, const Vec&) { return x; };
  sys.seq = ImpulseSequence({}, 10.0);
  sys.finalize();
  try {
    simulate(sys, 0.0, scalar_vec(1.0), InputSignal::zero(1), 10.0, {1e-3, 1e6});
    CHECK(false);
  } catch (const EscapeError& e) {
    CHECK(e.time() > 1.0);
    CHECK(e.time() < 2.0);  // e^{10 t} crosses 1e6 near t = 1.38
  }
}

TEST_CASE("linear systems simulate to the same solution as the transition form") {
  std::mt19937 rng(41u);
  std::uniform_real_distribution<double> off(-0.3, 0.3);
  for (int trial = 0; trial < 6; ++trial) {
    int n = 2 + static_cast<int>(rng() % 2);
    Mat a(n, n), r(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        a(i, j) = (i == j) ? -1.5 : off(rng);
        r(i, j) = (i == j) ? 0.6 : 0.1 * off(rng);
      }
    ImpulsiveSystem sys;
    sys.n = n;
    sys.m = 1;
    sys.A = MatrixFunction::constant(a);
    sys.R = JumpMatrixMap::constant(r);
    sys.seq = ImpulseSequence({0.8, 1.7, 2.4}, 3.0);
    sys.finalize();
    Vec x0(n);
    for (int i = 0; i < n; ++i) x0(i) = off(rng) * 3.0;
    auto traj = simulate(sys, 0.0, x0, InputSignal::zero(1), 3.0, {1e-3, 1e12});
    Vec by_voc = variation_of_constants(sys.linear_part(), AffineDriving{}, 0.0, x0, 3.0, 1e-3);
    CHECK((traj.final_state() - by_voc).norm() < 1e-6);
  }
}

TEST_CASE("endpoint error shrinks at fourth order in the step") {
  ImpulsiveSystem sys;
  sys.n = 1;
  sys.m = 1;
  sys.f = [](double, const Vec& x, const Vec&) {
    return Vec(scalar_vec(-x(0) + 0.2 * x(0) * x(0) * x(0)));
  };
  sys.g = [](double, const Vec& x, const Vec&) { return x; };
  sys.seq = ImpulseSequence({}, 2.0);
  sys.finalize();
  auto endpoint = [&](double h) {
    return simulate(sys, 0.0, scalar_vec(1.0), InputSignal::zero(1), 1.5, {h, 1e12})
        .final_state()(0);
  };
  double ref = endpoint(0.05 / 16.0);
  double e1 = std::abs(endpoint(0.05) - ref);
  double e2 = std::abs(endpoint(0.025) - ref);
  double ratio = e1 / e2;
  CHECK(ratio > 8.0);
  CHECK(ratio < 24.0);
}

TEST_CASE("restart on a grid point off the impulse set is seamless") {
  auto sys = decaying_system(0.3, ImpulseSequence({0.7, 1.9}, 3.0));
  const double step = 0.01;
  const double t1 = 0.7 + step * 30;  // on the post-impulse step grid
  auto full = simulate(sys, 0.0, scalar_vec(1.0), InputSignal::zero(1), 2.6, {step, 1e12});
  auto first = simulate(sys, 0.0, scalar_vec(1.0), InputSignal::zero(1), t1, {step, 1e12});
  auto second = simulate(sys, t1, first.final_state(), InputSignal::zero(1), 2.6, {step, 1e12});
  CHECK(std::abs(full.final_state()(0) - second.final_state()(0)) < 1e-9);
}

TEST_CASE("bilinear perturbation stays inside its declared bound") {
  ImpulsiveSystem sys;
  sys.n = 1;
  sys.m = 1;
  sys.A = MatrixFunction::constant(scalar_mat(-1.0));
  sys.R = JumpMatrixMap::constant(scalar_mat(0.5));
  sys.phi = [](double, const Vec& x, const Vec& u) {
    return Vec(scalar_vec(u(0) * 0.5 * x(0) + u(0)));
  };
  sys.psi = [](double, const Vec&, const Vec& u) { return Vec(scalar_vec(u(0))); };
  sys.seq = ImpulseSequence::periodic(1.0, 1.0, 10.0);
  sys.bound = PerturbationBound(0.0, ScalarFunction::constant(0.0), 0.5, 1.0,
                                KFunction::identity());
  sys.finalize();
  auto rep = validate_decomposition(sys, 500, 3.0, 2.0, 424242u);
  CHECK(rep.pass);
  CHECK(rep.worst_margin >= -1e-12);
  CHECK(rep.seed == 424242u);
}

TEST_CASE("zero perturbation passes with the bound value as margin") {
  ImpulsiveSystem sys;
  sys.n = 1;
  sys.m = 1;
  sys.A = MatrixFunction::constant(scalar_mat(-1.0));
  sys.R = JumpMatrixMap::constant(scalar_mat(0.5));
  sys.seq = ImpulseSequence({1.0}, 2.0);
  sys.bound = PerturbationBound(0.1, ScalarFunction::constant(0.0), 0.0, 2.0,
                                KFunction::identity());
  sys.f = [&](double t, const Vec& x, const Vec&) { return Vec(scalar_mat(-1.0) * x); };
  sys.g = [&](double, const Vec& x, const Vec&) { return Vec(scalar_mat(0.5) * x); };
  sys.finalize();
  auto rep = validate_decomposition(sys, 200, 1.0, 1.0, 7u);
  CHECK(rep.pass);
  CHECK(rep.worst_margin >= 0.0);
  CHECK(rep.consistency_residual < 1e-10);
}

TEST_CASE("quadratic perturbation escapes any linear-in-state bound") {
  ImpulsiveSystem sys;
  sys.n = 1;
  sys.m = 1;
  sys.A = MatrixFunction::constant(scalar_mat(-1.0));
  sys.R = JumpMatrixMap::constant(scalar_mat(1.0));
  sys.phi = [](double, const Vec& x, const Vec&) { return Vec(scalar_vec(x(0) * x(0))); };
  sys.seq = ImpulseSequence({1.0}, 2.0);
  sys.bound = PerturbationBound(0.0, ScalarFunction::constant(0.0), 0.0, 1.0,
                                KFunction::identity());
  sys.finalize();
  auto rep = validate_decomposition(sys, 300, 10.0, 1.0, 9u);
  CHECK_FALSE(rep.pass);
  CHECK(rep.worst_margin < 0.0);
}

TEST_CASE("theta budget sums the integral and the impulse charges") {
  ImpulsiveSystem sys;
  sys.n = 1;
  sys.m = 1;
  sys.A = MatrixFunction::constant(scalar_mat(-1.0));
  sys.R = JumpMatrixMap::constant(scalar_mat(1.0));

  sys.seq = ImpulseSequence({}, 40.0);
  sys.bound = PerturbationBound(0.0, ScalarFunction::constant(0.0), 0.0, 0.0,
                                KFunction::identity());
  sys.finalize();
  CHECK(theta_budget(sys, 1e-2) == 0.0);

  sys.bound->theta = ScalarFunction::callable([](double t) { return std::exp(-t); });
  CHECK(theta_budget(sys, 1e-3) == doctest::Approx(1.0).epsilon(1e-6));

  sys.seq = ImpulseSequence({0.5}, 40.0);
  sys.bound->theta = ScalarFunction::piecewise({0.0, 1.0}, {1.0, 0.0});
  CHECK(theta_budget(sys, 1e-2) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("system configuration validation") {
  ImpulsiveSystem sys;
  sys.n = 1;
  sys.m = 1;
  CHECK_THROWS_AS(sys.finalize(), Error);  // no flow at all
  sys.f = [](double, const Vec& x, const Vec&) { return x; };
  CHECK_THROWS_AS(sys.finalize(), Error);  // no jump at all
  sys.g = [](double, const Vec& x, const Vec&) { return x; };
  sys.seq = ImpulseSequence({1.0}, 2.0);
  CHECK_NOTHROW(sys.finalize());
  ImpulsiveSystem bad = sys;
  bad.phi = bad.f;  // phi without A
  CHECK_THROWS_AS(bad.finalize(), Error);
}

TEST_SUITE_END();
