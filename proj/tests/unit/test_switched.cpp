// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>
#include <unsupported/Eigen/MatrixFunctions>

#include "impulsive/switched.hpp"

using namespace impulsive;

namespace {

SwitchedMode scalar_mode(double a) {
  SwitchedMode mode;
  mode.A = MatrixFunction::constant(Mat::Constant(1, 1, a));
  return mode;
}

SwitchedReset scalar_reset(double r) {
  SwitchedReset reset;
  reset.R = MatrixFunction::constant(Mat::Constant(1, 1, r));
  return reset;
}

// Two scalar modes xdot = -x and xdot = -2x with scaling resets.
SwitchedSystem two_scalar_modes(double r01, double r10) {
  SwitchedSystem sw;
  sw.n = 1;
  sw.m = 1;
  sw.modes = {scalar_mode(-1.0), scalar_mode(-2.0)};
  sw.resets[{0, 1}] = scalar_reset(r01);
  sw.resets[{1, 0}] = scalar_reset(r10);
  return sw;
}

Vec simulate_cast(const SwitchedSystem& sw, const SwitchingSignal& nu, const Vec& x0,
                  double t_end) {
  ImpulsiveSystem sys = cast_to_gswl(sw, nu);
  return simulate(sys, 0.0, x0, InputSignal::zero(sw.m), t_end).final_state();
}

}  // namespace

TEST_SUITE("switched") {

TEST_CASE("two modes with identity resets reproduce the piecewise exponential") {
  SwitchedSystem sw = two_scalar_modes(1.0, 1.0);
  SwitchingSignal nu(0, {{1.0, 1}}, 2.0);
  Vec x0 = Vec::Constant(1, 1.0);
  const double got = simulate_cast(sw, nu, x0, 2.0)(0);
  CHECK(got == doctest::Approx(std::exp(-3.0)).epsilon(0).scale(0).epsilon(1e-7));
  CHECK(std::abs(got - std::exp(-3.0)) <= 1e-7);
}

TEST_CASE("a scaling reset multiplies in at the switch") {
  SwitchedSystem sw = two_scalar_modes(0.5, 1.0);
  SwitchingSignal nu(0, {{1.0, 1}}, 2.0);
  Vec x0 = Vec::Constant(1, 1.0);
  const double got = simulate_cast(sw, nu, x0, 2.0)(0);
  CHECK(std::abs(got - 0.5 * std::exp(-3.0)) <= 1e-7);
}

TEST_CASE("a single-mode signal casts to the mode itself with an empty sequence") {
  SwitchedSystem sw = two_scalar_modes(1.0, 1.0);
  SwitchingSignal nu(1, {}, 3.0);
  ImpulsiveSystem sys = cast_to_gswl(sw, nu);
  CHECK(sys.seq.empty());
  CHECK(sys.has_linear_part());

  ImpulsiveSystem direct;
  direct.n = 1;
  direct.m = 1;
  direct.A = sw.modes[1].A;
  direct.g = [](double, const Vec& x, const Vec&) { return x; };
  direct.seq = ImpulseSequence({}, 3.0);
  direct.finalize();

  Vec x0 = Vec::Constant(1, 0.7);
  const InputSignal u = InputSignal::zero(1);
  Trajectory a = simulate(sys, 0.0, x0, u, 3.0);
  Trajectory b = simulate(direct, 0.0, x0, u, 3.0);
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i)
    CHECK((a.samples[i].x - b.samples[i].x).norm() == 0.0);
}

TEST_CASE("the cast sequence is exactly the switch-time set") {
  SwitchedSystem sw = two_scalar_modes(1.0, 1.0);
  SwitchingSignal nu(0, {{0.5, 1}, {1.25, 0}, {1.75, 1}}, 2.5);
  ImpulsiveSystem sys = cast_to_gswl(sw, nu);
  REQUIRE(sys.seq.size() == 3);
  CHECK(sys.seq[0] == 0.5);
  CHECK(sys.seq[1] == 1.25);
  CHECK(sys.seq[2] == 1.75);
}

TEST_CASE("construction identity: cast simulation equals segment-wise simulation and the "
          "matrix-exponential composition") {
  std::mt19937 rng(20260817);
  std::uniform_real_distribution<double> entry(-1.0, 1.0);
  auto rand_mat = [&](int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = entry(rng);
    return m;
  };

  for (int trial = 0; trial < 5; ++trial) {
    const int n = 3;
    Mat a0 = rand_mat(n), a1 = rand_mat(n), r01 = rand_mat(n), r10 = rand_mat(n);
    SwitchedSystem sw;
    sw.n = n;
    sw.m = 1;
    SwitchedMode m0, m1;
    m0.A = MatrixFunction::constant(a0);
    m1.A = MatrixFunction::constant(a1);
    sw.modes = {m0, m1};
    SwitchedReset s01, s10;
    s01.R = MatrixFunction::constant(r01);
    s10.R = MatrixFunction::constant(r10);
    sw.resets[{0, 1}] = s01;
    sw.resets[{1, 0}] = s10;

    SwitchingSignal nu(0, {{0.7, 1}, {1.4, 0}}, 2.0);
    ImpulsiveSystem sys = cast_to_gswl(sw, nu);
    Vec x0(n);
    for (int i = 0; i < n; ++i) x0(i) = entry(rng);
    const InputSignal u = InputSignal::zero(1);
    Vec cast_end = simulate(sys, 0.0, x0, u, 2.0).final_state();

    // Segment-wise: each mode simulated alone over its active window.
    auto leg = [&](const Mat& a, const Vec& from, double t0, double t1) {
      ImpulsiveSystem one;
      one.n = n;
      one.m = 1;
      one.A = MatrixFunction::constant(a);
      one.g = [](double, const Vec& x, const Vec&) { return x; };
      one.seq = ImpulseSequence({}, 5.0);
      one.finalize();
      Trajectory tr = simulate(one, t0, from, u, t1);
      return tr.final_state();
    };
    Vec seg = leg(a0, x0, 0.0, 0.7);
    seg = r01 * seg;
    seg = leg(a1, seg, 0.7, 1.4);
    seg = r10 * seg;
    seg = leg(a0, seg, 1.4, 2.0);
    CHECK((cast_end - seg).norm() <= 1e-9 * (1.0 + seg.norm()));

    // Closed form through matrix exponentials.
    Vec oracle = (a0 * 0.7).exp() * x0;
    oracle = r01 * oracle;
    oracle = (a1 * 0.7).exp() * oracle;
    oracle = r10 * oracle;
    oracle = (a0 * 0.6).exp() * oracle;
    CHECK((cast_end - oracle).norm() <= 1e-7 * (1.0 + oracle.norm()));

    // The cast linear part reproduces the same map.
    Mat phi = transition_matrix(sys.linear_part(), 0.0, 2.0, 1e-3);
    CHECK((phi * x0 - oracle).norm() <= 1e-7 * (1.0 + oracle.norm()));
  }
}

TEST_CASE("a missing reset map is a configuration error naming the pair") {
  SwitchedSystem sw = two_scalar_modes(1.0, 1.0);
  sw.resets.erase({1, 0});
  SwitchingSignal nu(0, {{1.0, 1}, {1.5, 0}}, 2.0);
  CHECK_THROWS_WITH_AS(cast_to_gswl(sw, nu), "no reset map for mode pair 1->0", Error);
  try {
    cast_to_gswl(sw, nu);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::config);
  }
}

TEST_CASE("signal validation rejects malformed schedules") {
  CHECK_THROWS_AS(SwitchingSignal(0, {{1.0, 0}}, 2.0), Error);          // same mode
  CHECK_THROWS_AS(SwitchingSignal(0, {{1.0, 1}, {1.0, 0}}, 2.0), Error);  // not increasing
  CHECK_THROWS_AS(SwitchingSignal(0, {{0.0, 1}}, 2.0), Error);          // not positive
  CHECK_THROWS_AS(SwitchingSignal(0, {{1.0, 1}}, 0.5), Error);          // horizon too short
  CHECK_THROWS_AS(SwitchingSignal(-1, {}, 1.0), Error);                 // negative mode
  CHECK_THROWS_AS(SwitchingSignal(0, {{1.0, -2}}, 2.0), Error);         // negative mode
}

TEST_CASE("mode lookup is right-continuous with a left limit") {
  SwitchingSignal nu(0, {{1.0, 1}, {2.0, 0}}, 3.0);
  CHECK(nu.mode_at(0.0) == 0);
  CHECK(nu.mode_at(0.999) == 0);
  CHECK(nu.mode_at(1.0) == 1);
  CHECK(nu.mode_before(1.0) == 0);
  CHECK(nu.mode_at(1.5) == 1);
  CHECK(nu.mode_before(2.0) == 1);
  CHECK(nu.mode_at(2.0) == 0);
  CHECK(nu.mode_at(3.0) == 0);
  CHECK(nu.mode_before(0.5) == 0);
}

TEST_CASE("signals out of range for the family are configuration errors") {
  SwitchedSystem sw = two_scalar_modes(1.0, 1.0);
  CHECK_THROWS_AS(cast_to_gswl(sw, SwitchingSignal(2, {}, 1.0)), Error);
  CHECK_THROWS_AS(cast_to_gswl(sw, SwitchingSignal(0, {{1.0, 5}}, 2.0)), Error);
}

TEST_CASE("a one-signal list reproduces the single-system certificate numbers exactly") {
  SwitchedSystem sw = two_scalar_modes(1.0, 1.0);
  sw.M = 0.5;
  sw.c = 1.0;
  for (auto& mode : sw.modes) mode.N = ScalarFunction::constant(0.1);
  for (auto& [key, reset] : sw.resets) reset.N = ScalarFunction::constant(0.1);

  const Certificate cert(1.0, 1.0, Flavor::strong);
  SwitchingSignal nu(0, {{1.0, 1}}, 4.0);
  IssReport a = switched_certify(sw, std::vector<SwitchingSignal>{nu}, cert);
  IssReport b = certify(cert, PerturbationBound(0.1, ScalarFunction(), 0.5, 1.0, KFunction()), 0.0,
                        0.0, CertifyOptions{});

  CHECK(a.kind == b.kind);
  CHECK(a.hatK == b.hatK);
  CHECK(a.hatLambda == b.hatLambda);
  CHECK(a.kappa == b.kappa);
  CHECK(a.betaScale == b.betaScale);
  CHECK(a.betaRate == b.betaRate);
  CHECK(a.rhoCoeff == b.rhoCoeff);
  REQUIRE(a.Rmax.has_value());
  REQUIRE(b.Rmax.has_value());
  CHECK(*a.Rmax == *b.Rmax);
  CHECK(*a.chosenR == *b.chosenR);
  CHECK(*a.barK == *b.barK);
  CHECK(*a.barLambda == *b.barLambda);
  CHECK(*a.gainCoeff == *b.gainCoeff);
  CHECK(a.Nbar == b.Nbar);
  CHECK(a.thetaC == b.thetaC);
  CHECK(a.thetaD == b.thetaD);
}

TEST_CASE("the baseline slope only sees modes and resets the listed signals use") {
  SwitchedSystem sw = two_scalar_modes(1.0, 1.0);
  sw.modes.push_back(scalar_mode(-3.0));
  sw.modes[2].N = ScalarFunction::constant(5.0);  // never visited
  sw.resets[{0, 2}] = scalar_reset(1.0);
  sw.resets[{0, 2}].N = ScalarFunction::constant(7.0);  // never fired
  for (int i : {0, 1}) sw.modes[static_cast<std::size_t>(i)].N = ScalarFunction::constant(0.1);
  for (auto key : {std::pair<int, int>{0, 1}, {1, 0}})
    sw.resets[key].N = ScalarFunction::constant(0.1);

  const Certificate cert(1.0, 1.0, Flavor::strong);
  SwitchingSignal nu(0, {{1.0, 1}}, 4.0);
  IssReport rep = switched_certify(sw, std::vector<SwitchingSignal>{nu}, cert);
  CHECK(rep.Nbar == 0.1);
  // The baseline enters the rate through the source gain (the budgets only
  // scale the gain), so the rate is 1 - 0.1 e.
  CHECK(std::abs(rep.hatLambda - (1.0 - 0.1 * std::exp(1.0))) <= 1e-12);

  // Over a dwell-time class every pair is admissible, so the big bounds bite.
  CHECK_THROWS_AS(switched_certify(sw, DwellClass(2, 1.0), cert), ThresholdError);
}

TEST_CASE("weak family envelope over a dwell-time class hits the strengthened threshold") {
  const Certificate weak(1.0, 1.0, Flavor::weak);
  const double threshold = 0.5 * std::exp(-1.5);

  auto family = [](double nbar) {
    SwitchedSystem sw = two_scalar_modes(1.0, 1.0);
    for (auto& mode : sw.modes) mode.N = ScalarFunction::constant(nbar);
    for (auto& [key, reset] : sw.resets) reset.N = ScalarFunction::constant(nbar);
    return sw;
  };

  try {
    switched_certify(family(0.2), DwellClass(2, 1.0), weak);
    FAIL("expected a threshold error");
  } catch (const ThresholdError& e) {
    CHECK(std::abs(e.admissible() - threshold) <= 1e-12);
    CHECK(e.actual() == 0.2);
  }

  IssReport rep = switched_certify(family(0.05), DwellClass(2, 1.0), weak);
  CHECK(rep.effective.flavor == Flavor::strong);
  CHECK(std::abs(rep.effective.K - std::exp(1.0)) <= 1e-12);
  CHECK(rep.effective.lambda == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(rep.hatLambda - (0.5 - 0.05 * std::exp(1.0) * std::exp(0.5))) <= 1e-12);
  REQUIRE(rep.dwell.has_value());
  CHECK(rep.dwell->chatter_bound == 2);
  bool mentions_class = false;
  for (const auto& note : rep.notes)
    if (note.find("dwell-time class") != std::string::npos) mentions_class = true;
  CHECK(mentions_class);
}

TEST_CASE("a weak envelope over an explicit list still needs a dwell-time class") {
  SwitchedSystem sw = two_scalar_modes(1.0, 1.0);
  SwitchingSignal nu(0, {{1.0, 1}}, 2.0);
  CHECK_THROWS_AS(
      switched_certify(sw, std::vector<SwitchingSignal>{nu}, Certificate(1.0, 1.0, Flavor::weak)),
      Error);
}

TEST_CASE("fitting over an explicit list works and is flagged as list-only evidence") {
  SwitchedSystem sw = two_scalar_modes(0.5, 0.5);
  std::vector<SwitchingSignal> signals = {SwitchingSignal(0, {{1.0, 1}}, 3.0),
                                          SwitchingSignal(1, {{0.8, 0}, {1.9, 1}}, 3.0)};
  EnvelopeFitRequest req;
  req.options.k_cap = 3.0;
  IssReport rep = switched_certify(sw, signals, req);
  CHECK(rep.kind == IssReport::Kind::unrestricted);  // M = 0
  CHECK(rep.source.K >= 1.0);
  CHECK(rep.source.lambda > 0.0);
  CHECK(rep.hatK >= rep.source.K);
  bool caveat = false;
  for (const auto& note : rep.notes)
    if (note.find("not a certificate for the infinite switching class") != std::string::npos)
      caveat = true;
  CHECK(caveat);

  // The same request over a dwell-time class cannot be fitted.
  CHECK_THROWS_AS(switched_certify(sw, DwellClass(1, 1.0), req), Error);

  // Fitting needs linear parts wherever the signals go.
  SwitchedSystem nonlinear = two_scalar_modes(0.5, 0.5);
  nonlinear.modes[1].A.reset();
  nonlinear.modes[1].f = [](double, const Vec& x, const Vec&) { return Vec(-2.0 * x); };
  CHECK_THROWS_AS(switched_certify(nonlinear, signals, req), Error);
}

TEST_CASE("time-varying slope bounds route through excess budgets over the baseline") {
  SwitchedSystem sw = two_scalar_modes(1.0, 1.0);
  sw.modes[0].N = ScalarFunction::piecewise({0.0, 1.0}, {0.3, 0.1});
  sw.modes[1].N = ScalarFunction::constant(0.1);
  for (auto& [key, reset] : sw.resets) reset.N = ScalarFunction::constant(0.1);

  const Certificate cert(1.0, 1.0, Flavor::strong);
  SwitchingSignal nu(0, {{2.0, 1}}, 3.0);
  IssReport rep = switched_certify(sw, std::vector<SwitchingSignal>{nu}, cert);

  CHECK(rep.Nbar == 0.1);
  CHECK(std::abs(rep.thetaC - 0.2) <= 1e-13);
  CHECK(rep.thetaD == 0.0);
  CHECK(std::abs(rep.hatK - std::exp(0.2)) <= 1e-12);
  CHECK(std::abs(rep.hatLambda - (1.0 - 0.1 * std::exp(1.0))) <= 1e-12);
  bool labeled = false;
  for (const auto& note : rep.notes)
    if (note.find("time-varying slope bounds") != std::string::npos) labeled = true;
  CHECK(labeled);

  // The same bounds cannot be budgeted over a dwell-time class.
  CHECK_THROWS_AS(switched_certify(sw, DwellClass(1, 1.0), cert), Error);
  try {
    switched_certify(sw, DwellClass(1, 1.0), cert);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::config);
  }
}

TEST_CASE("an excess jump budget charges switches whose reset bound exceeds the baseline") {
  SwitchedSystem sw = two_scalar_modes(1.0, 1.0);
  sw.modes[0].N = ScalarFunction::constant(0.05);
  sw.modes[1].N = ScalarFunction::constant(0.05);
  sw.resets[{0, 1}].N = ScalarFunction::callable([](double) { return 0.25; });
  sw.resets[{1, 0}].N = ScalarFunction::constant(0.05);

  const Certificate cert(1.0, 1.0, Flavor::strong);
  SwitchingSignal nu(0, {{1.0, 1}, {2.0, 0}}, 3.0);
  IssReport rep = switched_certify(sw, std::vector<SwitchingSignal>{nu}, cert);
  CHECK(rep.Nbar == 0.05);
  CHECK(std::abs(rep.thetaD - 0.2) <= 1e-13);  // one switch exceeds by 0.2
  CHECK(std::abs(rep.hatK - std::exp(0.2 * std::exp(1.0))) <= 1e-11);
}

TEST_CASE("conflicting dwell-time classes between options and the signal class are rejected") {
  SwitchedSystem sw = two_scalar_modes(1.0, 1.0);
  for (auto& mode : sw.modes) mode.N = ScalarFunction::constant(0.01);
  for (auto& [key, reset] : sw.resets) reset.N = ScalarFunction::constant(0.01);
  const Certificate weak(1.0, 1.0, Flavor::weak);
  CertifyOptions opts;
  opts.dwell = DwellClass(3, 2.0);
  CHECK_THROWS_AS(switched_certify(sw, DwellClass(2, 1.0), weak, opts), Error);
  opts.dwell = DwellClass(2, 1.0);
  IssReport rep = switched_certify(sw, DwellClass(2, 1.0), weak, opts);
  CHECK(rep.hatLambda > 0.0);
}

TEST_CASE("cast systems carry the stitched slope bound through the jump side") {
  SwitchedSystem sw = two_scalar_modes(1.0, 1.0);
  sw.modes[0].N = ScalarFunction::constant(0.2);
  sw.modes[1].N = ScalarFunction::constant(0.3);
  sw.resets[{0, 1}].N = ScalarFunction::constant(0.4);
  sw.resets[{1, 0}].N = ScalarFunction::constant(0.5);

  SwitchingSignal nu(0, {{1.0, 1}, {2.0, 0}}, 3.0);
  ImpulsiveSystem sys = cast_to_gswl(sw, nu);
  REQUIRE(sys.bound.has_value());
  CHECK(sys.bound->Nbar == 0.0);
  CHECK(sys.bound->theta(0.5) == 0.2);   // mode 0 active
  CHECK(sys.bound->theta(1.0) == 0.4);   // reset 0->1 at the switch itself
  CHECK(sys.bound->theta(1.5) == 0.3);   // mode 1 active
  CHECK(sys.bound->theta(2.0) == 0.5);   // reset 1->0
  CHECK(sys.bound->theta(2.5) == 0.2);   // back in mode 0
  CHECK(sys.bound->theta.left(1.0) == 0.2);
  CHECK(sys.bound->theta.left(2.0) == 0.3);
}

TEST_CASE("an empty explicit signal list is rejected") {
  SwitchedSystem sw = two_scalar_modes(1.0, 1.0);
  CHECK_THROWS_AS(
      switched_certify(sw, std::vector<SwitchingSignal>{}, Certificate(1.0, 1.0, Flavor::strong)),
      Error);
}

}  // TEST_SUITE
