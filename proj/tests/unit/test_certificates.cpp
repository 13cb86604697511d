// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "doctest.h"
#include "impulsive/certificates.hpp"

using namespace impulsive;

namespace {

PerturbationBound make_bound(double Nbar, double M, double c,
                             KFunction eta = KFunction::identity()) {
  return PerturbationBound(Nbar, ScalarFunction::constant(0.0), M, c, std::move(eta));
}

const Certificate unit_cert(1.0, 1.0, Flavor::strong);

}  // namespace

TEST_SUITE_BEGIN("certificates");

TEST_CASE("perturbed envelope is the identity at zero perturbation") {
  auto env = perturbed_envelope(unit_cert, 0.0, 0.0, 0.0);
  CHECK(env.hatK == 1.0);
  CHECK(env.hatLambda == 1.0);
  auto env2 = perturbed_envelope(Certificate(3.0, 0.7, Flavor::strong), 0.0, 0.0, 0.0);
  CHECK(env2.hatK == 3.0);
  CHECK(env2.hatLambda == 0.7);
}

TEST_CASE("perturbed envelope worked value") {
  auto env = perturbed_envelope(unit_cert, 0.1, 0.0, 0.0);
  CHECK(env.hatLambda == doctest::Approx(1.0 - std::exp(1.0) * 0.1).epsilon(1e-15));
  CHECK(env.hatLambda == doctest::Approx(0.728172).epsilon(1e-6));
  CHECK(env.hatK == 1.0);
}

TEST_CASE("perturbation slope above the admissible bound is refused") {
  try {
    perturbed_envelope(unit_cert, 0.4, 0.0, 0.0);
    CHECK(false);
  } catch (const ThresholdError& e) {
    CHECK(e.admissible() == doctest::Approx(1.0 / std::exp(1.0)).epsilon(1e-15));
    CHECK(e.actual() == 0.4);
  }
}

TEST_CASE("threshold boundary is exact to a relative 1e-12") {
  const double thr = 1.0 / std::exp(1.0);
  CHECK_NOTHROW(perturbed_envelope(unit_cert, thr * (1.0 - 1e-12), 0.0, 0.0));
  CHECK_THROWS_AS(perturbed_envelope(unit_cert, thr * (1.0 + 1e-12), 0.0, 0.0),
                  ThresholdError);
}

TEST_CASE("weak certificates are rejected by the perturbation formulas") {
  CHECK_THROWS_AS(perturbed_envelope(Certificate(1.0, 1.0, Flavor::weak), 0.0, 0.0, 0.0),
                  Error);
}

TEST_CASE("theta budgets inflate the gain as written") {
  auto env = perturbed_envelope(Certificate(2.0, 0.5, Flavor::strong), 0.0, 0.3, 0.2);
  double expect = 2.0 * std::exp(2.0 * (0.3 + std::exp(0.5) * 0.2));
  CHECK(env.hatK == doctest::Approx(expect).epsilon(1e-15));
  CHECK(env.hatLambda == 0.5);
}

TEST_CASE("small-input certificate worked values") {
  auto rep = iss_small_input(unit_cert, make_bound(0.1, 1.0, 1.0), 0.0, 0.0);
  REQUIRE(rep.Rmax.has_value());
  // (1 - 0.1 e)/e = 1/e - 0.1, rederived independently.
  CHECK(*rep.Rmax == doctest::Approx(1.0 / std::exp(1.0) - 0.1).epsilon(1e-12));
  CHECK(*rep.Rmax == doctest::Approx(0.267879).epsilon(1e-5));
  CHECK(*rep.chosenR == doctest::Approx(0.9 * *rep.Rmax).epsilon(1e-15));
  CHECK(rep.kind == IssReport::Kind::small_input);

  auto rep2 = iss_small_input(unit_cert, make_bound(0.1, 1.0, 1.0), 0.0, 0.0, 0.2);
  double bar_lambda = 1.0 - std::exp(1.0) * 0.3;
  REQUIRE(rep2.barLambda.has_value());
  CHECK(*rep2.barLambda == doctest::Approx(bar_lambda).epsilon(1e-12));
  CHECK(*rep2.barLambda == doctest::Approx(0.184515).epsilon(1e-5));
  double gain = 1.0 * (1.0 / bar_lambda + 1.0 / (1.0 - std::exp(-bar_lambda)));
  CHECK(*rep2.gainCoeff == doctest::Approx(gain).epsilon(1e-12));
  CHECK(*rep2.gainCoeff == doctest::Approx(11.3547).epsilon(2e-5));
}

TEST_CASE("zero Nbar pushes the input threshold to 1/e") {
  auto rep = iss_small_input(unit_cert, make_bound(0.0, 1.0, 1.0), 0.0, 0.0);
  CHECK(*rep.Rmax == doctest::Approx(1.0 / std::exp(1.0)).epsilon(1e-12));
}

TEST_CASE("non-identity eta feeds through the inverse and the gain") {
  auto rep = iss_small_input(unit_cert, make_bound(0.0, 1.0, 1.0, KFunction::scaled(2.0)),
                             0.0, 0.0);
  CHECK(*rep.Rmax == doctest::Approx(0.5 / std::exp(1.0)).epsilon(1e-12));
  // gamma(s) = L * eta(s) doubles the slope.
  CHECK(rep.iss_gamma(0.3) == doctest::Approx(*rep.gainCoeff * 0.6).epsilon(1e-12));
}

TEST_CASE("saturating eta below the quotient makes every magnitude admissible") {
  auto bound = make_bound(0.0, 1.0, 1.0, KFunction::saturating(0.2));
  CHECK_THROWS_AS(iss_small_input(unit_cert, bound, 0.0, 0.0), Error);  // needs explicit R
  auto rep = iss_small_input(unit_cert, bound, 0.0, 0.0, 5.0);
  CHECK(std::isinf(*rep.Rmax));
  CHECK(*rep.chosenR == 5.0);
  double bar_lambda = 1.0 - std::exp(1.0) * (0.2 * 5.0 / 6.0);
  CHECK(*rep.barLambda == doctest::Approx(bar_lambda).epsilon(1e-12));
}

TEST_CASE("chosenR at the threshold errors on the strict side only") {
  auto bound = make_bound(0.1, 1.0, 1.0);
  const double rmax = 1.0 / std::exp(1.0) - 0.1;
  CHECK_NOTHROW(iss_small_input(unit_cert, bound, 0.0, 0.0, rmax * (1.0 - 1e-12)));
  CHECK_THROWS_AS(iss_small_input(unit_cert, bound, 0.0, 0.0, rmax * (1.0 + 1e-12)),
                  ThresholdError);
  CHECK_THROWS_AS(iss_small_input(unit_cert, make_bound(0.1, 0.0, 1.0), 0.0, 0.0), Error);
}

TEST_CASE("unrestricted certificate worked values") {
  auto rep = iss_unrestricted(unit_cert, make_bound(0.0, 0.0, 1.0), 0.0, 0.0);
  double gain = 1.0 + 1.0 / (1.0 - std::exp(-1.0));
  CHECK(*rep.gainCoeff == doctest::Approx(gain).epsilon(1e-12));
  CHECK(*rep.gainCoeff == doctest::Approx(2.58198).epsilon(1e-5));
  CHECK(*rep.barK == rep.hatK);
  CHECK(*rep.barLambda == rep.hatLambda);

  auto zero_gain = iss_unrestricted(unit_cert, make_bound(0.0, 0.0, 0.0), 0.0, 0.0);
  CHECK(*zero_gain.gainCoeff == 0.0);

  // Straight-line re-derivation; the 6-digit display rounds to 6.61351.
  auto rep2 = iss_unrestricted(unit_cert, make_bound(0.1, 0.0, 2.0), 0.0, 0.0);
  double hl = 1.0 - std::exp(1.0) * 0.1;
  double gain2 = 2.0 * (1.0 / hl + 1.0 / (1.0 - std::exp(-hl)));
  CHECK(*rep2.gainCoeff == doctest::Approx(gain2).epsilon(1e-12));
  CHECK_THROWS_AS(iss_unrestricted(unit_cert, make_bound(0.0, 0.5, 1.0), 0.0, 0.0), Error);
}

TEST_CASE("integral-variant worked values and limits") {
  auto rep = iiss_certificate(unit_cert, make_bound(0.1, 1.0, 1.0), 0.0, 0.0);
  double hl = 1.0 - std::exp(1.0) * 0.1;
  CHECK(rep.kappa == doctest::Approx(std::exp(hl)).epsilon(1e-12));
  CHECK(rep.kappa == doctest::Approx(2.07128).epsilon(1e-5));
  CHECK(rep.rhoCoeff == doctest::Approx(2.0 * (1.0 + std::exp(hl))).epsilon(1e-12));
  CHECK(rep.iiss_rho(1.0) == doctest::Approx(std::exp(rep.rhoCoeff) - 1.0).epsilon(1e-12));
  CHECK(rep.iiss_beta(0.0, 3.0) == 0.0);
  CHECK(rep.iiss_beta(5.0, 1e3) < 1e-12);
  CHECK(rep.iiss_beta(5.0, 0.0) == doctest::Approx(std::expm1(2.0 * 5.0)).epsilon(1e-12));
  CHECK_THROWS_AS(rep.iss_beta(1.0, 1.0), Error);  // no sup-norm part
  CHECK_THROWS_AS(rep.iss_gamma(1.0), Error);
}

TEST_CASE("monotonicity of the derived constants") {
  double prev_hl = 2.0;
  for (double nb : {0.0, 0.1, 0.2, 0.3}) {
    auto env = perturbed_envelope(unit_cert, nb, 0.0, 0.0);
    CHECK(env.hatLambda < prev_hl);
    prev_hl = env.hatLambda;
  }
  double prev_hk = 0.0;
  for (double th : {0.0, 0.1, 0.5, 1.0}) {
    auto env = perturbed_envelope(unit_cert, 0.0, th, 0.0);
    CHECK(env.hatK > prev_hk);
    prev_hk = env.hatK;
  }
  prev_hk = 0.0;
  for (double th : {0.0, 0.1, 0.5, 1.0}) {
    auto env = perturbed_envelope(unit_cert, 0.0, 0.0, th);
    CHECK(env.hatK > prev_hk);
    prev_hk = env.hatK;
  }
  double prev_rmax = 10.0;
  for (double nb : {0.0, 0.05, 0.1, 0.2}) {
    auto rep = iss_small_input(unit_cert, make_bound(nb, 1.0, 1.0), 0.0, 0.0);
    CHECK(*rep.Rmax < prev_rmax);
    prev_rmax = *rep.Rmax;
  }
  prev_rmax = 10.0;
  for (double m : {0.5, 1.0, 2.0, 4.0}) {
    auto rep = iss_small_input(unit_cert, make_bound(0.0, m, 1.0), 0.0, 0.0);
    CHECK(*rep.Rmax < prev_rmax);
    prev_rmax = *rep.Rmax;
  }
}

TEST_CASE("dwell-time strengthening worked values") {
  auto out = adt_strengthen(Certificate(1.0, 1.0, Flavor::weak), DwellClass(2, 1.0));
  CHECK(out.lambda == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(out.K == doctest::Approx(std::exp(1.0)).epsilon(1e-15));
  CHECK(out.flavor == Flavor::strong);
  CHECK(!out.note.empty());

  auto big = adt_strengthen(Certificate(1.0, 1.0, Flavor::weak), DwellClass(1, 1e6));
  CHECK(big.lambda >= 0.999);

  auto other = adt_strengthen(Certificate(2.0, 2.0, Flavor::weak), DwellClass(1, 1.0));
  CHECK(other.lambda == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(other.K == doctest::Approx(2.0 * std::exp(1.0)).epsilon(1e-15));

  CHECK_THROWS_AS(adt_strengthen(unit_cert, DwellClass(2, 1.0)), Error);
}

TEST_CASE("strengthening always trades rate for gain") {
  for (double lam : {0.3, 1.0, 2.5})
    for (double k : {1.0, 3.0})
      for (int n0 : {1, 2, 5})
        for (double tau : {0.2, 1.0, 10.0}) {
          auto out = adt_strengthen(Certificate(k, lam, Flavor::weak), DwellClass(n0, tau));
          CHECK(out.lambda < lam);
          CHECK(out.K >= k);
        }
}

TEST_CASE("strengthened threshold worked value") {
  // Weak (1, 1) over the class (N0=2, tauD=1): admissible Nbar becomes
  // tildeLambda / (tildeK e^{tildeLambda}) = 0.5 / e^{1.5}.
  auto strong = adt_strengthen(Certificate(1.0, 1.0, Flavor::weak), DwellClass(2, 1.0));
  const double thr = 0.5 / std::exp(1.5);
  CHECK(thr == doctest::Approx(0.111565).epsilon(1e-5));
  CHECK_NOTHROW(perturbed_envelope(strong, thr * (1.0 - 1e-12), 0.0, 0.0));
  try {
    perturbed_envelope(strong, thr * (1.0 + 1e-12), 0.0, 0.0);
    CHECK(false);
  } catch (const ThresholdError& e) {
    CHECK(e.admissible() == doctest::Approx(thr).epsilon(1e-12));
  }
}

TEST_CASE("certify dispatches by M and strengthens weak sources") {
  auto bound = make_bound(0.05, 0.0, 1.0);
  CHECK_THROWS_AS(certify(Certificate(1.0, 1.0, Flavor::weak), bound, 0.0, 0.0, {}), Error);

  CertifyOptions opts;
  opts.dwell = DwellClass(2, 1.0);
  auto via_certify = certify(Certificate(1.0, 1.0, Flavor::weak), bound, 0.0, 0.0, opts);
  auto strong = adt_strengthen(Certificate(1.0, 1.0, Flavor::weak), DwellClass(2, 1.0));
  auto direct = iss_unrestricted(strong, bound, 0.0, 0.0);
  CHECK(via_certify.kind == IssReport::Kind::unrestricted);
  CHECK(via_certify.hatK == direct.hatK);
  CHECK(via_certify.hatLambda == direct.hatLambda);
  CHECK(*via_certify.gainCoeff == *direct.gainCoeff);
  CHECK(via_certify.effective.K == strong.K);
  CHECK(via_certify.effective.lambda == strong.lambda);
  CHECK(via_certify.dwell.has_value());
  CHECK(via_certify.source.flavor == Flavor::weak);

  auto si = certify(unit_cert, make_bound(0.1, 1.0, 1.0), 0.0, 0.0, {});
  CHECK(si.kind == IssReport::Kind::small_input);

  CertifyOptions force_iiss;
  force_iiss.variant = CertifyOptions::Variant::iiss;
  auto ii = certify(unit_cert, make_bound(0.1, 1.0, 1.0), 0.0, 0.0, force_iiss);
  CHECK(ii.kind == IssReport::Kind::iiss_only);
  CHECK(!ii.Rmax.has_value());
}

TEST_CASE("every report field carries a formula string") {
  auto rep = iss_small_input(unit_cert, make_bound(0.1, 1.0, 1.0), 0.0, 0.0);
  for (const char* field : {"hatK", "hatLambda", "kappa", "betaScale", "betaRate",
                            "rhoCoeff", "Rmax", "chosenR", "barK", "barLambda", "gainCoeff"}) {
    bool found = false;
    for (const auto& p : rep.provenance) found = found || p.field == field;
    CHECK_MESSAGE(found, field);
  }
}

TEST_CASE("local linearization accepts a purely linear system at the probe cap") {
  ImpulsiveSystem sys;
  sys.n = 2;
  sys.m = 1;
  Mat a(2, 2), r(2, 2);
  a << -1.0, 0.2, 0.0, -1.5;
  r << 0.5, 0.0, 0.1, 0.5;
  sys.A = MatrixFunction::constant(a);
  sys.R = JumpMatrixMap::constant(r);
  sys.seq = ImpulseSequence({1.0, 2.0}, 3.0);
  sys.finalize();
  auto rep = local_linearization(sys, Certificate(2.0, 0.8, Flavor::strong), 7.0);
  CHECK(rep.r == 7.0);
  CHECK(rep.localRate == 0.4);
  CHECK(rep.localK == 2.0);
  CHECK(rep.basinRadius == doctest::Approx(7.0 / 4.0).epsilon(1e-15));
}

TEST_CASE("quadratic remainder pins the radius at epsilon") {
  ImpulsiveSystem sys;
  sys.n = 1;
  sys.m = 1;
  sys.f = [](double, const Vec& x, const Vec&) {
    Vec out(1);
    out << -x(0) + x(0) * x(0);
    return out;
  };
  sys.g = [](double, const Vec& x, const Vec&) { return Vec(0.5 * x); };
  sys.seq = ImpulseSequence({1.0}, 2.0);
  sys.finalize();
  auto rep = local_linearization(sys, unit_cert, 1.0);
  const double eps = 1.0 / (2.0 * std::exp(1.0));
  CHECK(rep.epsilon == doctest::Approx(eps).epsilon(1e-12));
  CHECK(rep.epsilon == doctest::Approx(0.183940).epsilon(1e-5));
  CHECK(rep.r == doctest::Approx(eps).epsilon(2e-3));
  CHECK(rep.r <= eps * (1.0 + 1e-9));
  CHECK(rep.localRate == 0.5);
  CHECK(rep.basinRadius == doctest::Approx(rep.r / 2.0).epsilon(1e-15));
}

TEST_CASE("linearization requires a zero equilibrium") {
  ImpulsiveSystem sys;
  sys.n = 1;
  sys.m = 1;
  sys.f = [](double, const Vec& x, const Vec&) {
    Vec out(1);
    out << -x(0) + 0.3;
    return out;
  };
  sys.g = [](double, const Vec& x, const Vec&) { return x; };
  sys.seq = ImpulseSequence({1.0}, 2.0);
  sys.finalize();
  CHECK_THROWS_AS(local_linearization(sys, unit_cert, 1.0), Error);
}

TEST_SUITE_END();
