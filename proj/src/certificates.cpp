// SPDX-License-Identifier: Apache-2.0
#include "impulsive/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

namespace impulsive {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void require_strong(const Certificate& cert, const char* where) {
  if (cert.flavor != Flavor::strong)
    throw Error(ErrorKind::precondition,
                std::string(where) + " needs a strong envelope; strengthen the weak one "
                                     "with a dwell-time class first");
}

void require_nonneg(double v, const char* name) {
  if (!(v >= 0.0))
    throw Error(ErrorKind::argument, std::string(name) + " must be nonnegative, got " + fmt(v));
}

// Fills the integral-variant fields shared by every report kind.
void fill_iiss_part(IssReport& rep, const PerturbedEnvelope& env) {
  rep.hatK = env.hatK;
  rep.hatLambda = env.hatLambda;
  rep.kappa = std::exp(env.hatLambda) * env.hatK * rep.M;
  rep.betaScale = 2.0 * env.hatK;
  rep.betaRate = env.hatLambda;
  rep.rhoCoeff = 2.0 * (rep.c * env.hatK + rep.kappa);
  rep.provenance.push_back({"hatLambda", "lambda - K*e^lambda*Nbar"});
  rep.provenance.push_back(
      {"hatK",
       "K*exp(K*(ThetaC + e^lambda*ThetaD)); the K-weighted jump budget dominates the "
       "variant without the K factor on ThetaD, so the envelope remains valid"});
  rep.provenance.push_back({"kappa", "e^hatLambda * hatK * M"});
  rep.provenance.push_back({"betaScale", "2*hatK"});
  rep.provenance.push_back({"betaRate", "hatLambda"});
  rep.provenance.push_back({"rhoCoeff", "2*(c*hatK + kappa)"});
}

IssReport base_report(const Certificate& cert, const PerturbationBound& bound,
                      double thetaC, double thetaD) {
  require_nonneg(thetaC, "ThetaC");
  require_nonneg(thetaD, "ThetaD");
  IssReport rep;
  rep.source = cert;
  rep.effective = cert;
  rep.Nbar = bound.Nbar;
  rep.M = bound.M;
  rep.c = bound.c;
  rep.eta = bound.eta;
  rep.thetaC = thetaC;
  rep.thetaD = thetaD;
  fill_iiss_part(rep, perturbed_envelope(cert, bound.Nbar, thetaC, thetaD));
  return rep;
}

}  // namespace

double IssReport::iiss_beta(double r, double s) const {
  return std::expm1(betaScale * std::exp(-betaRate * s) * r);
}

double IssReport::iiss_rho(double r) const { return std::expm1(rhoCoeff * r); }

double IssReport::iss_beta(double r, double s) const {
  if (!barK || !barLambda)
    throw Error(ErrorKind::precondition,
                "this certificate has no sup-norm bound; use the integral variant");
  return *barK * r * std::exp(-*barLambda * s);
}

double IssReport::iss_gamma(double s) const {
  if (!gainCoeff)
    throw Error(ErrorKind::precondition,
                "this certificate has no sup-norm gain; use the integral variant");
  return *gainCoeff * eta(s);
}

PerturbedEnvelope perturbed_envelope(const Certificate& cert, double Nbar,
                                     double thetaC, double thetaD) {
  require_strong(cert, "perturbed_envelope");
  require_nonneg(Nbar, "Nbar");
  require_nonneg(thetaC, "ThetaC");
  require_nonneg(thetaD, "ThetaD");
  const double k = cert.K, lam = cert.lambda;
  const double admissible = lam / (k * std::exp(lam));
  if (Nbar >= admissible)
    throw ThresholdError("Nbar = " + fmt(Nbar) +
                             " reaches the admissible perturbation slope lambda/(K*e^lambda) = " +
                             fmt(admissible) + "; no decay margin remains",
                         admissible, Nbar);
  PerturbedEnvelope env;
  env.hatLambda = lam - k * std::exp(lam) * Nbar;
  env.hatK = k * std::exp(k * (thetaC + std::exp(lam) * thetaD));
  return env;
}

IssReport iss_small_input(const Certificate& cert, const PerturbationBound& bound,
                          double thetaC, double thetaD, std::optional<double> chosenR) {
  if (!(bound.M > 0.0))
    throw Error(ErrorKind::precondition,
                "the small-input variant needs M > 0; with M = 0 use the unrestricted one");
  IssReport rep = base_report(cert, bound, thetaC, thetaD);
  rep.kind = IssReport::Kind::small_input;
  const double k = cert.K, lam = cert.lambda;
  const double q = (lam - bound.Nbar * k * std::exp(lam)) / (k * bound.M * std::exp(lam));
  const double rmax = bound.eta.inverse(q);
  rep.Rmax = rmax;
  rep.provenance.push_back(
      {"Rmax", "eta^{-1}((lambda - Nbar*K*e^lambda)/(K*M*e^lambda))"});
  double r;
  if (chosenR) {
    r = *chosenR;
    require_nonneg(r, "chosenR");
    if (r >= rmax)
      throw ThresholdError("chosenR = " + fmt(r) + " must stay strictly below Rmax = " +
                               fmt(rmax),
                           rmax, r);
    rep.provenance.push_back({"chosenR", "user-supplied; must stay strictly below Rmax"});
  } else {
    if (!std::isfinite(rmax))
      throw Error(ErrorKind::argument,
                  "every input magnitude is admissible (Rmax is infinite); pass an explicit "
                  "chosenR to fix the gain");
    r = 0.9 * rmax;
    rep.provenance.push_back({"chosenR", "0.9*Rmax (default margin below the threshold)"});
  }
  rep.chosenR = r;
  const double bar_lambda = lam - k * std::exp(lam) * (bound.Nbar + bound.M * bound.eta(r));
  if (!(bar_lambda > 0.0))
    throw ThresholdError("chosenR = " + fmt(r) + " leaves no decay margin", rmax, r);
  const double bar_k = k * std::exp(k * (thetaC + std::exp(lam) * thetaD));
  rep.barLambda = bar_lambda;
  rep.barK = bar_k;
  rep.gainCoeff = bar_k * bound.c * (1.0 / bar_lambda + 1.0 / -std::expm1(-bar_lambda));
  rep.provenance.push_back({"barLambda", "lambda - K*e^lambda*(Nbar + M*eta(chosenR))"});
  rep.provenance.push_back({"barK", "K*exp(K*(ThetaC + e^lambda*ThetaD))"});
  rep.provenance.push_back(
      {"gainCoeff", "barK*c*(1/barLambda + 1/(1 - e^{-barLambda}))"});
  rep.notes.push_back("sup-norm bound valid for inputs with sup-norm at most chosenR = " +
                      fmt(r) + "; the integral variant holds for any input");
  return rep;
}

IssReport iss_unrestricted(const Certificate& cert, const PerturbationBound& bound,
                           double thetaC, double thetaD) {
  if (bound.M != 0.0)
    throw Error(ErrorKind::precondition,
                "the unrestricted variant needs M = 0; with M > 0 use the small-input one");
  IssReport rep = base_report(cert, bound, thetaC, thetaD);
  rep.kind = IssReport::Kind::unrestricted;
  rep.barLambda = rep.hatLambda;
  rep.barK = rep.hatK;
  rep.gainCoeff =
      rep.hatK * bound.c * (1.0 / rep.hatLambda + 1.0 / -std::expm1(-rep.hatLambda));
  rep.provenance.push_back({"barLambda", "hatLambda (the input-slope term vanishes at M = 0)"});
  rep.provenance.push_back({"barK", "hatK"});
  rep.provenance.push_back(
      {"gainCoeff", "hatK*c*(1/hatLambda + 1/(1 - e^{-hatLambda}))"});
  rep.notes.push_back("sup-norm bound valid for any input magnitude (M = 0)");
  return rep;
}

IssReport iiss_certificate(const Certificate& cert, const PerturbationBound& bound,
                           double thetaC, double thetaD) {
  IssReport rep = base_report(cert, bound, thetaC, thetaD);
  rep.kind = IssReport::Kind::iiss_only;
  rep.notes.push_back(
      "integral variant: state bounded by iiss_beta(|x0|, elapsed) + iiss_rho of the "
      "eta-weighted input content over impulse gaps");
  return rep;
}

Certificate adt_strengthen(const Certificate& cert, const DwellClass& cls) {
  if (cert.flavor != Flavor::weak)
    throw Error(ErrorKind::precondition,
                "dwell-time strengthening applies to weak envelopes only");
  const double tilde_lambda = cls.avg_dwell / (1.0 + cls.avg_dwell) * cert.lambda;
  const double tilde_k = cert.K * std::exp(cls.chatter_bound * tilde_lambda);
  Certificate out(tilde_k, tilde_lambda, Flavor::strong);
  out.note = "valid only for impulse sequences with chatter bound " +
             std::to_string(cls.chatter_bound) + " and average dwell time " +
             fmt(cls.avg_dwell);
  return out;
}

IssReport certify(const Certificate& cert, const PerturbationBound& bound,
                  double thetaC, double thetaD, const CertifyOptions& opts) {
  Certificate effective = cert;
  std::vector<std::string> notes;
  std::optional<DwellClass> applied;
  if (cert.flavor == Flavor::weak) {
    if (!opts.dwell)
      throw Error(ErrorKind::config,
                  "a weak envelope certifies nothing by itself; supply a dwell-time class "
                  "to strengthen it");
    effective = adt_strengthen(cert, *opts.dwell);
    applied = *opts.dwell;
    notes.push_back("weak envelope (K=" + fmt(cert.K) + ", lambda=" + fmt(cert.lambda) +
                    ") strengthened by the dwell-time class (chatter bound " +
                    std::to_string(opts.dwell->chatter_bound) + ", average dwell time " +
                    fmt(opts.dwell->avg_dwell) + ") to the strong envelope (K=" +
                    fmt(effective.K) + ", lambda=" + fmt(effective.lambda) + "); " +
                    effective.note);
  }
  IssReport rep;
  if (opts.variant == CertifyOptions::Variant::iiss)
    rep = iiss_certificate(effective, bound, thetaC, thetaD);
  else if (bound.M == 0.0)
    rep = iss_unrestricted(effective, bound, thetaC, thetaD);
  else
    rep = iss_small_input(effective, bound, thetaC, thetaD, opts.chosenR);
  rep.source = cert;
  rep.dwell = applied;
  rep.notes.insert(rep.notes.begin(), notes.begin(), notes.end());
  return rep;
}

LocalStabilityReport local_linearization(const ImpulsiveSystem& sys, const Certificate& cert,
                                         double radius_probe) {
  require_strong(cert, "local_linearization");
  if (!(radius_probe > 0.0))
    throw Error(ErrorKind::argument, "radius_probe must be positive");
  const int n = sys.n;
  const Vec zero_u = Vec::Zero(sys.m);
  const Vec zero_x = Vec::Zero(n);
  const double fd_step = 1e-6;

  // Times at which the flow remainder is probed, and the jump times.
  std::vector<double> flow_times;
  const double h = sys.seq.horizon();
  for (int i = 0; i <= 8; ++i) flow_times.push_back(h * i / 8.0);
  std::vector<double> jump_times(sys.seq.times().begin(), sys.seq.times().end());
  if (jump_times.size() > 16) jump_times.resize(16);

  for (double t : flow_times)
    if (sys.flow(t, zero_x, zero_u).norm() > 1e-10)
      throw Error(ErrorKind::precondition,
                  "zero is not an equilibrium of the flow at t = " + fmt(t));
  for (std::size_t k = 0; k < jump_times.size(); ++k)
    if (sys.jump(static_cast<int>(k), jump_times[k], zero_x, zero_u).norm() > 1e-10)
      throw Error(ErrorKind::precondition,
                  "zero is not a fixed point of the jump at t = " + fmt(jump_times[k]));

  auto fd_matrix = [&](auto&& fn) {
    Mat a(n, n);
    for (int i = 0; i < n; ++i) {
      Vec e = Vec::Zero(n);
      e(i) = fd_step;
      a.col(i) = (fn(Vec(e)) - fn(Vec(-e))) / (2.0 * fd_step);
    }
    return a;
  };
  auto a_at = [&](double t) {
    if (sys.A) return (*sys.A)(t);
    return fd_matrix([&](const Vec& x) { return sys.flow(t, x, zero_u); });
  };
  auto r_at = [&](int k, double tau) {
    if (sys.R) return sys.R->at(k, tau);
    return fd_matrix([&](const Vec& x) { return sys.jump(k, tau, x, zero_u); });
  };

  std::vector<Mat> a_cache, r_cache;
  for (double t : flow_times) a_cache.push_back(a_at(t));
  for (std::size_t k = 0; k < jump_times.size(); ++k)
    r_cache.push_back(r_at(static_cast<int>(k), jump_times[k]));

  const double eps = cert.lambda / (2.0 * cert.K * std::exp(cert.lambda));

  // Probe directions: the coordinate axes plus seeded random unit vectors.
  std::vector<Vec> dirs;
  for (int i = 0; i < n; ++i) {
    Vec e = Vec::Zero(n);
    e(i) = 1.0;
    dirs.push_back(e);
    dirs.push_back(-e);
  }
  std::mt19937 rng(2026u);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int s = 0; s < 16; ++s) {
    Vec d(n);
    for (int i = 0; i < n; ++i) d(i) = gauss(rng);
    if (d.norm() > 1e-12) dirs.push_back(d / d.norm());
  }

  auto remainders_ok = [&](double r) {
    for (double scale : {1.0, 0.75, 0.5, 0.25}) {
      const double rho = scale * r;
      for (const Vec& d : dirs) {
        Vec xi = rho * d;
        for (std::size_t ti = 0; ti < flow_times.size(); ++ti) {
          double rem = (sys.flow(flow_times[ti], xi, zero_u) - a_cache[ti] * xi).norm();
          if (rem > eps * rho) return false;
        }
        for (std::size_t k = 0; k < jump_times.size(); ++k) {
          double rem =
              (sys.jump(static_cast<int>(k), jump_times[k], xi, zero_u) - r_cache[k] * xi)
                  .norm();
          if (rem > eps * rho) return false;
        }
      }
    }
    return true;
  };

  double r;
  if (remainders_ok(radius_probe)) {
    r = radius_probe;
  } else {
    double lo = 0.0, hi = radius_probe;
    while (hi - lo > 1e-4 * radius_probe) {
      double mid = 0.5 * (lo + hi);
      (remainders_ok(mid) ? lo : hi) = mid;
    }
    r = lo;
  }

  LocalStabilityReport rep;
  rep.epsilon = eps;
  rep.r = r;
  rep.localK = perturbed_envelope(cert, eps, 0.0, 0.0).hatK;  // = K, zero theta budget
  rep.localRate = cert.lambda / 2.0;
  rep.basinRadius = r / (2.0 * rep.localK);
  rep.provenance.push_back({"epsilon", "lambda/(2*K*e^lambda)"});
  rep.provenance.push_back(
      {"r", "largest probed radius with flow and jump remainders below epsilon*|xi|"});
  rep.provenance.push_back(
      {"localRate", "lambda - K*e^lambda*epsilon = lambda/2 (algebraic cancellation)"});
  rep.provenance.push_back({"localK", "K (zero theta budget leaves the gain unchanged)"});
  rep.provenance.push_back({"basinRadius", "r/(2*localK)"});
  return rep;
}

}  // namespace impulsive
