// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "impulsive/linear.hpp"
#include "impulsive/system.hpp"

namespace impulsive {

// One derived quantity together with the closed-form expression it came from.
struct Provenance {
  std::string field;
  std::string formula;
};

// Stability certificate for a perturbed system, produced from a strong
// envelope (K, lambda) and a perturbation bound (Nbar, theta, M, c, eta).
//
// The integral-variant fields (hatK .. rhoCoeff) are always populated.
// The sup-norm fields (barK, barLambda, gainCoeff) are populated for the
// unrestricted (M = 0) and small-input (M > 0) variants; Rmax and chosenR
// only for the small-input variant.
struct IssReport {
  enum class Kind { iiss_only, unrestricted, small_input };
  Kind kind = Kind::iiss_only;

  Certificate source;               // envelope the caller supplied
  Certificate effective;            // strong envelope the formulas used
  std::optional<DwellClass> dwell;  // set when source was weak and strengthened

  // Echo of the perturbation data the certificate covers.
  double Nbar = 0.0;
  double M = 0.0;
  double c = 0.0;
  KFunction eta;
  double thetaC = 0.0;
  double thetaD = 0.0;

  // Integral variant: |x(t)| <= beta(|x0|, elapsed) + rho(input content).
  double hatK = 1.0;
  double hatLambda = 0.0;
  double kappa = 0.0;      // e^{hatLambda} * hatK * M
  double betaScale = 2.0;  // 2 * hatK
  double betaRate = 0.0;   // hatLambda
  double rhoCoeff = 0.0;   // 2 * (c * hatK + kappa)

  // Sup-norm variant: |x(t)| <= barK e^{-barLambda (t-t0+n)} |x0| + L eta(|u|).
  std::optional<double> Rmax;
  std::optional<double> chosenR;
  std::optional<double> barK;
  std::optional<double> barLambda;
  std::optional<double> gainCoeff;

  std::vector<Provenance> provenance;
  std::vector<std::string> notes;

  // Evaluable comparison functions. iiss_* use the integral variant,
  // iss_* the sup-norm variant (which must be present).
  double iiss_beta(double r, double s) const;
  double iiss_rho(double r) const;
  double iss_beta(double r, double s) const;
  double iss_gamma(double s) const;
};

// Linearization-based local stability around the zero equilibrium.
struct LocalStabilityReport {
  double epsilon = 0.0;      // admissible remainder slope lambda/(2 K e^lambda)
  double r = 0.0;            // validated linearization radius
  double basinRadius = 0.0;  // r / (2 localK)
  double localRate = 0.0;    // lambda / 2
  double localK = 1.0;
  std::vector<Provenance> provenance;
};

// Envelope of the perturbed transition under the weak-linearization bound:
// hatLambda = lambda - K e^lambda Nbar, hatK = K exp(K (ThetaC + e^lambda ThetaD)).
// Throws a threshold error when Nbar >= lambda/(K e^lambda).
struct PerturbedEnvelope {
  double hatK;
  double hatLambda;
};
PerturbedEnvelope perturbed_envelope(const Certificate& cert, double Nbar,
                                     double thetaC, double thetaD);

// Small-input certificate (M > 0): inputs bounded by chosenR < Rmax admit an
// exponential bound plus gain L * eta(sup-norm of the input).
IssReport iss_small_input(const Certificate& cert, const PerturbationBound& bound,
                          double thetaC, double thetaD,
                          std::optional<double> chosenR = std::nullopt);

// Unrestricted certificate (M = 0): same shape without an input threshold.
IssReport iss_unrestricted(const Certificate& cert, const PerturbationBound& bound,
                           double thetaC, double thetaD);

// Integral-variant certificate alone; valid for any input magnitude.
IssReport iiss_certificate(const Certificate& cert, const PerturbationBound& bound,
                           double thetaC, double thetaD);

// Strengthen a weak envelope into a strong one valid on the dwell-time class:
// tildeLambda = tauD/(1+tauD) * lambda, tildeK = K * e^{N0 * tildeLambda}.
Certificate adt_strengthen(const Certificate& cert, const DwellClass& cls);

// Dispatching entry point used by the CLI and the switched-system path, so
// both produce bit-identical reports. A weak source certificate requires a
// dwell-time class. Variant::automatic picks by M (0 -> unrestricted,
// > 0 -> small_input); Variant::iiss forces the integral variant alone.
struct CertifyOptions {
  enum class Variant { automatic, iiss };
  Variant variant = Variant::automatic;
  std::optional<double> chosenR;
  std::optional<DwellClass> dwell;
};
IssReport certify(const Certificate& cert, const PerturbationBound& bound,
                  double thetaC, double thetaD, const CertifyOptions& opts = {});

// Validate a radius around the zero equilibrium on which the flow and jump
// remainders stay below epsilon * |xi|, and derive the local decay bound.
// The system's A/R are used when present, otherwise central finite
// differences of f/g at xi = 0 (step 1e-6).
LocalStabilityReport local_linearization(const ImpulsiveSystem& sys,
                                         const Certificate& cert,
                                         double radius_probe);

}  // namespace impulsive
