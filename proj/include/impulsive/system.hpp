// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "impulsive/linear.hpp"
#include "impulsive/timebase.hpp"
#include "impulsive/types.hpp"

namespace impulsive {

/// State map (t, xi, mu) -> vector, shared shape for flows, jumps, and
/// perturbations.
using StateMap = std::function<Vec(double, const Vec&, const Vec&)>;

/// Bound on the perturbation parts: |phi| <= N(t)|xi| + (M|xi| + c) eta(|mu|)
/// with N(t) = Nbar + theta(t).
struct PerturbationBound {
  double Nbar = 0.0;
  ScalarFunction theta;  // defaults to constant zero
  double M = 0.0;
  double c = 0.0;
  KFunction eta;  // defaults to identity

  PerturbationBound() = default;
  PerturbationBound(double nbar, ScalarFunction th, double m, double cc, KFunction e);

  double n_at(double t) const { return Nbar + theta(t); }
};

/// Nonlinear impulsive system: flow f and jump g, optionally decomposed into
/// a linear part (A, R) plus perturbations (phi, psi), with the impulse
/// sequence and the perturbation bound needed by the certificate formulas.
///
/// Either the full maps or the decomposed form may be given; missing pieces
/// are derived (f = A xi + phi, phi = f - A xi, ...). Aggregate-initialize the
/// fields, then call finalize() once; it validates and fills the derivations.
struct ImpulsiveSystem {
  int n = 0;
  int m = 0;
  StateMap f;  // flow; derived from A + phi when absent
  // Limit of f from below in time, for flows with jumps in their time
  // dependence (mode switches). Only consulted by integrator stages landing
  // exactly on a grid node; leave empty when f is continuous in t.
  StateMap f_left;
  StateMap g;  // jump; derived from R + psi when absent
  std::optional<MatrixFunction> A;
  std::optional<JumpMatrixMap> R;
  StateMap phi;  // flow perturbation; derived from f - A xi when A present
  StateMap psi;  // jump perturbation; derived from g - R xi when R present
  ImpulseSequence seq;
  std::optional<PerturbationBound> bound;

  ImpulsiveSystem& finalize();

  Vec flow(double t, const Vec& x, const Vec& u) const;
  /// Flow by the limit from below in time; differs from flow() only at time
  /// discontinuities of f (or of A when the flow is derived).
  Vec flow_left(double t, const Vec& x, const Vec& u) const;
  /// Jump at impulse index k (time tau = seq[k]).
  Vec jump(std::size_t k, double tau, const Vec& x, const Vec& u) const;
  bool has_linear_part() const noexcept { return A.has_value() && R.has_value(); }
  /// The linear pair (A, R, seq) when present.
  LinearImpulsiveSystem linear_part() const;

  Vec phi_at(double t, const Vec& x, const Vec& u) const;
  Vec psi_at(std::size_t k, double tau, const Vec& x, const Vec& u) const;

 private:
  bool finalized_ = false;
};

struct TrajectorySample {
  double t = 0.0;
  Vec x;
  enum class Phase { flow, pre_jump, post_jump } phase = Phase::flow;
};

/// Right-continuous solution record; impulse times in (t0, t_end] carry a
/// pre/post sample pair. The first sample never has a jump applied.
struct Trajectory {
  double t0 = 0.0;
  double t_end = 0.0;
  std::vector<TrajectorySample> samples;
  std::vector<std::pair<std::size_t, double>> jumps;  // (impulse index, time)

  const Vec& initial_state() const { return samples.front().x; }
  const Vec& final_state() const { return samples.back().x; }
};

struct SimulateOptions {
  double step = 1e-3;
  double blowup_cap = 1e12;
};

/// Fixed-step RK4 between impulses (grid split at impulse times and input
/// breakpoints, u frozen at each substep start); applies the jump map at each
/// impulse in (t0, t_end]. Escape guard: |x| > blowup_cap raises an escape
/// error carrying the time.
Trajectory simulate(const ImpulsiveSystem& sys, double t0, const Vec& x0, const InputSignal& u,
                    double t_end, const SimulateOptions& opts = {});

struct DecompositionReport {
  bool pass = true;
  double worst_margin = 0.0;  // min over samples of rhs - lhs
  double t = 0.0;             // worst sample
  Vec xi, mu;
  bool jump_side = false;
  double consistency_residual = 0.0;  // max |f - (A xi + phi)| style residual
  int samples = 0;
  unsigned seed = 0;
};

/// Samples (t, xi, mu) and checks both perturbation bounds plus the stored
/// map/decomposition consistency. A sampling check, not a proof.
DecompositionReport validate_decomposition(const ImpulsiveSystem& sys, int sample_count,
                                           double state_radius, double input_radius,
                                           unsigned seed);

/// Integral of theta over [0, horizon] plus its sum over impulse times.
double theta_budget(const ImpulsiveSystem& sys, double grid_step);

}  // namespace impulsive
