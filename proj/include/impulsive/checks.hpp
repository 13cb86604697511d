// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "impulsive/certificates.hpp"
#include "impulsive/system.hpp"

namespace impulsive {

struct Violation {
  double t = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // rhs - lhs, negative past the noise guard
};

/// Result of checking a trajectory (or a function) against a bound.
/// A sample counts as a violation only when lhs > rhs + 1e-7*(1 + rhs);
/// smaller excursions are numerical noise, not falsifications.
struct BoundCheck {
  enum class Kind { s_iss, w_iss, s_iiss, s_0gues, envelope };
  Kind kind = Kind::envelope;
  std::vector<Violation> violations;
  bool pass = true;
  double worstMargin = 0.0;  // min of rhs - lhs over all samples
};

/// Parameters of the exponential part beta(r, d) = barK * r * e^{-barLambda d}.
struct IssBoundParams {
  double barK = 1.0;
  double barLambda = 0.0;
};

/// Checks |x(t)| <= beta(|x(t0)|, d) + gain(sup-norm of u) at every sample.
/// d = t - t0 + impulse count over (t0, t] for the strong flavor, t - t0 for
/// the weak one; pre-jump samples exclude the impulse at their own time.
BoundCheck check_iss_bound(const Trajectory& traj, const ImpulseSequence& seq,
                           const IssBoundParams& params,
                           const std::function<double(double)>& gain, const InputSignal& u,
                           Flavor flavor);

/// Checks the integral variant: |x(t)| <= iiss_beta(|x(t0)|, d) + iiss_rho(m(t))
/// with m(t) the running eta-weighted content of u over [t0, t] (integral of
/// eta(|u|) plus the sum of eta(|u(tau)|) over impulses), strong counting.
BoundCheck check_iiss_bound(const Trajectory& traj, const ImpulseSequence& seq,
                            const IssReport& report, const InputSignal& u,
                            const KFunction& rho, double grid_step);

/// Matrix realization of a pointwise bound: given |gval| <= Ncap*|xval| + hcap,
/// returns B with ||B|| <= Ncap and |gval - B*xval| <= hcap.
Mat construct_selection(const Vec& gval, const Vec& xval, double Ncap, double hcap);

/// Impulsive Gronwall comparison. Marches [t0, t_end] on a grid split at
/// impulse and breakpoint times, accumulating the integrals; reports both the
/// conclusion y <= p * exp(int a) * prod(1 + b) and the hypothesis
/// y <= p + int a*y + sum b*y(tau-) for the supplied y. `y_left` supplies
/// left limits at impulse times (defaults to y itself).
struct GronwallReport {
  BoundCheck conclusion;
  BoundCheck hypothesis;
};
GronwallReport gronwall_check(const ScalarFunction& p, const ScalarFunction& a,
                              const std::function<double(int, double)>& b,
                              const ImpulseSequence& seq,
                              const std::function<double(double)>& y, double t0, double t_end,
                              double grid_step,
                              const std::function<double(double)>& y_left = nullptr);

/// Growth of the scalar system with unit decay and jumps x -> (1+delta) x on
/// the harmonic impulse sequence, started at t0 = 1, x0 = 1.
struct DivergenceReport {
  double ratio = 0.0;            // x at the (k_max+1)-th impulse time, post jump
  bool eventually_expanding = false;
  int first_expanding_k = -1;    // smallest k with (1+delta) e^{-1/k} > 1
};
DivergenceReport example1_divergence(double delta, int k_max, double step = 1e-3);

struct TrialRecord {
  int trial = 0;
  std::uint64_t seed = 0;
  bool pass = true;
  bool escaped = false;
  double escape_time = 0.0;
  double worstMargin = 0.0;
  std::vector<Violation> violations;
};

struct MonteCarloReport {
  BoundCheck aggregate;  // violations ordered by (seed, t)
  std::vector<TrialRecord> trials;
  int trial_count = 0;
  double pass_rate = 1.0;
};

struct MonteCarloOptions {
  double step = 1e-3;
  double blowup_cap = 1e12;
  int input_segments = 32;  // uniform breakpoint grid of the random inputs
};

/// Seeded trials with random piecewise-constant inputs (breakpoints on a
/// uniform grid plus the impulse times) and random initial states; each
/// trajectory is checked against the report's bound (sup-norm variant when
/// present, integral variant otherwise).
MonteCarloReport monte_carlo_iss(const ImpulsiveSystem& sys, const IssReport& report,
                                 int trial_count, double input_radius, double state_radius,
                                 std::uint64_t rng_seed, const MonteCarloOptions& opts = {});

namespace detail {
/// Orthogonal matrix sending unit vector `from` to unit vector `to`
/// (a single reflection; the identity when they nearly coincide).
Mat rotation_between(const Vec& from, const Vec& to);
}  // namespace detail

}  // namespace impulsive
