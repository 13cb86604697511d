// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "impulsive/types.hpp"

namespace impulsive {

/// Strictly increasing, positive impulse times together with the horizon they
/// are trusted on. Counting is always over half-open-left intervals (s, t].
class ImpulseSequence {
 public:
  ImpulseSequence() = default;
  ImpulseSequence(std::vector<double> times, double horizon);

  static ImpulseSequence periodic(double period, double offset, double horizon);

  const std::vector<double>& times() const noexcept { return times_; }
  double horizon() const noexcept { return horizon_; }
  bool empty() const noexcept { return times_.empty(); }
  std::size_t size() const noexcept { return times_.size(); }
  double operator[](std::size_t k) const { return times_[k]; }

  /// Number of impulse times in (s, t]. Requires s <= t.
  int count(double s, double t) const;

  /// Index of the first impulse time > s, or size() when none.
  std::size_t first_after(double s) const;

  bool contains(double t) const;

  /// Same times with a new (not smaller than the last time) horizon.
  ImpulseSequence with_horizon(double horizon) const;

 private:
  std::vector<double> times_;
  double horizon_ = 0.0;
};

/// Dwell-time class: at most `chatter_bound + (t-s)/avg_dwell` impulses on any
/// interval (s, t].
struct DwellClass {
  int chatter_bound = 1;   // N0 >= 1
  double avg_dwell = 1.0;  // tauD > 0

  DwellClass() = default;
  DwellClass(int n0, double tau_d);
};

struct DwellCheck {
  bool ok = true;
  // First violating window, as indices into the sequence and as times.
  std::size_t i = 0, j = 0;
  double from = 0.0, to = 0.0;
  int count = 0;          // impulses in the window
  double admissible = 0;  // N0 + (to - from)/tauD
};

/// Scalar function of time with explicit one-sided values. Piecewise-constant
/// kinds are right-continuous; `left` gives the limit from below.
class ScalarFunction {
 public:
  ScalarFunction() = default;  // constant zero

  static ScalarFunction constant(double v);
  /// Right-continuous steps: value is values[k] on [breakpoints[k], breakpoints[k+1]).
  /// The first breakpoint must be the domain start (time 0 in practice); the
  /// function is extended constantly to the left of it and right of the last.
  static ScalarFunction piecewise(std::vector<double> breakpoints, std::vector<double> values);
  /// `left_f`, when given, supplies the limit from below at the function's
  /// own discontinuities; otherwise left(t) falls back to the right value.
  static ScalarFunction callable(std::function<double(double)> f,
                                 std::vector<double> breakpoints_hint = {},
                                 std::function<double(double)> left_f = nullptr);

  double operator()(double t) const;
  double left(double t) const;
  const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }

  bool is_constant() const noexcept { return kind_ == Kind::constant; }
  double constant_value() const;

 private:
  enum class Kind { constant, piecewise, callable };
  Kind kind_ = Kind::constant;
  double const_ = 0.0;
  std::vector<double> breakpoints_;
  std::vector<double> values_;
  std::function<double(double)> fn_;
  std::function<double(double)> left_fn_;
};

/// Input signal u : time -> R^m, right-continuous, with known discontinuity
/// locations so integrators can split there.
class InputSignal {
 public:
  InputSignal() = default;

  static InputSignal zero(int dim);
  static InputSignal piecewise(std::vector<double> breakpoints, std::vector<Vec> values);
  static InputSignal callable(int dim, std::function<Vec(double)> f,
                              std::vector<double> breakpoints_hint = {});

  Vec operator()(double t) const;
  Vec left(double t) const;
  int dim() const noexcept { return dim_; }
  const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
  bool is_zero() const noexcept { return kind_ == Kind::zero; }

 private:
  enum class Kind { zero, piecewise, callable };
  Kind kind_ = Kind::zero;
  int dim_ = 0;
  std::vector<double> breakpoints_;
  std::vector<Vec> values_;
  std::function<Vec(double)> fn_;
};

/// Class-K comparison function: continuous, strictly increasing, zero at zero.
/// Supports forward evaluation, the generalized inverse, and the supremum
/// (finite for the saturating kind, +inf otherwise).
class KFunction {
 public:
  KFunction() = default;  // identity

  static KFunction identity();
  static KFunction power(double p);      // r^p, p > 0
  static KFunction scaled(double a);     // a*r, a > 0
  static KFunction saturating(double a); // a*r/(1+r), sup = a
  /// Piecewise-linear through (r[k], v[k]); must start at (0,0) and be
  /// strictly increasing. Extended past the last point with the last slope.
  static KFunction tabulated(std::vector<double> r, std::vector<double> v);

  double operator()(double r) const;
  /// Generalized inverse; +inf when y >= sup().
  double inverse(double y) const;
  double sup() const;

 private:
  enum class Kind { identity, power, scaled, saturating, tabulated };
  Kind kind_ = Kind::identity;
  double param_ = 1.0;
  std::vector<double> rs_, vs_;
};

/// Impulse times with harmonic gaps: tau_1 = 1, tau_{k+1} = tau_k + 1/k.
/// Horizon defaults to the last time when not given.
ImpulseSequence harmonic_sequence(int k_max, std::optional<double> horizon = std::nullopt);

/// Number of impulse times in (s, t].
int count_impulses(const ImpulseSequence& seq, double s, double t);

/// Exhaustive dwell-class test over all impulse-index windows plus the
/// leading window starting at time 0.
DwellCheck check_dwell_class(const ImpulseSequence& seq, const DwellClass& cls);

/// sup_{[0, t_end]} |u| scanned on a uniform grid split at breakpoints,
/// sampling both one-sided values at each node.
double sup_norm(const InputSignal& u, double t_end, double grid_step);

/// Integral of eta(|u|) over [0, t_end] plus the sum of eta(|u(tau)|) over
/// impulse times tau <= t_end. Trapezoid rule split at breakpoints and
/// impulse times, one-sided values at the seams (exact for step inputs).
double sigma_rho_norm(const InputSignal& u, const ImpulseSequence& seq, const KFunction& eta,
                      double t_end, double grid_step);

namespace detail {

/// Trapezoid rule on [a, b] that subdivides at `splits` and uses the right
/// value at each piece start and the left limit at each piece end.
double trapezoid_split(const std::function<double(double)>& right_value,
                       const std::function<double(double)>& left_value, double a, double b,
                       double step, const std::vector<double>& splits);

/// Merge, sort, and deduplicate grid anchors inside (a, b).
std::vector<double> interior_anchors(double a, double b,
                                     const std::vector<const std::vector<double>*>& sources);

}  // namespace detail
}  // namespace impulsive
