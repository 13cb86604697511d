// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "impulsive/certificates.hpp"
#include "impulsive/linear.hpp"
#include "impulsive/system.hpp"
#include "impulsive/timebase.hpp"
#include "impulsive/types.hpp"

namespace impulsive {

/// One mode of a switched system: flow map, optional linear part, optional
/// perturbation, and the slope bound N with |phi| <= N(t)|x| + (M|x|+c)eta(|u|).
struct SwitchedMode {
  StateMap f;
  std::optional<MatrixFunction> A;
  StateMap phi;
  ScalarFunction N;  // constant zero by default
};

/// Reset applied when the active mode changes: jump map, optional linear
/// part, optional perturbation, and the jump slope bound N.
struct SwitchedReset {
  StateMap g;
  std::optional<MatrixFunction> R;
  StateMap psi;
  ScalarFunction N;
};

/// Family of modes with resets on ordered mode pairs, sharing dimensions and
/// the input-gain constants (M, c, eta). Modes are indexed from 0; a reset
/// keyed (i, j) fires when the signal switches from mode i to mode j.
struct SwitchedSystem {
  int n = 0;
  int m = 0;
  std::vector<SwitchedMode> modes;
  std::map<std::pair<int, int>, SwitchedReset> resets;
  double M = 0.0;
  double c = 0.0;
  KFunction eta;  // defaults to identity
};

/// Piecewise-constant, right-continuous mode schedule. Switch times are
/// strictly increasing, positive, and each switch changes the mode.
struct SwitchingSignal {
  int initial_mode = 0;
  std::vector<std::pair<double, int>> switches;  // (time, new mode)
  double horizon = 0.0;

  SwitchingSignal() = default;
  SwitchingSignal(int initial, std::vector<std::pair<double, int>> sw, double hor);

  /// Active mode at time t (right-continuous).
  int mode_at(double t) const;
  /// Mode immediately before t; differs from mode_at only at switch times.
  int mode_before(double t) const;
  std::vector<double> switch_times() const;
};

/// The impulsive system a signal carves out of the family: the impulse
/// sequence is exactly the switch times, flow and perturbation dispatch on
/// the active mode, jumps dispatch on the (from, to) pair. The linear part is
/// present when every mode has A and every reset the signal uses has R. The
/// bound stitches the mode/pair slope bounds into theta (with Nbar = 0): at a
/// switch time the stitched value is the pair bound, elsewhere the active
/// mode's. Fails with a configuration error naming the pair when the signal
/// uses a reset the family does not define.
ImpulsiveSystem cast_to_gswl(const SwitchedSystem& sw, const SwitchingSignal& nu);

/// Certify against either an explicit finite list of signals or a dwell-time
/// class of signals.
using SignalClass = std::variant<std::vector<SwitchingSignal>, DwellClass>;

/// Envelope source for the family: a user-asserted certificate, or a request
/// to fit one over the explicit signal list (requires linear parts; the fit
/// merges the transition-norm samples of every signal and is only evidence
/// for those signals, not the infinite class).
struct EnvelopeFitRequest {
  Flavor flavor = Flavor::strong;
  double step = 1e-3;  // transition-matrix integration step
  EnvelopeOptions options;
  unsigned pair_seed = 0;  // seeds the per-signal sampling-pair grids
};

using CertSource = std::variant<Certificate, EnvelopeFitRequest>;

/// Certificate for the whole family over the admitted signals.
///
/// The baseline slope Nbar is the largest constant among the mode/pair slope
/// bounds (zero when none is constant). Time-varying slope bounds enter as
/// excess over that baseline: per signal, the continuous budget integrates
/// max(N_mode(t) - Nbar, 0) and the jump budget sums max(N_pair(tau) - Nbar, 0)
/// at its switches; the certificate uses the worst budgets over the list.
/// Time-varying slope bounds cannot be budgeted over a dwell-time class (the
/// class fixes switch counts, not switch times), so that combination is a
/// configuration error. Weak envelopes need a dwell-time class, as in
/// certify(). Delegates to certify() so a one-signal list reproduces the
/// single-system numbers exactly.
IssReport switched_certify(const SwitchedSystem& sw, const SignalClass& signals,
                           const CertSource& source, const CertifyOptions& opts = {});

}  // namespace impulsive
