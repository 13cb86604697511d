// SPDX-License-Identifier: Apache-2.0
#include "impulsive/switched.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <set>
#include <string>
#include <utility>

namespace impulsive {

namespace {

constexpr double kBudgetStep = 1e-3;  // slope-budget integration step

std::string pair_name(int i, int j) { return std::to_string(i) + "->" + std::to_string(j); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

const SwitchedReset& reset_for(const SwitchedSystem& sw, int i, int j) {
  auto it = sw.resets.find({i, j});
  if (it == sw.resets.end())
    throw Error(ErrorKind::config, "no reset map for mode pair " + pair_name(i, j));
  return it->second;
}

void validate_family(const SwitchedSystem& sw) {
  if (sw.n < 1 || sw.m < 1)
    throw Error(ErrorKind::config, "switched system dimensions must be positive");
  if (sw.modes.empty()) throw Error(ErrorKind::config, "switched system needs at least one mode");
  const int count = static_cast<int>(sw.modes.size());
  for (int i = 0; i < count; ++i) {
    const auto& mode = sw.modes[static_cast<std::size_t>(i)];
    const std::string tag = "mode " + std::to_string(i);
    if (!mode.f && !mode.A)
      throw Error(ErrorKind::config, tag + " defines no flow (needs f or A plus phi)");
    if (mode.A && mode.A->dim() != sw.n) throw Error(ErrorKind::config, tag + ": A dimension mismatch");
    if (mode.phi && !mode.A) throw Error(ErrorKind::config, tag + " gives phi without A");
  }
  for (const auto& [key, reset] : sw.resets) {
    const std::string tag = "reset " + pair_name(key.first, key.second);
    if (key.first < 0 || key.first >= count || key.second < 0 || key.second >= count)
      throw Error(ErrorKind::config, tag + " names a mode outside the family");
    if (key.first == key.second)
      throw Error(ErrorKind::config, tag + " does not change the mode");
    if (!reset.g && !reset.R)
      throw Error(ErrorKind::config, tag + " defines no jump map (needs g or R plus psi)");
    if (reset.R && reset.R->dim() != sw.n)
      throw Error(ErrorKind::config, tag + ": R dimension mismatch");
    if (reset.psi && !reset.R) throw Error(ErrorKind::config, tag + " gives psi without R");
  }
}

void check_signal_modes(const SwitchedSystem& sw, const SwitchingSignal& nu) {
  const int count = static_cast<int>(sw.modes.size());
  if (nu.initial_mode >= count)
    throw Error(ErrorKind::config, "signal starts in mode " + std::to_string(nu.initial_mode) +
                                       " but the family has " + std::to_string(count) + " modes");
  for (const auto& [t, mode] : nu.switches)
    if (mode >= count)
      throw Error(ErrorKind::config, "signal switches to mode " + std::to_string(mode) +
                                         " but the family has " + std::to_string(count) + " modes");
}

Vec mode_flow(const SwitchedMode& mode, double t, const Vec& x, const Vec& u) {
  if (mode.f) return mode.f(t, x, u);
  Vec out = (*mode.A)(t) * x;
  if (mode.phi) out += mode.phi(t, x, u);
  return out;
}

Vec reset_jump(const SwitchedReset& reset, double tau, const Vec& x, const Vec& u) {
  if (reset.g) return reset.g(tau, x, u);
  Vec out = (*reset.R)(tau) * x;
  if (reset.psi) out += reset.psi(tau, x, u);
  return out;
}

std::size_t switch_index(const std::vector<double>& times, double tau) {
  auto it = std::lower_bound(times.begin(), times.end(), tau);
  if (it == times.end() || *it != tau)
    throw Error(ErrorKind::argument, "jump map queried off the switch times");
  return static_cast<std::size_t>(it - times.begin());
}

}  // namespace

SwitchingSignal::SwitchingSignal(int initial, std::vector<std::pair<double, int>> sw, double hor)
    : initial_mode(initial), switches(std::move(sw)), horizon(hor) {
  if (initial_mode < 0) throw Error(ErrorKind::argument, "initial mode must be nonnegative");
  double prev_t = 0.0;
  int prev_mode = initial_mode;
  for (const auto& [t, mode] : switches) {
    if (!(t > prev_t) || !std::isfinite(t))
      throw Error(ErrorKind::argument, "switch times must be strictly increasing and positive");
    if (mode < 0) throw Error(ErrorKind::argument, "switch modes must be nonnegative");
    if (mode == prev_mode)
      throw Error(ErrorKind::argument,
                  "switch at t = " + fmt(t) + " does not change the mode (" +
                      std::to_string(mode) + " -> " + std::to_string(mode) + ")");
    prev_t = t;
    prev_mode = mode;
  }
  if (!(horizon >= prev_t) || !std::isfinite(horizon))
    throw Error(ErrorKind::argument, "signal horizon must cover the last switch time");
}

int SwitchingSignal::mode_at(double t) const {
  auto it = std::upper_bound(switches.begin(), switches.end(), t,
                             [](double v, const std::pair<double, int>& s) { return v < s.first; });
  return it == switches.begin() ? initial_mode : std::prev(it)->second;
}

int SwitchingSignal::mode_before(double t) const {
  auto it = std::lower_bound(switches.begin(), switches.end(), t,
                             [](const std::pair<double, int>& s, double v) { return s.first < v; });
  return it == switches.begin() ? initial_mode : std::prev(it)->second;
}

std::vector<double> SwitchingSignal::switch_times() const {
  std::vector<double> out;
  out.reserve(switches.size());
  for (const auto& [t, mode] : switches) out.push_back(t);
  return out;
}

ImpulsiveSystem cast_to_gswl(const SwitchedSystem& sw, const SwitchingSignal& nu) {
  validate_family(sw);
  check_signal_modes(sw, nu);

  // Resolve every reset the signal uses up front, in switch order.
  std::vector<SwitchedReset> used;
  used.reserve(nu.switches.size());
  {
    int prev = nu.initial_mode;
    for (const auto& [t, mode] : nu.switches) {
      used.push_back(reset_for(sw, prev, mode));
      prev = mode;
    }
  }

  auto modes = std::make_shared<const std::vector<SwitchedMode>>(sw.modes);
  auto resets = std::make_shared<const std::vector<SwitchedReset>>(std::move(used));
  auto sig = std::make_shared<const SwitchingSignal>(nu);
  auto taus = std::make_shared<const std::vector<double>>(nu.switch_times());

  ImpulsiveSystem sys;
  sys.n = sw.n;
  sys.m = sw.m;
  sys.seq = ImpulseSequence(*taus, nu.horizon);

  auto active = [modes, sig](double t) -> const SwitchedMode& {
    return (*modes)[static_cast<std::size_t>(sig->mode_at(t))];
  };
  auto closing = [modes, sig](double t) -> const SwitchedMode& {
    return (*modes)[static_cast<std::size_t>(sig->mode_before(t))];
  };

  sys.f = [active](double t, const Vec& x, const Vec& u) { return mode_flow(active(t), t, x, u); };
  sys.f_left = [closing](double t, const Vec& x, const Vec& u) -> Vec {
    const SwitchedMode& mode = closing(t);
    if (mode.f) return mode.f(t, x, u);
    Vec out = mode.A->left(t) * x;
    if (mode.phi) out += mode.phi(t, x, u);
    return out;
  };
  sys.g = [resets, taus](double tau, const Vec& x, const Vec& u) {
    return reset_jump((*resets)[switch_index(*taus, tau)], tau, x, u);
  };

  const bool all_modes_linear =
      std::all_of(sw.modes.begin(), sw.modes.end(),
                  [](const SwitchedMode& mode) { return mode.A.has_value(); });
  if (all_modes_linear) {
    std::vector<double> hints = *taus;
    for (const auto& mode : sw.modes) {
      const auto& bp = mode.A->breakpoints();
      hints.insert(hints.end(), bp.begin(), bp.end());
    }
    std::sort(hints.begin(), hints.end());
    hints.erase(std::unique(hints.begin(), hints.end()), hints.end());
    sys.A = MatrixFunction::callable(
        sw.n, [active](double t) { return (*active(t).A)(t); }, std::move(hints),
        [closing](double t) { return closing(t).A->left(t); });
    sys.phi = [active](double t, const Vec& x, const Vec& u) -> Vec {
      const SwitchedMode& mode = active(t);
      if (mode.phi) return mode.phi(t, x, u);
      if (mode.f) return mode.f(t, x, u) - (*mode.A)(t) * x;
      return Vec::Zero(x.size());
    };
  }

  const bool all_used_linear = std::all_of(
      resets->begin(), resets->end(), [](const SwitchedReset& r) { return r.R.has_value(); });
  if (taus->empty()) {
    sys.R = JumpMatrixMap::constant(Mat::Identity(sw.n, sw.n));
  } else if (all_used_linear) {
    std::vector<Mat> table;
    table.reserve(taus->size());
    for (std::size_t k = 0; k < taus->size(); ++k) table.push_back((*(*resets)[k].R)((*taus)[k]));
    sys.R = JumpMatrixMap::per_impulse(std::move(table));
    sys.psi = [resets, taus](double tau, const Vec& x, const Vec& u) -> Vec {
      const SwitchedReset& reset = (*resets)[switch_index(*taus, tau)];
      if (reset.psi) return reset.psi(tau, x, u);
      if (reset.g) return reset.g(tau, x, u) - (*reset.R)(tau) * x;
      return Vec::Zero(x.size());
    };
  }

  // Stitched slope bound, all of it in theta: the pair bound exactly at
  // switch times, the active mode's bound elsewhere.
  std::vector<double> theta_hints = *taus;
  for (const auto& mode : sw.modes) {
    const auto& bp = mode.N.breakpoints();
    theta_hints.insert(theta_hints.end(), bp.begin(), bp.end());
  }
  std::sort(theta_hints.begin(), theta_hints.end());
  theta_hints.erase(std::unique(theta_hints.begin(), theta_hints.end()), theta_hints.end());
  auto stitched = ScalarFunction::callable(
      [modes, resets, sig, taus](double t) -> double {
        auto it = std::lower_bound(taus->begin(), taus->end(), t);
        if (it != taus->end() && *it == t)
          return (*resets)[static_cast<std::size_t>(it - taus->begin())].N(t);
        return (*modes)[static_cast<std::size_t>(sig->mode_at(t))].N(t);
      },
      std::move(theta_hints),
      [closing](double t) { return closing(t).N.left(t); });
  sys.bound = PerturbationBound(0.0, std::move(stitched), sw.M, sw.c, sw.eta);

  return sys.finalize();
}

namespace {

struct SlopeBaseline {
  double nbar = 0.0;
  bool time_varying = false;
};

void fold_slope(SlopeBaseline& base, const ScalarFunction& n, const std::string& tag) {
  if (!n.is_constant()) {
    base.time_varying = true;
    return;
  }
  const double v = n.constant_value();
  if (v < 0.0) throw Error(ErrorKind::config, tag + ": slope bound must be nonnegative");
  base.nbar = std::max(base.nbar, v);
}

// Baseline over every mode and reset: any admitted signal may use them.
SlopeBaseline family_baseline(const SwitchedSystem& sw) {
  SlopeBaseline base;
  for (std::size_t i = 0; i < sw.modes.size(); ++i)
    fold_slope(base, sw.modes[i].N, "mode " + std::to_string(i));
  for (const auto& [key, reset] : sw.resets)
    fold_slope(base, reset.N, "reset " + pair_name(key.first, key.second));
  return base;
}

// Baseline over the modes the signals visit and the resets they fire.
SlopeBaseline list_baseline(const SwitchedSystem& sw, const std::vector<SwitchingSignal>& list) {
  std::set<int> modes;
  std::set<std::pair<int, int>> pairs;
  for (const auto& nu : list) {
    int prev = nu.initial_mode;
    modes.insert(prev);
    for (const auto& [t, mode] : nu.switches) {
      modes.insert(mode);
      pairs.insert({prev, mode});
      prev = mode;
    }
  }
  SlopeBaseline base;
  for (int i : modes) fold_slope(base, sw.modes[static_cast<std::size_t>(i)].N,
                                 "mode " + std::to_string(i));
  for (const auto& [i, j] : pairs) fold_slope(base, reset_for(sw, i, j).N, "reset " + pair_name(i, j));
  return base;
}

struct Budgets {
  double thetaC = 0.0;
  double thetaD = 0.0;
};

// Excess of the signal's stitched slope bound over the baseline: integrated
// along the flow, summed at the switches.
Budgets signal_budgets(const SwitchedSystem& sw, const SwitchingSignal& nu, double nbar) {
  Budgets b;
  auto pos = [](double v) { return v > 0.0 ? v : 0.0; };
  std::vector<double> splits = nu.switch_times();
  for (const auto& mode : sw.modes) {
    const auto& bp = mode.N.breakpoints();
    splits.insert(splits.end(), bp.begin(), bp.end());
  }
  b.thetaC = detail::trapezoid_split(
      [&](double t) { return pos(sw.modes[static_cast<std::size_t>(nu.mode_at(t))].N(t) - nbar); },
      [&](double t) {
        return pos(sw.modes[static_cast<std::size_t>(nu.mode_before(t))].N.left(t) - nbar);
      },
      0.0, nu.horizon, kBudgetStep, splits);
  int prev = nu.initial_mode;
  for (const auto& [t, mode] : nu.switches) {
    b.thetaD += pos(reset_for(sw, prev, mode).N(t) - nbar);
    prev = mode;
  }
  return b;
}

Certificate fit_over_signals(const SwitchedSystem& sw, const std::vector<SwitchingSignal>& list,
                             const EnvelopeFitRequest& req) {
  std::vector<std::pair<double, double>> samples;
  for (std::size_t i = 0; i < list.size(); ++i) {
    ImpulsiveSystem sys = cast_to_gswl(sw, list[i]);
    if (!sys.has_linear_part())
      throw Error(ErrorKind::config,
                  "envelope fitting needs a linear part on every mode and on every reset the "
                  "signals use");
    LinearImpulsiveSystem lin = sys.linear_part();
    const auto pairs = default_pair_grid(sys.seq, req.pair_seed + static_cast<unsigned>(i));
    for (const auto& [s, t] : pairs) {
      const double norm = spectral_norm(transition_matrix(lin, s, t, req.step));
      const double d =
          (t - s) + (req.flavor == Flavor::strong ? static_cast<double>(sys.seq.count(s, t)) : 0.0);
      samples.emplace_back(d, norm);
    }
  }
  return detail::sweep_envelope(samples, req.flavor, req.options);
}

}  // namespace

IssReport switched_certify(const SwitchedSystem& sw, const SignalClass& signals,
                           const CertSource& source, const CertifyOptions& opts) {
  validate_family(sw);
  const auto* list = std::get_if<std::vector<SwitchingSignal>>(&signals);
  const auto* cls = std::get_if<DwellClass>(&signals);
  if (list) {
    if (list->empty())
      throw Error(ErrorKind::argument, "the explicit signal class must not be empty");
    for (const auto& nu : *list) check_signal_modes(sw, nu);
  }

  const SlopeBaseline base = list ? list_baseline(sw, *list) : family_baseline(sw);
  double theta_c = 0.0, theta_d = 0.0;
  if (base.time_varying) {
    if (cls)
      throw Error(ErrorKind::config,
                  "time-varying slope bounds cannot be budgeted over a dwell-time class; list "
                  "the admitted signals explicitly");
    for (const auto& nu : *list) {
      const Budgets b = signal_budgets(sw, nu, base.nbar);
      theta_c = std::max(theta_c, b.thetaC);
      theta_d = std::max(theta_d, b.thetaD);
    }
  }

  Certificate cert;
  bool fitted = false;
  if (const auto* given = std::get_if<Certificate>(&source)) {
    cert = *given;
  } else {
    if (cls)
      throw Error(ErrorKind::config,
                  "an envelope over a dwell-time class must be user-asserted; fitting needs an "
                  "explicit signal list");
    cert = fit_over_signals(sw, *list, std::get<EnvelopeFitRequest>(source));
    fitted = true;
  }

  CertifyOptions pass = opts;
  if (cls) {
    if (pass.dwell &&
        (pass.dwell->chatter_bound != cls->chatter_bound || pass.dwell->avg_dwell != cls->avg_dwell))
      throw Error(ErrorKind::config,
                  "conflicting dwell-time classes between the signal class and the options");
    pass.dwell = *cls;
  }

  const PerturbationBound family_bound(base.nbar, ScalarFunction(), sw.M, sw.c, sw.eta);
  IssReport rep = certify(cert, family_bound, theta_c, theta_d, pass);

  std::string path = "switched family over ";
  if (cls)
    path += "the dwell-time class (chatter bound " + std::to_string(cls->chatter_bound) +
            ", average dwell time " + fmt(cls->avg_dwell) + ")";
  else
    path += "an explicit list of " + std::to_string(list->size()) + " switching signal" +
            (list->size() == 1 ? "" : "s");
  path += "; baseline slope " + fmt(base.nbar) + " over the admitted mode and reset bounds";
  if (base.time_varying)
    path += "; time-varying slope bounds entered as excess budgets (continuous " + fmt(theta_c) +
            ", jump " + fmt(theta_d) + ") rather than through the constant-slope family statement";
  rep.notes.insert(rep.notes.begin(), path);
  if (fitted)
    rep.notes.push_back(
        "the envelope was fitted over the listed signals only; it is evidence for them, not a "
        "certificate for the infinite switching class");
  return rep;
}

}  // namespace impulsive
