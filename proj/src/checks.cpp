// SPDX-License-Identifier: Apache-2.0
#include "impulsive/checks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace impulsive {

namespace {

constexpr double kCertGuard = 1e-7;      // falsification guard for certificate checks
constexpr double kGronwallGuard = 1e-9;  // tighter guard for the comparison oracle

void record(BoundCheck& check, double t, double lhs, double rhs, double guard) {
  const double margin = rhs - lhs;
  if (lhs > rhs + guard * (1.0 + std::abs(rhs))) {
    check.violations.push_back({t, lhs, rhs, margin});
    check.pass = false;
  }
  check.worstMargin = std::min(check.worstMargin, margin);
}

BoundCheck fresh_check(BoundCheck::Kind kind) {
  BoundCheck check;
  check.kind = kind;
  check.worstMargin = std::numeric_limits<double>::infinity();
  return check;
}

// Uniform sample from the closed ball of the given radius.
Vec ball_sample(std::mt19937_64& rng, int dim, double radius) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v(i) = gauss(rng);
  const double n = v.norm();
  if (n < 1e-300 || radius <= 0.0) return Vec::Zero(dim);
  return v * (radius * std::pow(unif(rng), 1.0 / dim) / n);
}

}  // namespace

BoundCheck check_iss_bound(const Trajectory& traj, const ImpulseSequence& seq,
                           const IssBoundParams& params,
                           const std::function<double(double)>& gain, const InputSignal& u,
                           Flavor flavor) {
  if (traj.samples.empty()) throw Error(ErrorKind::argument, "empty trajectory");
  BoundCheck check =
      fresh_check(flavor == Flavor::strong ? BoundCheck::Kind::s_iss : BoundCheck::Kind::w_iss);
  const double t0 = traj.t0;
  const double r0 = traj.initial_state().norm();
  const double uinf = u.is_zero() ? 0.0 : sup_norm(u, traj.t_end, 1e-3);
  const double gain_term = gain ? gain(uinf) : 0.0;
  for (const auto& s : traj.samples) {
    double d = s.t - t0;
    if (flavor == Flavor::strong) {
      int n = seq.count(t0, s.t);
      if (s.phase == TrajectorySample::Phase::pre_jump) n -= 1;  // left limit at the impulse
      d += n;
    }
    const double rhs = params.barK * r0 * std::exp(-params.barLambda * d) + gain_term;
    record(check, s.t, s.x.norm(), rhs, kCertGuard);
  }
  return check;
}

BoundCheck check_iiss_bound(const Trajectory& traj, const ImpulseSequence& seq,
                            const IssReport& report, const InputSignal& u,
                            const KFunction& rho, double grid_step) {
  if (traj.samples.empty()) throw Error(ErrorKind::argument, "empty trajectory");
  if (!(grid_step > 0.0)) throw Error(ErrorKind::argument, "grid_step must be positive");
  BoundCheck check = fresh_check(BoundCheck::Kind::s_iiss);
  const double t0 = traj.t0;
  const double r0 = traj.initial_state().norm();

  // Running eta-weighted content of u over [t0, t]: trapezoid between samples
  // (one-sided values at the seams), impulse charge added at post-jump samples.
  double content = 0.0;
  auto eta_right = [&](double t) { return rho(u(t).norm()); };
  auto eta_left = [&](double t) { return rho(u.left(t).norm()); };
  auto segment = [&](double a, double b) {
    if (b <= a) return 0.0;
    const int pieces = std::max(1, static_cast<int>(std::ceil((b - a) / grid_step - 1e-12)));
    const double h = (b - a) / pieces;
    double acc = 0.0;
    for (int k = 0; k < pieces; ++k) {
      const double lo = a + k * h, hi = (k + 1 == pieces) ? b : a + (k + 1) * h;
      const double vlo = (k == 0) ? eta_right(lo) : rho(u(lo).norm());
      const double vhi = (k + 1 == pieces) ? eta_left(hi) : rho(u(hi).norm());
      acc += 0.5 * (hi - lo) * (vlo + vhi);
    }
    return acc;
  };

  for (std::size_t i = 0; i < traj.samples.size(); ++i) {
    const auto& s = traj.samples[i];
    if (i > 0) {
      const auto& prev = traj.samples[i - 1];
      if (s.phase == TrajectorySample::Phase::post_jump &&
          prev.phase == TrajectorySample::Phase::pre_jump) {
        content += rho(u(s.t).norm());  // impulse charge reads the jump-time value
      } else {
        content += segment(prev.t, s.t);
      }
    }
    double d = s.t - t0;
    int n = seq.count(t0, s.t);
    if (s.phase == TrajectorySample::Phase::pre_jump) n -= 1;
    d += n;
    const double rhs = report.iiss_beta(r0, d) + report.iiss_rho(content);
    record(check, s.t, s.x.norm(), rhs, kCertGuard);
  }
  return check;
}

Mat detail::rotation_between(const Vec& from, const Vec& to) {
  const auto n = from.size();
  Vec d = from - to;
  if (d.norm() < 1e-12) return Mat::Identity(n, n);
  d /= d.norm();
  return Mat::Identity(n, n) - 2.0 * d * d.transpose();
}

Mat construct_selection(const Vec& gval, const Vec& xval, double Ncap, double hcap) {
  if (gval.size() != xval.size())
    throw Error(ErrorKind::argument, "value and state vectors must share a dimension");
  if (Ncap < 0.0 || hcap < 0.0)
    throw Error(ErrorKind::argument, "bound constants must be nonnegative");
  const auto n = xval.size();
  const double gn = gval.norm(), xn = xval.norm();
  const double cap = Ncap * xn + hcap;
  if (gn > cap + 1e-12 * (1.0 + cap))
    throw Error(ErrorKind::precondition,
                "the pointwise bound |g| <= N|x| + h does not hold for these values");
  if (gn == 0.0 || xn == 0.0) return Mat::Zero(n, n);
  const double scale = std::min(gn / xn, Ncap);
  return scale * detail::rotation_between(Vec(xval / xn), Vec(gval / gn));
}

GronwallReport gronwall_check(const ScalarFunction& p, const ScalarFunction& a,
                              const std::function<double(int, double)>& b,
                              const ImpulseSequence& seq,
                              const std::function<double(double)>& y, double t0, double t_end,
                              double grid_step, const std::function<double(double)>& y_left) {
  if (!y) throw Error(ErrorKind::argument, "candidate function must not be empty");
  if (!b) throw Error(ErrorKind::argument, "jump weight function must not be empty");
  if (!(grid_step > 0.0)) throw Error(ErrorKind::argument, "grid_step must be positive");
  if (!(t_end >= t0)) throw Error(ErrorKind::argument, "time window is reversed");
  const auto& yl = y_left ? y_left : y;

  std::vector<double> anchors;
  for (double tau : seq.times())
    if (tau > t0 && tau <= t_end) anchors.push_back(tau);
  for (const auto* fn : {&p, &a})
    for (double s : fn->breakpoints())
      if (s > t0 && s < t_end) anchors.push_back(s);
  const auto nodes = detail::subdivided_nodes(t0, t_end, grid_step, anchors);

  // Precondition: p nondecreasing along the grid (one-sided values included).
  double prev_p = p(nodes.front());
  for (double t : nodes) {
    const double lo = p.left(t), hi = p(t);
    const double tol = 1e-12 * (1.0 + std::abs(prev_p));
    if (lo < prev_p - tol || hi < lo - 1e-12 * (1.0 + std::abs(lo)))
      throw Error(ErrorKind::precondition, "p must be nondecreasing on the window");
    prev_p = hi;
  }

  GronwallReport rep;
  rep.conclusion = fresh_check(BoundCheck::Kind::envelope);
  rep.hypothesis = fresh_check(BoundCheck::Kind::envelope);

  double int_a = 0.0, int_ay = 0.0, sum_by = 0.0, prod_b = 1.0;
  std::size_t jump_idx = 0;
  const auto& taus = seq.times();
  while (jump_idx < taus.size() && taus[jump_idx] <= t0) ++jump_idx;

  record(rep.conclusion, t0, y(t0), p(t0), kGronwallGuard);
  record(rep.hypothesis, t0, y(t0), p(t0), kGronwallGuard);

  for (std::size_t i = 1; i < nodes.size(); ++i) {
    const double lo = nodes[i - 1], hi = nodes[i];
    const double a_lo = a(lo), a_hi = a.left(hi);
    if (a_lo < 0.0 || a_hi < 0.0)
      throw Error(ErrorKind::precondition, "a must be nonnegative on the window");
    int_a += 0.5 * (hi - lo) * (a_lo + a_hi);
    int_ay += 0.5 * (hi - lo) * (a_lo * y(lo) + a_hi * yl(hi));

    const bool at_jump = jump_idx < taus.size() && taus[jump_idx] == hi;
    if (at_jump) {
      const double ylv = yl(hi);
      record(rep.conclusion, hi, ylv, p.left(hi) * std::exp(int_a) * prod_b, kGronwallGuard);
      record(rep.hypothesis, hi, ylv, p.left(hi) + int_ay + sum_by, kGronwallGuard);
      const double bv = b(static_cast<int>(jump_idx), hi);
      if (bv < 0.0)
        throw Error(ErrorKind::precondition, "jump weights must be nonnegative");
      prod_b *= 1.0 + bv;
      sum_by += bv * ylv;
      ++jump_idx;
    }
    record(rep.conclusion, hi, y(hi), p(hi) * std::exp(int_a) * prod_b, kGronwallGuard);
    record(rep.hypothesis, hi, y(hi), p(hi) + int_ay + sum_by, kGronwallGuard);
  }
  return rep;
}

DivergenceReport example1_divergence(double delta, int k_max, double step) {
  if (delta < 0.0) throw Error(ErrorKind::argument, "delta must be nonnegative");
  if (k_max < 2) throw Error(ErrorKind::argument, "k_max must be at least 2");
  if (!(step > 0.0)) throw Error(ErrorKind::argument, "step must be positive");

  auto seq = harmonic_sequence(k_max + 1);
  ImpulsiveSystem sys;
  sys.n = 1;
  sys.m = 1;
  sys.f = [](double, const Vec& x, const Vec&) { return Vec(-x); };
  sys.g = [delta](double, const Vec& x, const Vec&) { return Vec((1.0 + delta) * x); };
  sys.seq = seq;
  sys.finalize();
  Vec x0(1);
  x0 << 1.0;
  auto traj =
      simulate(sys, 1.0, x0, InputSignal::zero(1), seq.times().back(), {step, 1e30});

  DivergenceReport rep;
  rep.ratio = traj.final_state()(0);
  if (delta > 0.0) {
    rep.eventually_expanding = true;
    // Smallest k with e^{-1/k} (1+delta) > 1, i.e. 1/k < log(1+delta).
    rep.first_expanding_k = static_cast<int>(std::floor(1.0 / std::log1p(delta))) + 1;
  }
  return rep;
}

MonteCarloReport monte_carlo_iss(const ImpulsiveSystem& sys, const IssReport& report,
                                 int trial_count, double input_radius, double state_radius,
                                 std::uint64_t rng_seed, const MonteCarloOptions& opts) {
  if (trial_count < 0) throw Error(ErrorKind::argument, "trial count must be nonnegative");
  if (input_radius < 0.0 || state_radius < 0.0)
    throw Error(ErrorKind::argument, "sampling radii must be nonnegative");
  if (report.Rmax && input_radius > *report.chosenR)
    throw ThresholdError(
        "input radius exceeds the certified input bound chosenR; the sup-norm "
        "certificate says nothing about such inputs",
        *report.chosenR, input_radius);

  const bool sup_variant = report.barK.has_value();
  MonteCarloReport mc;
  mc.trial_count = trial_count;
  mc.aggregate = fresh_check(sup_variant ? BoundCheck::Kind::s_iss : BoundCheck::Kind::s_iiss);

  const double t0 = 0.0;
  const double t_end = sys.seq.horizon();
  std::vector<double> breaks;
  for (int k = 0; k < opts.input_segments; ++k)
    breaks.push_back(t0 + (t_end - t0) * k / opts.input_segments);
  for (double tau : sys.seq.times())
    if (tau > t0 && tau < t_end) breaks.push_back(tau);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  std::mt19937_64 master(rng_seed);
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(trial_count));
  for (auto& s : seeds) s = master();

  int passes = 0;
  for (int trial = 0; trial < trial_count; ++trial) {
    std::mt19937_64 rng(seeds[static_cast<std::size_t>(trial)]);
    Vec x0 = ball_sample(rng, sys.n, state_radius);
    std::vector<Vec> values;
    values.reserve(breaks.size());
    for (std::size_t k = 0; k < breaks.size(); ++k)
      values.push_back(ball_sample(rng, sys.m, input_radius));
    auto u = InputSignal::piecewise(breaks, values);

    TrialRecord rec;
    rec.trial = trial;
    rec.seed = seeds[static_cast<std::size_t>(trial)];
    try {
      auto traj = simulate(sys, t0, x0, u, t_end, {opts.step, opts.blowup_cap});
      BoundCheck bc;
      if (sup_variant) {
        IssBoundParams params{*report.barK, *report.barLambda};
        bc = check_iss_bound(
            traj, sys.seq, params, [&](double s) { return report.iss_gamma(s); }, u,
            Flavor::strong);
      } else {
        bc = check_iiss_bound(traj, sys.seq, report, u, report.eta, opts.step);
      }
      rec.pass = bc.pass;
      rec.worstMargin = bc.worstMargin;
      rec.violations = std::move(bc.violations);
    } catch (const EscapeError& e) {
      // A finite-escape trial falsifies the bound outright; the lhs is pinned
      // at the blow-up cap so the record stays finite.
      rec.pass = false;
      rec.escaped = true;
      rec.escape_time = e.time();
      rec.worstMargin = -opts.blowup_cap;
      rec.violations.push_back({e.time(), opts.blowup_cap, 0.0, -opts.blowup_cap});
    }
    if (rec.pass) ++passes;
    mc.trials.push_back(std::move(rec));
  }

  std::vector<std::size_t> order(mc.trials.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return mc.trials[a].seed < mc.trials[b].seed;
  });
  for (std::size_t idx : order) {
    const auto& rec = mc.trials[idx];
    mc.aggregate.worstMargin = std::min(mc.aggregate.worstMargin, rec.worstMargin);
    for (const auto& v : rec.violations) mc.aggregate.violations.push_back(v);
    if (!rec.pass) mc.aggregate.pass = false;
  }
  mc.pass_rate = trial_count == 0 ? 1.0 : static_cast<double>(passes) / trial_count;
  return mc;
}

}  // namespace impulsive
