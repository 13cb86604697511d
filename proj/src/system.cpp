// SPDX-License-Identifier: Apache-2.0
#include "impulsive/system.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace impulsive {

PerturbationBound::PerturbationBound(double nbar, ScalarFunction th, double m, double cc,
                                     KFunction e)
    : Nbar(nbar), theta(std::move(th)), M(m), c(cc), eta(std::move(e)) {
  if (!(Nbar >= 0.0) || !(M >= 0.0) || !(c >= 0.0))
    throw Error(ErrorKind::argument, "perturbation bound constants must be nonnegative");
}

ImpulsiveSystem& ImpulsiveSystem::finalize() {
  if (n < 1 || m < 1)
    throw Error(ErrorKind::config, "system dimensions must be positive");
  if (!f && !A)
    throw Error(ErrorKind::config, "flow needs either f or a linear part A (plus phi)");
  if (!g && !R)
    throw Error(ErrorKind::config, "jump needs either g or a linear part R (plus psi)");
  if (A && A->dim() != n) throw Error(ErrorKind::config, "A dimension mismatch");
  if (R && R->dim() != n) throw Error(ErrorKind::config, "R dimension mismatch");
  if (R && R->is_table() && R->table_size() != seq.size())
    throw Error(ErrorKind::config, "per-impulse jump table must cover every impulse time");
  if (phi && !A) throw Error(ErrorKind::config, "phi given without A");
  if (psi && !R) throw Error(ErrorKind::config, "psi given without R");
  finalized_ = true;
  return *this;
}

Vec ImpulsiveSystem::flow(double t, const Vec& x, const Vec& u) const {
  if (f) return f(t, x, u);
  Vec out = (*A)(t) * x;
  if (phi) out += phi(t, x, u);
  return out;
}

Vec ImpulsiveSystem::flow_left(double t, const Vec& x, const Vec& u) const {
  if (f_left) return f_left(t, x, u);
  if (f) return f(t, x, u);
  Vec out = A->left(t) * x;
  if (phi) out += phi(t, x, u);
  return out;
}

Vec ImpulsiveSystem::jump(std::size_t k, double tau, const Vec& x, const Vec& u) const {
  if (g) return g(tau, x, u);
  Vec out = R->at(k, tau) * x;
  if (psi) out += psi(tau, x, u);
  return out;
}

Vec ImpulsiveSystem::phi_at(double t, const Vec& x, const Vec& u) const {
  if (phi) return phi(t, x, u);
  if (!A) throw Error(ErrorKind::config, "flow perturbation needs a linear part A");
  return flow(t, x, u) - (*A)(t) * x;
}

Vec ImpulsiveSystem::psi_at(std::size_t k, double tau, const Vec& x, const Vec& u) const {
  if (psi) return psi(tau, x, u);
  if (!R) throw Error(ErrorKind::config, "jump perturbation needs a linear part R");
  return jump(k, tau, x, u) - R->at(k, tau) * x;
}

LinearImpulsiveSystem ImpulsiveSystem::linear_part() const {
  if (!has_linear_part())
    throw Error(ErrorKind::config, "system has no stored linear part");
  return LinearImpulsiveSystem(*A, *R, seq);
}

namespace {

double horizon_slack(double horizon) { return 1e-9 * (1.0 + std::abs(horizon)); }

Vec rk4_state_step(const ImpulsiveSystem& sys, double t, const Vec& x, const Vec& u_frozen,
                   double h) {
  // The step always ends on a grid node, so the final stage takes the left
  // limit: correct inside the closing piece of a time-discontinuous flow.
  Vec k1 = sys.flow(t, x, u_frozen);
  Vec k2 = sys.flow(t + 0.5 * h, x + (0.5 * h) * k1, u_frozen);
  Vec k3 = sys.flow(t + 0.5 * h, x + (0.5 * h) * k2, u_frozen);
  Vec k4 = sys.flow_left(t + h, x + h * k3, u_frozen);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

Trajectory simulate(const ImpulsiveSystem& sys, double t0, const Vec& x0, const InputSignal& u,
                    double t_end, const SimulateOptions& opts) {
  if (!(opts.step > 0.0)) throw Error(ErrorKind::argument, "simulation step must be positive");
  if (!(t0 <= t_end)) throw Error(ErrorKind::argument, "simulation needs t0 <= t_end");
  if (!(t0 >= 0.0)) throw Error(ErrorKind::argument, "simulation needs t0 >= 0");
  if (t_end > sys.seq.horizon() + horizon_slack(sys.seq.horizon()))
    throw Error(ErrorKind::horizon, "simulation extends beyond the sequence horizon");
  if (x0.size() != sys.n) throw Error(ErrorKind::argument, "initial state dimension mismatch");
  if (u.dim() != sys.m) throw Error(ErrorKind::argument, "input dimension mismatch");
  if (!(opts.blowup_cap > 0.0)) throw Error(ErrorKind::argument, "blow-up cap must be positive");

  Trajectory traj;
  traj.t0 = t0;
  traj.t_end = t_end;
  traj.samples.push_back({t0, x0, TrajectorySample::Phase::flow});
  if (t0 == t_end) return traj;

  std::vector<double> anchors = u.breakpoints();
  if (sys.A) {
    const auto& bp = sys.A->breakpoints();
    anchors.insert(anchors.end(), bp.begin(), bp.end());
  }
  anchors.insert(anchors.end(), sys.seq.times().begin(), sys.seq.times().end());
  auto nodes = detail::subdivided_nodes(t0, t_end, opts.step, anchors);

  auto guard = [&](const Vec& x, double t) {
    if (!(x.norm() <= opts.blowup_cap))
      throw EscapeError("trajectory magnitude exceeded the blow-up cap at t = " + std::to_string(t),
                        t);
  };
  guard(x0, t0);

  Vec x = x0;
  std::size_t k = sys.seq.first_after(t0);
  const auto& times = sys.seq.times();
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    const double p = nodes[i], q = nodes[i + 1];
    x = rk4_state_step(sys, p, x, u(p), q - p);
    guard(x, q);
    if (k < times.size() && times[k] == q) {
      traj.samples.push_back({q, x, TrajectorySample::Phase::pre_jump});
      x = sys.jump(k, q, x, u(q));
      guard(x, q);
      traj.samples.push_back({q, x, TrajectorySample::Phase::post_jump});
      traj.jumps.emplace_back(k, q);
      ++k;
    } else {
      traj.samples.push_back({q, x, TrajectorySample::Phase::flow});
    }
  }
  return traj;
}

DecompositionReport validate_decomposition(const ImpulsiveSystem& sys, int sample_count,
                                           double state_radius, double input_radius,
                                           unsigned seed) {
  if (!(state_radius > 0.0) || !(input_radius > 0.0))
    throw Error(ErrorKind::argument, "sampling radii must be positive");
  if (sample_count < 1) throw Error(ErrorKind::argument, "sample count must be positive");
  if (!sys.bound) throw Error(ErrorKind::config, "system carries no perturbation bound");
  if (!sys.A || !sys.R)
    throw Error(ErrorKind::config, "decomposition check needs the linear part (A, R)");

  const PerturbationBound& b = *sys.bound;
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> t_pick(0.0, sys.seq.horizon());
  std::uniform_real_distribution<double> radius(0.0, 1.0);

  auto ball = [&](int dim, double r) {
    // Direction uniform on the sphere, radius scaled toward the boundary.
    Vec v(dim);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < dim; ++i) v(i) = gauss(rng);
    double nv = v.norm();
    if (nv == 0.0) return Vec(Vec::Zero(dim));
    return Vec(v * (r * std::pow(radius(rng), 1.0 / dim) / nv));
  };

  DecompositionReport rep;
  rep.seed = seed;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  const auto& times = sys.seq.times();

  auto record = [&](double t, const Vec& xi, const Vec& mu, bool jump_side, double lhs) {
    double rhs = b.n_at(t) * xi.norm() + (b.M * xi.norm() + b.c) * b.eta(mu.norm());
    double margin = rhs - lhs;
    if (margin < rep.worst_margin) {
      rep.worst_margin = margin;
      rep.t = t;
      rep.xi = xi;
      rep.mu = mu;
      rep.jump_side = jump_side;
    }
    if (margin < -1e-12 * (1.0 + std::abs(rhs))) rep.pass = false;
  };

  for (int s = 0; s < sample_count; ++s) {
    Vec xi = ball(sys.n, state_radius);
    Vec mu = ball(sys.m, input_radius);
    double t = t_pick(rng);
    record(t, xi, mu, false, sys.phi_at(t, xi, mu).norm());
    if (sys.f) {
      Vec resid = sys.f(t, xi, mu) - ((*sys.A)(t) * xi + sys.phi_at(t, xi, mu));
      rep.consistency_residual = std::max(rep.consistency_residual, resid.norm());
    }
    if (!times.empty()) {
      std::size_t k = s % times.size();
      record(times[k], xi, mu, true, sys.psi_at(k, times[k], xi, mu).norm());
      if (sys.g) {
        Vec resid = sys.g(times[k], xi, mu) -
                    (sys.R->at(k, times[k]) * xi + sys.psi_at(k, times[k], xi, mu));
        rep.consistency_residual = std::max(rep.consistency_residual, resid.norm());
      }
    }
    rep.samples += times.empty() ? 1 : 2;
  }
  // Every impulse time gets at least one dedicated sample.
  for (std::size_t k = 0; k < times.size(); ++k) {
    Vec xi = ball(sys.n, state_radius);
    Vec mu = ball(sys.m, input_radius);
    record(times[k], xi, mu, true, sys.psi_at(k, times[k], xi, mu).norm());
    rep.samples += 1;
  }
  if (rep.consistency_residual >= 1e-10) rep.pass = false;
  return rep;
}

double theta_budget(const ImpulsiveSystem& sys, double grid_step) {
  if (!sys.bound) throw Error(ErrorKind::config, "system carries no perturbation bound");
  const ScalarFunction& theta = sys.bound->theta;
  std::vector<double> splits = theta.breakpoints();
  splits.insert(splits.end(), sys.seq.times().begin(), sys.seq.times().end());
  double integral =
      detail::trapezoid_split([&](double t) { return theta(t); },
                              [&](double t) { return theta.left(t); }, 0.0, sys.seq.horizon(),
                              grid_step, splits);
  double jump_sum = 0.0;
  for (double tau : sys.seq.times()) jump_sum += theta(tau);
  return integral + jump_sum;
}

}  // namespace impulsive
