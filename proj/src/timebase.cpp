// SPDX-License-Identifier: Apache-2.0
#include "impulsive/timebase.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace impulsive {

namespace {

// Relative slack for horizon comparisons so grid arithmetic that lands a hair
// past the horizon is not rejected.
double horizon_slack(double horizon) { return 1e-9 * (1.0 + std::abs(horizon)); }

}  // namespace

ImpulseSequence::ImpulseSequence(std::vector<double> times, double horizon)
    : times_(std::move(times)), horizon_(horizon) {
  if (!(horizon >= 0.0) || !std::isfinite(horizon))
    throw Error(ErrorKind::argument, "impulse sequence horizon must be finite and nonnegative");
  for (std::size_t k = 0; k < times_.size(); ++k) {
    if (!std::isfinite(times_[k]))
      throw Error(ErrorKind::argument, "impulse times must be finite");
    if (k == 0 && !(times_[k] > 0.0))
      throw Error(ErrorKind::argument, "impulse times must be positive");
    if (k > 0 && !(times_[k] > times_[k - 1]))
      throw Error(ErrorKind::argument, "impulse times must be strictly increasing");
  }
  if (!times_.empty() && times_.back() > horizon_)
    throw Error(ErrorKind::argument, "impulse times must not exceed the horizon");
}

ImpulseSequence ImpulseSequence::periodic(double period, double offset, double horizon) {
  if (!(period > 0.0)) throw Error(ErrorKind::argument, "period must be positive");
  if (!(offset >= 0.0)) throw Error(ErrorKind::argument, "offset must be nonnegative");
  std::vector<double> times;
  for (long k = 0;; ++k) {
    double t = offset + period * static_cast<double>(k);
    if (t > horizon) break;
    if (t > 0.0) times.push_back(t);
  }
  return ImpulseSequence(std::move(times), horizon);
}

int ImpulseSequence::count(double s, double t) const {
  if (!(0.0 <= s) || !(s <= t))
    throw Error(ErrorKind::argument, "impulse count requires 0 <= s <= t");
  if (t > horizon_ + horizon_slack(horizon_))
    throw Error(ErrorKind::horizon, "impulse count queried beyond the sequence horizon");
  auto up_t = std::upper_bound(times_.begin(), times_.end(), t);
  auto up_s = std::upper_bound(times_.begin(), times_.end(), s);
  return static_cast<int>(up_t - up_s);
}

std::size_t ImpulseSequence::first_after(double s) const {
  return static_cast<std::size_t>(std::upper_bound(times_.begin(), times_.end(), s) -
                                  times_.begin());
}

bool ImpulseSequence::contains(double t) const {
  return std::binary_search(times_.begin(), times_.end(), t);
}

ImpulseSequence ImpulseSequence::with_horizon(double horizon) const {
  return ImpulseSequence(times_, horizon);
}

DwellClass::DwellClass(int n0, double tau_d) : chatter_bound(n0), avg_dwell(tau_d) {
  if (n0 < 1) throw Error(ErrorKind::argument, "chatter bound must be at least 1");
  if (!(tau_d > 0.0)) throw Error(ErrorKind::argument, "average dwell time must be positive");
}

ScalarFunction ScalarFunction::constant(double v) {
  ScalarFunction f;
  f.kind_ = Kind::constant;
  f.const_ = v;
  return f;
}

ScalarFunction ScalarFunction::piecewise(std::vector<double> breakpoints,
                                         std::vector<double> values) {
  if (breakpoints.empty() || breakpoints.size() != values.size())
    throw Error(ErrorKind::argument, "piecewise function needs matching breakpoints and values");
  for (std::size_t k = 1; k < breakpoints.size(); ++k)
    if (!(breakpoints[k] > breakpoints[k - 1]))
      throw Error(ErrorKind::argument, "breakpoints must be strictly increasing");
  ScalarFunction f;
  f.kind_ = Kind::piecewise;
  f.breakpoints_ = std::move(breakpoints);
  f.values_ = std::move(values);
  return f;
}

ScalarFunction ScalarFunction::callable(std::function<double(double)> fn,
                                        std::vector<double> breakpoints_hint,
                                        std::function<double(double)> left_fn) {
  if (!fn) throw Error(ErrorKind::argument, "callable function must not be empty");
  ScalarFunction f;
  f.kind_ = Kind::callable;
  f.fn_ = std::move(fn);
  f.breakpoints_ = std::move(breakpoints_hint);
  f.left_fn_ = std::move(left_fn);
  return f;
}

double ScalarFunction::operator()(double t) const {
  switch (kind_) {
    case Kind::constant:
      return const_;
    case Kind::piecewise: {
      auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
      std::size_t idx = (it == breakpoints_.begin()) ? 0 : static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
      return values_[idx];
    }
    case Kind::callable:
      return fn_(t);
  }
  return const_;
}

double ScalarFunction::left(double t) const {
  if (kind_ == Kind::piecewise) {
    auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), t);
    if (it != breakpoints_.end() && *it == t && it != breakpoints_.begin())
      return values_[static_cast<std::size_t>(it - breakpoints_.begin()) - 1];
  }
  if (kind_ == Kind::callable && left_fn_) return left_fn_(t);
  return (*this)(t);
}

double ScalarFunction::constant_value() const {
  if (kind_ != Kind::constant)
    throw Error(ErrorKind::argument, "function is not the constant kind");
  return const_;
}

InputSignal InputSignal::zero(int dim) {
  if (dim < 1) throw Error(ErrorKind::argument, "input dimension must be positive");
  InputSignal u;
  u.kind_ = Kind::zero;
  u.dim_ = dim;
  return u;
}

InputSignal InputSignal::piecewise(std::vector<double> breakpoints, std::vector<Vec> values) {
  if (breakpoints.empty() || breakpoints.size() != values.size())
    throw Error(ErrorKind::argument, "piecewise signal needs matching breakpoints and values");
  for (std::size_t k = 1; k < breakpoints.size(); ++k)
    if (!(breakpoints[k] > breakpoints[k - 1]))
      throw Error(ErrorKind::argument, "breakpoints must be strictly increasing");
  const auto dim = values.front().size();
  if (dim < 1) throw Error(ErrorKind::argument, "input dimension must be positive");
  for (const auto& v : values)
    if (v.size() != dim)
      throw Error(ErrorKind::argument, "piecewise signal values must share one dimension");
  InputSignal u;
  u.kind_ = Kind::piecewise;
  u.dim_ = static_cast<int>(dim);
  u.breakpoints_ = std::move(breakpoints);
  u.values_ = std::move(values);
  return u;
}

InputSignal InputSignal::callable(int dim, std::function<Vec(double)> fn,
                                  std::vector<double> breakpoints_hint) {
  if (dim < 1) throw Error(ErrorKind::argument, "input dimension must be positive");
  if (!fn) throw Error(ErrorKind::argument, "callable signal must not be empty");
  InputSignal u;
  u.kind_ = Kind::callable;
  u.dim_ = dim;
  u.fn_ = std::move(fn);
  u.breakpoints_ = std::move(breakpoints_hint);
  return u;
}

Vec InputSignal::operator()(double t) const {
  switch (kind_) {
    case Kind::zero:
      return Vec::Zero(dim_);
    case Kind::piecewise: {
      auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
      std::size_t idx = (it == breakpoints_.begin()) ? 0 : static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
      return values_[idx];
    }
    case Kind::callable: {
      Vec v = fn_(t);
      if (v.size() != dim_)
        throw Error(ErrorKind::argument, "signal callable returned a wrong dimension");
      return v;
    }
  }
  return Vec::Zero(dim_);
}

Vec InputSignal::left(double t) const {
  if (kind_ == Kind::piecewise) {
    auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), t);
    if (it != breakpoints_.end() && *it == t && it != breakpoints_.begin())
      return values_[static_cast<std::size_t>(it - breakpoints_.begin()) - 1];
  }
  return (*this)(t);
}

KFunction KFunction::identity() {
  KFunction f;
  f.kind_ = Kind::identity;
  return f;
}

KFunction KFunction::power(double p) {
  if (!(p > 0.0)) throw Error(ErrorKind::argument, "power exponent must be positive");
  KFunction f;
  f.kind_ = Kind::power;
  f.param_ = p;
  return f;
}

KFunction KFunction::scaled(double a) {
  if (!(a > 0.0)) throw Error(ErrorKind::argument, "scale must be positive");
  KFunction f;
  f.kind_ = Kind::scaled;
  f.param_ = a;
  return f;
}

KFunction KFunction::saturating(double a) {
  if (!(a > 0.0)) throw Error(ErrorKind::argument, "saturation level must be positive");
  KFunction f;
  f.kind_ = Kind::saturating;
  f.param_ = a;
  return f;
}

KFunction KFunction::tabulated(std::vector<double> r, std::vector<double> v) {
  if (r.size() < 2 || r.size() != v.size())
    throw Error(ErrorKind::argument, "tabulated function needs at least two matching nodes");
  if (r.front() != 0.0 || v.front() != 0.0)
    throw Error(ErrorKind::argument, "tabulated function must start at (0, 0)");
  for (std::size_t k = 1; k < r.size(); ++k)
    if (!(r[k] > r[k - 1]) || !(v[k] > v[k - 1]))
      throw Error(ErrorKind::argument, "tabulated nodes must be strictly increasing");
  KFunction f;
  f.kind_ = Kind::tabulated;
  f.rs_ = std::move(r);
  f.vs_ = std::move(v);
  return f;
}

double KFunction::operator()(double r) const {
  if (!(r >= 0.0)) throw Error(ErrorKind::argument, "comparison functions take r >= 0");
  switch (kind_) {
    case Kind::identity:
      return r;
    case Kind::power:
      return std::pow(r, param_);
    case Kind::scaled:
      return param_ * r;
    case Kind::saturating:
      return param_ * r / (1.0 + r);
    case Kind::tabulated: {
      auto it = std::upper_bound(rs_.begin(), rs_.end(), r);
      std::size_t hi = std::min<std::size_t>(static_cast<std::size_t>(it - rs_.begin()), rs_.size() - 1);
      if (hi == 0) hi = 1;
      std::size_t lo = hi - 1;
      double slope = (vs_[hi] - vs_[lo]) / (rs_[hi] - rs_[lo]);
      return vs_[lo] + slope * (r - rs_[lo]);
    }
  }
  return r;
}

double KFunction::inverse(double y) const {
  if (!(y >= 0.0)) throw Error(ErrorKind::argument, "inverse takes y >= 0");
  if (y >= sup()) return std::numeric_limits<double>::infinity();
  switch (kind_) {
    case Kind::identity:
      return y;
    case Kind::power:
      return std::pow(y, 1.0 / param_);
    case Kind::scaled:
      return y / param_;
    case Kind::saturating:
      return y / (param_ - y);
    case Kind::tabulated: {
      // Piecewise-linear, so the inverse is exact segment arithmetic.
      auto it = std::upper_bound(vs_.begin(), vs_.end(), y);
      std::size_t hi = std::min<std::size_t>(static_cast<std::size_t>(it - vs_.begin()), vs_.size() - 1);
      if (hi == 0) hi = 1;
      std::size_t lo = hi - 1;
      double slope = (vs_[hi] - vs_[lo]) / (rs_[hi] - rs_[lo]);
      return rs_[lo] + (y - vs_[lo]) / slope;
    }
  }
  return y;
}

double KFunction::sup() const {
  if (kind_ == Kind::saturating) return param_;
  return std::numeric_limits<double>::infinity();
}

ImpulseSequence harmonic_sequence(int k_max, std::optional<double> horizon) {
  if (k_max < 1) throw Error(ErrorKind::argument, "harmonic sequence needs k_max >= 1");
  std::vector<double> times(static_cast<std::size_t>(k_max));
  times[0] = 1.0;
  for (int k = 1; k < k_max; ++k)
    times[static_cast<std::size_t>(k)] = times[static_cast<std::size_t>(k) - 1] + 1.0 / k;
  double h = horizon.value_or(times.back());
  return ImpulseSequence(std::move(times), h);
}

int count_impulses(const ImpulseSequence& seq, double s, double t) { return seq.count(s, t); }

DwellCheck check_dwell_class(const ImpulseSequence& seq, const DwellClass& cls) {
  DwellCheck out;
  const auto& tau = seq.times();
  const double n0 = static_cast<double>(cls.chatter_bound);
  for (std::size_t i = 0; i < tau.size(); ++i) {
    for (std::size_t j = i; j < tau.size(); ++j) {
      double count = static_cast<double>(j - i + 1);
      double admissible = n0 + (tau[j] - tau[i]) / cls.avg_dwell;
      if (count > admissible) {
        out.ok = false;
        out.i = i;
        out.j = j;
        out.from = tau[i];
        out.to = tau[j];
        out.count = static_cast<int>(count);
        out.admissible = admissible;
        return out;
      }
    }
  }
  // Leading windows (0, tau_j]; implied by the pair windows but kept explicit
  // because the class definition states them separately.
  for (std::size_t j = 0; j < tau.size(); ++j) {
    double count = static_cast<double>(j + 1);
    double admissible = n0 + tau[j] / cls.avg_dwell;
    if (count > admissible) {
      out.ok = false;
      out.i = 0;
      out.j = j;
      out.from = 0.0;
      out.to = tau[j];
      out.count = static_cast<int>(count);
      out.admissible = admissible;
      return out;
    }
  }
  return out;
}

namespace detail {

std::vector<double> interior_anchors(double a, double b,
                                     const std::vector<const std::vector<double>*>& sources) {
  std::vector<double> pts;
  for (const auto* src : sources)
    for (double v : *src)
      if (v > a && v < b) pts.push_back(v);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

double trapezoid_split(const std::function<double(double)>& right_value,
                       const std::function<double(double)>& left_value, double a, double b,
                       double step, const std::vector<double>& splits) {
  if (!(b >= a)) throw Error(ErrorKind::argument, "integration needs b >= a");
  if (a == b) return 0.0;
  if (!(step > 0.0)) throw Error(ErrorKind::argument, "integration step must be positive");
  std::vector<double> anchors;
  anchors.push_back(a);
  for (double v : interior_anchors(a, b, {&splits})) anchors.push_back(v);
  anchors.push_back(b);

  double total = 0.0;
  for (std::size_t seg = 0; seg + 1 < anchors.size(); ++seg) {
    const double p = anchors[seg], q = anchors[seg + 1];
    double prev_t = p;
    double prev_v = right_value(p);
    const double guard = 1e-12 * step;
    for (long k = 1;; ++k) {
      double z = p + step * static_cast<double>(k);
      if (z >= q - guard) break;
      double v = right_value(z);
      total += 0.5 * (z - prev_t) * (prev_v + v);
      prev_t = z;
      prev_v = v;
    }
    double v_end = left_value(q);
    total += 0.5 * (q - prev_t) * (prev_v + v_end);
  }
  return total;
}

}  // namespace detail

double sup_norm(const InputSignal& u, double t_end, double grid_step) {
  if (!(grid_step > 0.0)) throw Error(ErrorKind::argument, "grid step must be positive");
  if (!(t_end >= 0.0)) throw Error(ErrorKind::argument, "t_end must be nonnegative");
  if (u.is_zero()) return 0.0;
  std::vector<double> anchors;
  anchors.push_back(0.0);
  for (double v : detail::interior_anchors(0.0, t_end, {&u.breakpoints()})) anchors.push_back(v);
  if (t_end > 0.0) anchors.push_back(t_end);

  double best = 0.0;
  auto visit = [&](double t) {
    best = std::max(best, u(t).norm());
    best = std::max(best, u.left(t).norm());
  };
  for (std::size_t seg = 0; seg + 1 < anchors.size(); ++seg) {
    const double p = anchors[seg], q = anchors[seg + 1];
    visit(p);
    const double guard = 1e-12 * grid_step;
    for (long k = 1;; ++k) {
      double z = p + grid_step * static_cast<double>(k);
      if (z >= q - guard) break;
      visit(z);
    }
  }
  visit(anchors.back());
  return best;
}

double sigma_rho_norm(const InputSignal& u, const ImpulseSequence& seq, const KFunction& eta,
                      double t_end, double grid_step) {
  if (!(t_end >= 0.0)) throw Error(ErrorKind::argument, "t_end must be nonnegative");
  if (t_end > seq.horizon() + 1e-9 * (1.0 + std::abs(seq.horizon())))
    throw Error(ErrorKind::horizon, "norm queried beyond the sequence horizon");
  std::vector<double> splits = u.breakpoints();
  splits.insert(splits.end(), seq.times().begin(), seq.times().end());
  double integral = detail::trapezoid_split([&](double t) { return eta(u(t).norm()); },
                                            [&](double t) { return eta(u.left(t).norm()); }, 0.0,
                                            t_end, grid_step, splits);
  double jump_sum = 0.0;
  for (double tau : seq.times()) {
    if (tau > t_end) break;
    jump_sum += eta(u(tau).norm());
  }
  return integral + jump_sum;
}

}  // namespace impulsive
