// SPDX-License-Identifier: Apache-2.0
#include "impulsive/linear.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <utility>

namespace impulsive {

namespace {

double horizon_slack(double horizon) { return 1e-9 * (1.0 + std::abs(horizon)); }

void require_square(const Mat& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() < 1)
    throw Error(ErrorKind::argument, std::string(what) + " must be square and nonempty");
}

}  // namespace

double spectral_norm(const Mat& b, int max_iters, double tol) {
  if (b.size() == 0) return 0.0;
  const double scale = b.cwiseAbs().maxCoeff();
  if (scale == 0.0 || !std::isfinite(scale)) return scale == 0.0 ? 0.0 : scale;
  const Mat s = b.transpose() * b;
  const Eigen::Index n = s.rows();
  // Deterministic, symmetry-breaking start direction.
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = 1.0 + 0.01 * static_cast<double>(i + 1);
  v.normalize();
  double sigma = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    Vec w = s * v;
    double nw = w.norm();
    if (nw == 0.0) return 0.0;
    v = w / nw;
    double next = std::sqrt(v.dot(s * v));
    if (std::abs(next - sigma) <= tol * std::max(1.0, next)) return next;
    sigma = next;
  }
  return sigma;
}

double max_abs(const Mat& b) { return b.size() == 0 ? 0.0 : b.cwiseAbs().maxCoeff(); }

MatrixFunction MatrixFunction::constant(Mat a) {
  require_square(a, "flow matrix");
  MatrixFunction f;
  f.kind_ = Kind::constant;
  f.dim_ = static_cast<int>(a.rows());
  f.values_.push_back(std::move(a));
  return f;
}

MatrixFunction MatrixFunction::piecewise(std::vector<double> breakpoints, std::vector<Mat> values) {
  if (breakpoints.empty() || breakpoints.size() != values.size())
    throw Error(ErrorKind::argument, "piecewise matrix needs matching breakpoints and values");
  for (std::size_t k = 1; k < breakpoints.size(); ++k)
    if (!(breakpoints[k] > breakpoints[k - 1]))
      throw Error(ErrorKind::argument, "breakpoints must be strictly increasing");
  for (const auto& m : values) {
    require_square(m, "flow matrix");
    if (m.rows() != values.front().rows())
      throw Error(ErrorKind::argument, "piecewise matrices must share one dimension");
  }
  MatrixFunction f;
  f.kind_ = Kind::piecewise;
  f.dim_ = static_cast<int>(values.front().rows());
  f.breakpoints_ = std::move(breakpoints);
  f.values_ = std::move(values);
  return f;
}

MatrixFunction MatrixFunction::callable(int dim, std::function<Mat(double)> fn,
                                        std::vector<double> breakpoints_hint,
                                        std::function<Mat(double)> left_fn) {
  if (dim < 1) throw Error(ErrorKind::argument, "matrix dimension must be positive");
  if (!fn) throw Error(ErrorKind::argument, "matrix callable must not be empty");
  MatrixFunction f;
  f.kind_ = Kind::callable;
  f.dim_ = dim;
  f.fn_ = std::move(fn);
  f.breakpoints_ = std::move(breakpoints_hint);
  f.left_fn_ = std::move(left_fn);
  return f;
}

Mat MatrixFunction::operator()(double t) const {
  switch (kind_) {
    case Kind::constant:
      return values_.front();
    case Kind::piecewise: {
      auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
      std::size_t idx =
          (it == breakpoints_.begin()) ? 0 : static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
      return values_[idx];
    }
    case Kind::callable: {
      Mat m = fn_(t);
      if (m.rows() != dim_ || m.cols() != dim_)
        throw Error(ErrorKind::argument, "matrix callable returned a wrong dimension");
      return m;
    }
  }
  return values_.front();
}

Mat MatrixFunction::left(double t) const {
  if (kind_ == Kind::piecewise) {
    auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), t);
    if (it != breakpoints_.end() && *it == t && it != breakpoints_.begin())
      return values_[static_cast<std::size_t>(it - breakpoints_.begin()) - 1];
  }
  if (kind_ == Kind::callable && left_fn_) {
    Mat m = left_fn_(t);
    if (m.rows() != dim_ || m.cols() != dim_)
      throw Error(ErrorKind::argument, "matrix callable returned a wrong dimension");
    return m;
  }
  return (*this)(t);
}

VectorFunction VectorFunction::zero(int dim) {
  if (dim < 1) throw Error(ErrorKind::argument, "vector dimension must be positive");
  VectorFunction f;
  f.kind_ = Kind::zero;
  f.dim_ = dim;
  return f;
}

VectorFunction VectorFunction::constant(Vec v) {
  if (v.size() < 1) throw Error(ErrorKind::argument, "vector must be nonempty");
  VectorFunction f;
  f.kind_ = Kind::constant;
  f.dim_ = static_cast<int>(v.size());
  f.const_ = std::move(v);
  return f;
}

VectorFunction VectorFunction::piecewise(std::vector<double> breakpoints, std::vector<Vec> values) {
  if (breakpoints.empty() || breakpoints.size() != values.size())
    throw Error(ErrorKind::argument, "piecewise vector needs matching breakpoints and values");
  for (std::size_t k = 1; k < breakpoints.size(); ++k)
    if (!(breakpoints[k] > breakpoints[k - 1]))
      throw Error(ErrorKind::argument, "breakpoints must be strictly increasing");
  for (const auto& v : values)
    if (v.size() != values.front().size() || v.size() < 1)
      throw Error(ErrorKind::argument, "piecewise vectors must share one dimension");
  VectorFunction f;
  f.kind_ = Kind::piecewise;
  f.dim_ = static_cast<int>(values.front().size());
  f.breakpoints_ = std::move(breakpoints);
  f.values_ = std::move(values);
  return f;
}

VectorFunction VectorFunction::callable(int dim, std::function<Vec(double)> fn,
                                        std::vector<double> breakpoints_hint) {
  if (dim < 1) throw Error(ErrorKind::argument, "vector dimension must be positive");
  if (!fn) throw Error(ErrorKind::argument, "vector callable must not be empty");
  VectorFunction f;
  f.kind_ = Kind::callable;
  f.dim_ = dim;
  f.fn_ = std::move(fn);
  f.breakpoints_ = std::move(breakpoints_hint);
  return f;
}

Vec VectorFunction::operator()(double t) const {
  switch (kind_) {
    case Kind::zero:
      return Vec::Zero(dim_);
    case Kind::constant:
      return const_;
    case Kind::piecewise: {
      auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
      std::size_t idx =
          (it == breakpoints_.begin()) ? 0 : static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
      return values_[idx];
    }
    case Kind::callable: {
      Vec v = fn_(t);
      if (v.size() != dim_)
        throw Error(ErrorKind::argument, "vector callable returned a wrong dimension");
      return v;
    }
  }
  return Vec::Zero(dim_);
}

Vec VectorFunction::left(double t) const {
  if (kind_ == Kind::piecewise) {
    auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), t);
    if (it != breakpoints_.end() && *it == t && it != breakpoints_.begin())
      return values_[static_cast<std::size_t>(it - breakpoints_.begin()) - 1];
  }
  return (*this)(t);
}

JumpMatrixMap JumpMatrixMap::constant(Mat r) {
  require_square(r, "jump matrix");
  JumpMatrixMap m;
  m.kind_ = Kind::constant;
  m.dim_ = static_cast<int>(r.rows());
  m.const_ = std::move(r);
  return m;
}

JumpMatrixMap JumpMatrixMap::per_impulse(std::vector<Mat> r) {
  if (r.empty()) throw Error(ErrorKind::argument, "per-impulse jump table must not be empty");
  for (const auto& m : r) {
    require_square(m, "jump matrix");
    if (m.rows() != r.front().rows())
      throw Error(ErrorKind::argument, "jump matrices must share one dimension");
  }
  JumpMatrixMap m;
  m.kind_ = Kind::per_impulse;
  m.dim_ = static_cast<int>(r.front().rows());
  m.values_ = std::move(r);
  return m;
}

JumpMatrixMap JumpMatrixMap::callable(int dim, std::function<Mat(double)> fn) {
  if (dim < 1) throw Error(ErrorKind::argument, "jump dimension must be positive");
  if (!fn) throw Error(ErrorKind::argument, "jump callable must not be empty");
  JumpMatrixMap m;
  m.kind_ = Kind::callable;
  m.dim_ = dim;
  m.fn_ = std::move(fn);
  return m;
}

Mat JumpMatrixMap::at(std::size_t k, double tau) const {
  switch (kind_) {
    case Kind::constant:
      return const_;
    case Kind::per_impulse:
      if (k >= values_.size())
        throw Error(ErrorKind::argument, "jump index beyond the per-impulse table");
      return values_[k];
    case Kind::callable: {
      Mat m = fn_(tau);
      if (m.rows() != dim_ || m.cols() != dim_)
        throw Error(ErrorKind::argument, "jump callable returned a wrong dimension");
      return m;
    }
  }
  return const_;
}

JumpVectorMap JumpVectorMap::zero(int dim) {
  if (dim < 1) throw Error(ErrorKind::argument, "jump dimension must be positive");
  JumpVectorMap m;
  m.kind_ = Kind::zero;
  m.dim_ = dim;
  return m;
}

JumpVectorMap JumpVectorMap::constant(Vec w) {
  if (w.size() < 1) throw Error(ErrorKind::argument, "jump vector must be nonempty");
  JumpVectorMap m;
  m.kind_ = Kind::constant;
  m.dim_ = static_cast<int>(w.size());
  m.const_ = std::move(w);
  return m;
}

JumpVectorMap JumpVectorMap::per_impulse(std::vector<Vec> w) {
  if (w.empty()) throw Error(ErrorKind::argument, "per-impulse jump table must not be empty");
  for (const auto& v : w)
    if (v.size() != w.front().size() || v.size() < 1)
      throw Error(ErrorKind::argument, "jump vectors must share one dimension");
  JumpVectorMap m;
  m.kind_ = Kind::per_impulse;
  m.dim_ = static_cast<int>(w.front().size());
  m.values_ = std::move(w);
  return m;
}

JumpVectorMap JumpVectorMap::callable(int dim, std::function<Vec(double)> fn) {
  if (dim < 1) throw Error(ErrorKind::argument, "jump dimension must be positive");
  if (!fn) throw Error(ErrorKind::argument, "jump callable must not be empty");
  JumpVectorMap m;
  m.kind_ = Kind::callable;
  m.dim_ = dim;
  m.fn_ = std::move(fn);
  return m;
}

Vec JumpVectorMap::at(std::size_t k, double tau) const {
  switch (kind_) {
    case Kind::zero:
      return Vec::Zero(dim_);
    case Kind::constant:
      return const_;
    case Kind::per_impulse:
      if (k >= values_.size())
        throw Error(ErrorKind::argument, "jump index beyond the per-impulse table");
      return values_[k];
    case Kind::callable: {
      Vec v = fn_(tau);
      if (v.size() != dim_)
        throw Error(ErrorKind::argument, "jump callable returned a wrong dimension");
      return v;
    }
  }
  return const_;
}

LinearImpulsiveSystem::LinearImpulsiveSystem(MatrixFunction a, JumpMatrixMap r, ImpulseSequence s)
    : dim(a.dim()), A(std::move(a)), R(std::move(r)), seq(std::move(s)) {
  if (dim < 1) throw Error(ErrorKind::argument, "system dimension must be positive");
  if (R.dim() != dim)
    throw Error(ErrorKind::argument, "flow and jump dimensions must agree");
  if (R.is_table() && R.table_size() != seq.size())
    throw Error(ErrorKind::argument, "per-impulse jump table must cover every impulse time");
}

Certificate::Certificate(double k, double lam, Flavor fl) : K(k), lambda(lam), flavor(fl) {
  if (!(K >= 1.0)) throw Error(ErrorKind::argument, "certificate overshoot K must be >= 1");
  if (!(lambda > 0.0)) throw Error(ErrorKind::argument, "certificate rate lambda must be positive");
}

namespace detail {

std::vector<double> subdivided_nodes(double a, double b, double step,
                                     const std::vector<double>& anchors) {
  std::vector<double> cut;
  for (double v : anchors)
    if (v > a && v < b) cut.push_back(v);
  std::sort(cut.begin(), cut.end());
  cut.erase(std::unique(cut.begin(), cut.end()), cut.end());
  cut.push_back(b);

  std::vector<double> nodes;
  nodes.push_back(a);
  double p = a;
  const double guard = 1e-12 * step;
  for (double q : cut) {
    for (long k = 1;; ++k) {
      double z = p + step * static_cast<double>(k);
      if (z >= q - guard) break;
      nodes.push_back(z);
    }
    nodes.push_back(q);
    p = q;
  }
  return nodes;
}

Mat rk4_matrix_step(const MatrixFunction& a, const Mat& x, double t, double h) {
  // The step always ends on a grid node, so the final stage takes the left
  // limit: correct inside the closing piece of a piecewise coefficient.
  const Mat a0 = a(t);
  const Mat am = a(t + 0.5 * h);
  const Mat a1 = a.left(t + h);
  Mat k1 = a0 * x;
  Mat k2 = am * (x + (0.5 * h) * k1);
  Mat k3 = am * (x + (0.5 * h) * k2);
  Mat k4 = a1 * (x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace detail

namespace {

void check_window(const LinearImpulsiveSystem& sys, double s, double t, double step) {
  if (!(step > 0.0)) throw Error(ErrorKind::argument, "integration step must be positive");
  if (!(0.0 <= s) || !(s <= t))
    throw Error(ErrorKind::argument, "transition window requires 0 <= s <= t");
  if (t > sys.seq.horizon() + horizon_slack(sys.seq.horizon()))
    throw Error(ErrorKind::horizon, "transition window extends beyond the sequence horizon");
}

std::vector<double> window_anchors(const LinearImpulsiveSystem& sys, double s, double t,
                                   const std::vector<double>* extra = nullptr) {
  std::vector<double> anchors = sys.A.breakpoints();
  anchors.insert(anchors.end(), sys.seq.times().begin(), sys.seq.times().end());
  if (extra) anchors.insert(anchors.end(), extra->begin(), extra->end());
  (void)s;
  (void)t;
  return anchors;
}

}  // namespace

Mat transition_matrix(const LinearImpulsiveSystem& sys, double s, double t, double step) {
  check_window(sys, s, t, step);
  Mat x = Mat::Identity(sys.dim, sys.dim);
  if (s == t) return x;
  auto anchors = window_anchors(sys, s, t);
  auto nodes = detail::subdivided_nodes(s, t, step, anchors);
  std::size_t k = sys.seq.first_after(s);
  const auto& times = sys.seq.times();
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    const double p = nodes[i], q = nodes[i + 1];
    x = detail::rk4_matrix_step(sys.A, x, p, q - p);
    if (k < times.size() && times[k] == q) {
      x = sys.R.at(k, q) * x;
      ++k;
    }
  }
  return x;
}

Vec variation_of_constants(const LinearImpulsiveSystem& sys, const AffineDriving& drive, double t0,
                           const Vec& x0, double t, double step) {
  check_window(sys, t0, t, step);
  if (x0.size() != sys.dim)
    throw Error(ErrorKind::argument, "initial state dimension mismatch");
  const bool has_v = drive.v.dim() > 0;
  const bool has_w = drive.w.dim() > 0;
  if (has_v && drive.v.dim() != sys.dim)
    throw Error(ErrorKind::argument, "flow forcing dimension mismatch");
  if (has_w && drive.w.dim() != sys.dim)
    throw Error(ErrorKind::argument, "jump forcing dimension mismatch");
  if (has_w && drive.w.is_table() && drive.w.table_size() != sys.seq.size())
    throw Error(ErrorKind::argument, "per-impulse forcing table must cover every impulse time");
  if (t0 == t) return x0;

  std::vector<double> extra = has_v ? drive.v.breakpoints() : std::vector<double>{};
  auto nodes = detail::subdivided_nodes(t0, t, step, window_anchors(sys, t0, t, &extra));

  // Impulse indices aligned with nodes; impulses in (t0, t] are exact nodes.
  const auto& times = sys.seq.times();
  std::vector<std::ptrdiff_t> impulse_at(nodes.size(), -1);
  {
    std::size_t k = sys.seq.first_after(t0);
    std::size_t j = 0;
    while (k < times.size() && times[k] <= t) {
      while (j < nodes.size() && nodes[j] != times[k]) ++j;
      if (j == nodes.size())
        throw Error(ErrorKind::internal, "impulse time missing from the integration grid");
      impulse_at[j] = static_cast<std::ptrdiff_t>(k);
      ++k;
    }
  }

  Vec acc = Vec::Zero(sys.dim);
  Mat p_mat = Mat::Identity(sys.dim, sys.dim);  // Phi(t, nodes[j+1])
  for (std::size_t j = nodes.size() - 1; j-- > 0;) {
    const double p = nodes[j], q = nodes[j + 1];
    Mat w_mat = p_mat;  // lim_{s -> q from below} Phi(t, s)
    if (impulse_at[j + 1] >= 0) {
      const auto k = static_cast<std::size_t>(impulse_at[j + 1]);
      if (has_w) acc += p_mat * drive.w.at(k, q);
      w_mat = p_mat * sys.R.at(k, q);
    }
    Mat flow = detail::rk4_matrix_step(sys.A, Mat::Identity(sys.dim, sys.dim), p, q - p);
    Mat p_next = w_mat * flow;  // Phi(t, p)
    if (has_v) {
      Vec right = w_mat * drive.v.left(q);
      Vec left = p_next * drive.v(p);
      acc += (0.5 * (q - p)) * (left + right);
    }
    p_mat = p_next;
  }
  return p_mat * x0 + acc;
}

double semigroup_check(const LinearImpulsiveSystem& sys, double s, double r, double t,
                       double step) {
  if (!(s <= r) || !(r <= t))
    throw Error(ErrorKind::argument, "semigroup check requires s <= r <= t");
  Mat whole = transition_matrix(sys, s, t, step);
  Mat second = transition_matrix(sys, r, t, step);
  Mat first = transition_matrix(sys, s, r, step);
  return max_abs(whole - second * first);
}

Certificate detail::sweep_envelope(const std::vector<std::pair<double, double>>& samples,
                                   Flavor flavor, const EnvelopeOptions& opts,
                                   std::vector<std::pair<double, double>>* lambda_table) {
  if (samples.empty()) throw Error(ErrorKind::argument, "envelope fit needs at least one pair");
  if (!(opts.k_cap >= 1.0)) throw Error(ErrorKind::argument, "envelope cap must be >= 1");
  if (!(opts.lambda_lo > 0.0) || !(opts.lambda_hi > opts.lambda_lo) || opts.lambda_points < 2)
    throw Error(ErrorKind::argument, "invalid lambda grid");

  const double ratio = std::pow(opts.lambda_hi / opts.lambda_lo,
                                1.0 / static_cast<double>(opts.lambda_points - 1));
  double best_lambda = -1.0, best_k = 0.0;
  if (lambda_table) lambda_table->reserve(static_cast<std::size_t>(opts.lambda_points));
  for (int j = 0; j < opts.lambda_points; ++j) {
    const double lambda = opts.lambda_lo * std::pow(ratio, static_cast<double>(j));
    double k_of_lambda = 0.0;
    for (const auto& [d, norm] : samples)
      k_of_lambda = std::max(k_of_lambda, norm * std::exp(lambda * d));
    if (lambda_table) lambda_table->emplace_back(lambda, k_of_lambda);
    if (k_of_lambda <= opts.k_cap && lambda > best_lambda) {
      best_lambda = lambda;
      best_k = k_of_lambda;
    }
  }
  if (best_lambda < 0.0)
    throw Error(ErrorKind::not_stable,
                "no exponential envelope on the sampled pairs fits under the overshoot cap");
  return Certificate(std::max(1.0, best_k), best_lambda, flavor);
}

EnvelopeFit estimate_envelope(const LinearImpulsiveSystem& sys, Flavor flavor,
                              const std::vector<std::pair<double, double>>& pairs, double step,
                              const EnvelopeOptions& opts) {
  if (pairs.empty()) throw Error(ErrorKind::argument, "envelope fit needs at least one pair");
  EnvelopeFit fit;
  fit.k_cap = opts.k_cap;
  fit.pairs = pairs;
  fit.pair_norms.reserve(pairs.size());
  std::vector<std::pair<double, double>> samples(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto [s, t] = pairs[i];
    fit.pair_norms.push_back(spectral_norm(transition_matrix(sys, s, t, step)));
    samples[i] = {(t - s) + (flavor == Flavor::strong ? sys.seq.count(s, t) : 0.0),
                  fit.pair_norms[i]};
  }

  fit.cert = detail::sweep_envelope(samples, flavor, opts, &fit.lambda_table);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double envelope = fit.cert.K * std::exp(-fit.cert.lambda * samples[i].first);
    if (fit.pair_norms[i] >= 0.99 * envelope) fit.near_envelope.push_back(i);
  }
  return fit;
}

std::vector<std::pair<double, double>> default_pair_grid(const ImpulseSequence& seq, unsigned seed,
                                                         int random_pairs) {
  std::vector<std::pair<double, double>> pairs;
  const auto& times = seq.times();
  for (std::size_t i = 0; i < times.size(); ++i)
    for (std::size_t j = i + 1; j < times.size(); ++j) pairs.emplace_back(times[i], times[j]);
  for (double tau : times) pairs.emplace_back(0.0, tau);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> pick(0.0, seq.horizon());
  int added = 0;
  while (added < random_pairs) {
    double a = pick(rng), b = pick(rng);
    if (a == b || seq.contains(a) || seq.contains(b)) continue;
    pairs.emplace_back(std::min(a, b), std::max(a, b));
    ++added;
  }
  return pairs;
}

}  // namespace impulsive
