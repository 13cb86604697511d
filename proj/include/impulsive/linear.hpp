// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "impulsive/timebase.hpp"
#include "impulsive/types.hpp"

namespace impulsive {

/// Square-matrix-valued function of time; piecewise-constant kinds are
/// right-continuous, mirroring ScalarFunction.
class MatrixFunction {
 public:
  MatrixFunction() = default;

  static MatrixFunction constant(Mat a);
  static MatrixFunction piecewise(std::vector<double> breakpoints, std::vector<Mat> values);
  /// `left_f`, when given, supplies the limit from below at the function's
  /// own discontinuities; otherwise left(t) falls back to the right value.
  static MatrixFunction callable(int dim, std::function<Mat(double)> f,
                                 std::vector<double> breakpoints_hint = {},
                                 std::function<Mat(double)> left_f = nullptr);

  Mat operator()(double t) const;
  /// Limit from below; differs from the right value only at piecewise
  /// breakpoints. Integrators use it for stages landing on a segment end.
  Mat left(double t) const;
  int dim() const noexcept { return dim_; }
  const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
  bool is_constant() const noexcept { return kind_ == Kind::constant; }

 private:
  enum class Kind { constant, piecewise, callable };
  Kind kind_ = Kind::constant;
  int dim_ = 0;
  std::vector<double> breakpoints_;
  std::vector<Mat> values_;
  std::function<Mat(double)> fn_;
  std::function<Mat(double)> left_fn_;
};

/// Vector-valued function of time with one-sided evaluation (flow forcing).
class VectorFunction {
 public:
  VectorFunction() = default;

  static VectorFunction zero(int dim);
  static VectorFunction constant(Vec v);
  static VectorFunction piecewise(std::vector<double> breakpoints, std::vector<Vec> values);
  static VectorFunction callable(int dim, std::function<Vec(double)> f,
                                 std::vector<double> breakpoints_hint = {});

  Vec operator()(double t) const;
  Vec left(double t) const;
  int dim() const noexcept { return dim_; }
  const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }

 private:
  enum class Kind { zero, constant, piecewise, callable };
  Kind kind_ = Kind::zero;
  int dim_ = 0;
  Vec const_;
  std::vector<double> breakpoints_;
  std::vector<Vec> values_;
  std::function<Vec(double)> fn_;
};

/// Jump matrices indexed by position in the impulse sequence.
class JumpMatrixMap {
 public:
  JumpMatrixMap() = default;

  static JumpMatrixMap constant(Mat r);
  static JumpMatrixMap per_impulse(std::vector<Mat> r);
  static JumpMatrixMap callable(int dim, std::function<Mat(double)> f);

  /// k is the index of tau in the owning sequence.
  Mat at(std::size_t k, double tau) const;
  int dim() const noexcept { return dim_; }
  std::size_t table_size() const noexcept { return values_.size(); }
  bool is_table() const noexcept { return kind_ == Kind::per_impulse; }

 private:
  enum class Kind { constant, per_impulse, callable };
  Kind kind_ = Kind::constant;
  int dim_ = 0;
  Mat const_;
  std::vector<Mat> values_;
  std::function<Mat(double)> fn_;
};

/// Jump forcing vectors indexed by position in the impulse sequence.
class JumpVectorMap {
 public:
  JumpVectorMap() = default;

  static JumpVectorMap zero(int dim);
  static JumpVectorMap constant(Vec w);
  static JumpVectorMap per_impulse(std::vector<Vec> w);
  static JumpVectorMap callable(int dim, std::function<Vec(double)> f);

  Vec at(std::size_t k, double tau) const;
  int dim() const noexcept { return dim_; }
  std::size_t table_size() const noexcept { return values_.size(); }
  bool is_table() const noexcept { return kind_ == Kind::per_impulse; }

 private:
  enum class Kind { zero, constant, per_impulse, callable };
  Kind kind_ = Kind::zero;
  int dim_ = 0;
  Vec const_;
  std::vector<Vec> values_;
  std::function<Vec(double)> fn_;
};

/// Linear impulsive system: flow matrix A(t), jump matrices R over the
/// impulse sequence.
struct LinearImpulsiveSystem {
  int dim = 0;
  MatrixFunction A;
  JumpMatrixMap R;
  ImpulseSequence seq;

  LinearImpulsiveSystem(MatrixFunction a, JumpMatrixMap r, ImpulseSequence s);
};

/// Exponential envelope flavor: strong decay counts impulses in the exponent,
/// weak decay depends on elapsed time only.
enum class Flavor { strong, weak };

/// Fitted (or asserted) exponential envelope ||Phi(t,s)|| <= K * exp(-lambda * d)
/// with d = t - s + n_(s,t] for the strong flavor and d = t - s for the weak.
struct Certificate {
  double K = 1.0;
  double lambda = 0.0;
  Flavor flavor = Flavor::strong;
  std::string note;  // validity restriction, e.g. the dwell-time class

  Certificate() = default;
  Certificate(double k, double lam, Flavor fl);
};

/// Affine forcing for the linear system: flow term v(t), jump kicks w(tau).
struct AffineDriving {
  VectorFunction v;
  JumpVectorMap w;
};

/// State-transition matrix over (s, t]: continuous blocks by fixed-step RK4
/// (final substep shortened to land on impulse times and on t), jump matrices
/// applied chronologically; the jump at t itself is included when t is an
/// impulse time.
Mat transition_matrix(const LinearImpulsiveSystem& sys, double s, double t, double step);

/// Solution of the driven system from (t0, x0): transition term, trapezoid
/// integral of Phi(t,s)v(s) on the integration grid, and jump kicks
/// Phi(t,tau)w(tau) over impulses in (t0, t].
Vec variation_of_constants(const LinearImpulsiveSystem& sys, const AffineDriving& drive, double t0,
                           const Vec& x0, double t, double step);

/// Max-abs deviation of Phi(t,s) from Phi(t,r)*Phi(r,s).
double semigroup_check(const LinearImpulsiveSystem& sys, double s, double r, double t, double step);

struct EnvelopeFit {
  Certificate cert;
  double k_cap = 0.0;
  // Full sweep table (lambda, K(lambda)) and the fitted pairs.
  std::vector<std::pair<double, double>> lambda_table;
  std::vector<std::pair<double, double>> pairs;
  std::vector<double> pair_norms;
  // Indices of pairs within 1% of the fitted envelope (binding cases).
  std::vector<std::size_t> near_envelope;
};

struct EnvelopeOptions {
  double k_cap = 1e3;
  double lambda_lo = 1e-3;
  double lambda_hi = 10.0;
  int lambda_points = 200;
};

/// Envelope fit by lambda-grid sweep: for each lambda on a geometric grid,
/// K(lambda) = max over pairs of ||Phi(t,s)|| * exp(lambda * d); returns the
/// certificate with the largest lambda whose K stays within the cap. A fit
/// over sampled pairs, not a proof.
EnvelopeFit estimate_envelope(const LinearImpulsiveSystem& sys, Flavor flavor,
                              const std::vector<std::pair<double, double>>& pairs, double step,
                              const EnvelopeOptions& opts = {});

/// All impulse-time pairs (tau_i, tau_j), the leading pairs (0, tau_j), and
/// `random_pairs` off-impulse pairs drawn uniformly from [0, horizon].
std::vector<std::pair<double, double>> default_pair_grid(const ImpulseSequence& seq,
                                                         unsigned seed = 0, int random_pairs = 20);

namespace detail {

/// Integration nodes for [a, b]: anchors (impulse times, breakpoints) plus
/// fixed-step subdivision of each anchor gap, short final substep.
std::vector<double> subdivided_nodes(double a, double b, double step,
                                     const std::vector<double>& anchors);

/// One classical RK4 step of width h for X' = A(t) X.
Mat rk4_matrix_step(const MatrixFunction& a, const Mat& x, double t, double h);

/// Lambda-grid sweep over (d, norm) samples, d the already-counted decay
/// content of the pair: K(lambda) = max over samples of norm * exp(lambda*d);
/// picks the largest lambda whose K stays within the cap. Fills
/// `lambda_table` with the full sweep when given.
Certificate sweep_envelope(const std::vector<std::pair<double, double>>& samples, Flavor flavor,
                           const EnvelopeOptions& opts,
                           std::vector<std::pair<double, double>>* lambda_table = nullptr);

}  // namespace detail
}  // namespace impulsive
