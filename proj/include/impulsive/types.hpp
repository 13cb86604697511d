// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace impulsive {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Error categories mirrored by the C API status codes and the CLI exit codes.
enum class ErrorKind {
  argument,      // bad call arguments (t < s, negative step, ...)
  schema,        // system document fails validation
  threshold,     // a strict certificate inequality is violated
  horizon,       // query beyond the sequence horizon
  escape,        // trajectory magnitude exceeded the blow-up cap
  not_stable,    // no exponential envelope found under the fitting cap
  precondition,  // an operation's hypothesis does not hold for the data
  config,        // inconsistent system definition (missing reset map, ...)
  io,            // file read/write failure
  internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// A strict inequality of the theory was violated; carries both sides so
/// reports can show "actual vs admissible".
class ThresholdError : public Error {
 public:
  ThresholdError(const std::string& msg, double admissible, double actual)
      : Error(ErrorKind::threshold, msg), admissible_(admissible), actual_(actual) {}
  double admissible() const noexcept { return admissible_; }
  double actual() const noexcept { return actual_; }

 private:
  double admissible_;
  double actual_;
};

/// Finite-escape guard tripped during simulation.
class EscapeError : public Error {
 public:
  EscapeError(const std::string& msg, double time) : Error(ErrorKind::escape, msg), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// Induced 2-norm via power iteration on B^T B. Deterministic start vector;
/// fixed iteration budget with early exit on a 1e-10 stagnation tolerance.
double spectral_norm(const Mat& b, int max_iters = 50, double tol = 1e-10);

/// Largest absolute entry (used for residual checks on matrices).
double max_abs(const Mat& b);

}  // namespace impulsive
