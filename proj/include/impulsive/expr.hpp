// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "impulsive/types.hpp"

namespace impulsive {

/// Tiny arithmetic expression over (t, x[i], u[j]): +, -, *, /, unary minus,
/// sin, cos, exp, numeric literals. Parsed once, evaluated many times.
class Expr {
 public:
  Expr() = default;

  /// Parses `src` against the given dimensions; index bounds are checked at
  /// parse time. Throws a schema error with a position on bad input.
  static Expr parse(const std::string& src, int state_dim, int input_dim);

  double eval(double t, const Vec& x, const Vec& u) const;
  const std::string& source() const noexcept { return source_; }
  bool empty() const noexcept { return nodes_.empty(); }

 private:
  enum class Op { number, var_t, var_x, var_u, add, sub, mul, div, neg, fn_sin, fn_cos, fn_exp };
  struct Node {
    Op op;
    double value = 0.0;  // number
    int index = 0;       // x[i] / u[j]
    int a = -1, b = -1;  // operand node ids
  };

  std::vector<Node> nodes_;
  int root_ = -1;
  std::string source_;

  friend class ExprParser;
};

/// Vector of expressions sharing dimensions, evaluated into one Vec.
class ExprVector {
 public:
  ExprVector() = default;
  static ExprVector parse(const std::vector<std::string>& sources, int state_dim, int input_dim);

  Vec eval(double t, const Vec& x, const Vec& u) const;
  int size() const noexcept { return static_cast<int>(exprs_.size()); }
  const std::vector<Expr>& items() const noexcept { return exprs_; }

 private:
  std::vector<Expr> exprs_;
};

}  // namespace impulsive
