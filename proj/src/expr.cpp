// SPDX-License-Identifier: Apache-2.0
#include "impulsive/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

namespace impulsive {

namespace {

[[noreturn]] void fail(const std::string& src, std::size_t pos, const std::string& why) {
  throw Error(ErrorKind::schema,
              "expression error at position " + std::to_string(pos) + " in \"" + src + "\": " + why);
}

}  // namespace

/// Recursive-descent parser, grammar:
///   sum     := product (('+'|'-') product)*
///   product := unary (('*'|'/') unary)*
///   unary   := '-' unary | primary
///   primary := number | 't' | 'x[' int ']' | 'u[' int ']'
///            | ('sin'|'cos'|'exp') '(' sum ')' | '(' sum ')'
class ExprParser {
 public:
  ExprParser(const std::string& src, int state_dim, int input_dim)
      : src_(src), n_(state_dim), m_(input_dim) {}

  Expr run() {
    Expr e;
    e.source_ = src_;
    out_ = &e;
    pos_ = 0;
    e.root_ = sum();
    skip_ws();
    if (pos_ != src_.size()) fail(src_, pos_, "unexpected trailing input");
    if (e.root_ < 0) fail(src_, pos_, "empty expression");
    return e;
  }

 private:
  const std::string& src_;
  int n_, m_;
  std::size_t pos_ = 0;
  Expr* out_ = nullptr;

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  int push(Expr::Node node) {
    out_->nodes_.push_back(node);
    return static_cast<int>(out_->nodes_.size()) - 1;
  }

  int sum() {
    int left = product();
    while (true) {
      if (eat('+'))
        left = push({Expr::Op::add, 0.0, 0, left, product()});
      else if (eat('-'))
        left = push({Expr::Op::sub, 0.0, 0, left, product()});
      else
        return left;
    }
  }

  int product() {
    int left = unary();
    while (true) {
      if (eat('*'))
        left = push({Expr::Op::mul, 0.0, 0, left, unary()});
      else if (eat('/'))
        left = push({Expr::Op::div, 0.0, 0, left, unary()});
      else
        return left;
    }
  }

  int unary() {
    if (eat('-')) return push({Expr::Op::neg, 0.0, 0, unary(), -1});
    return primary();
  }

  int indexed(char what, int bound) {
    skip_ws();
    if (!eat('[')) fail(src_, pos_, std::string(1, what) + " needs an index like " + what + "[0]");
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    if (start == pos_) fail(src_, pos_, "expected an integer index");
    int idx = std::atoi(src_.substr(start, pos_ - start).c_str());
    if (!eat(']')) fail(src_, pos_, "missing ]");
    if (idx >= bound)
      fail(src_, pos_, std::string(1, what) + "[" + std::to_string(idx) + "] out of range (dimension " +
                           std::to_string(bound) + ")");
    return idx;
  }

  int primary() {
    skip_ws();
    if (pos_ >= src_.size()) fail(src_, pos_, "unexpected end of expression");
    char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      char* end = nullptr;
      double v = std::strtod(src_.c_str() + pos_, &end);
      pos_ = static_cast<std::size_t>(end - src_.c_str());
      return push({Expr::Op::number, v, 0, -1, -1});
    }
    if (eat('(')) {
      int inner = sum();
      if (!eat(')')) fail(src_, pos_, "missing )");
      return inner;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < src_.size() && std::isalpha(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      std::string name = src_.substr(start, pos_ - start);
      if (name == "t") return push({Expr::Op::var_t, 0.0, 0, -1, -1});
      if (name == "x") return push({Expr::Op::var_x, 0.0, indexed('x', n_), -1, -1});
      if (name == "u") return push({Expr::Op::var_u, 0.0, indexed('u', m_), -1, -1});
      Expr::Op fn;
      if (name == "sin")
        fn = Expr::Op::fn_sin;
      else if (name == "cos")
        fn = Expr::Op::fn_cos;
      else if (name == "exp")
        fn = Expr::Op::fn_exp;
      else
        fail(src_, start, "unknown name \"" + name + "\"");
      if (!eat('(')) fail(src_, pos_, name + " needs parentheses");
      int inner = sum();
      if (!eat(')')) fail(src_, pos_, "missing )");
      return push({fn, 0.0, 0, inner, -1});
    }
    fail(src_, pos_, std::string("unexpected character '") + c + "'");
  }
};

Expr Expr::parse(const std::string& src, int state_dim, int input_dim) {
  return ExprParser(src, state_dim, input_dim).run();
}

double Expr::eval(double t, const Vec& x, const Vec& u) const {
  if (root_ < 0) throw Error(ErrorKind::internal, "evaluating an empty expression");
  // Nodes are appended in post-order (children first), so one forward sweep
  // over the pool evaluates the tree without recursion.
  thread_local std::vector<double> vals;
  vals.resize(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& nd = nodes_[i];
    double a = nd.a >= 0 ? vals[static_cast<std::size_t>(nd.a)] : 0.0;
    double b = nd.b >= 0 ? vals[static_cast<std::size_t>(nd.b)] : 0.0;
    switch (nd.op) {
      case Op::number: vals[i] = nd.value; break;
      case Op::var_t: vals[i] = t; break;
      case Op::var_x: vals[i] = x(nd.index); break;
      case Op::var_u: vals[i] = u(nd.index); break;
      case Op::add: vals[i] = a + b; break;
      case Op::sub: vals[i] = a - b; break;
      case Op::mul: vals[i] = a * b; break;
      case Op::div: vals[i] = a / b; break;
      case Op::neg: vals[i] = -a; break;
      case Op::fn_sin: vals[i] = std::sin(a); break;
      case Op::fn_cos: vals[i] = std::cos(a); break;
      case Op::fn_exp: vals[i] = std::exp(a); break;
    }
  }
  return vals[static_cast<std::size_t>(root_)];
}

ExprVector ExprVector::parse(const std::vector<std::string>& sources, int state_dim,
                             int input_dim) {
  ExprVector v;
  v.exprs_.reserve(sources.size());
  for (const auto& s : sources) v.exprs_.push_back(Expr::parse(s, state_dim, input_dim));
  return v;
}

Vec ExprVector::eval(double t, const Vec& x, const Vec& u) const {
  Vec out(static_cast<Eigen::Index>(exprs_.size()));
  for (std::size_t i = 0; i < exprs_.size(); ++i)
    out(static_cast<Eigen::Index>(i)) = exprs_[i].eval(t, x, u);
  return out;
}

}  // namespace impulsive
