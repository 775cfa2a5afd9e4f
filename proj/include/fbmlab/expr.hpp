#pragma once

#include <cctype>
#include <cmath>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "fbmlab/core.hpp"

namespace fbmlab {

/// Parse failure with 1-based byte offset and the expected-token set.
struct ParseError : std::runtime_error {
  std::size_t offset;
  std::string expected;
  ParseError(std::size_t offset_, std::string expected_)
      : std::runtime_error("syntax error at offset " + std::to_string(offset_) + ": expected " +
                           expected_),
        offset(offset_),
        expected(std::move(expected_)) {}
};

/// Expression AST over x1..xn, real literals, +, -, *, /, unary -, the
/// function whitelist sin/cos/exp/tanh and pow(., integer).
struct Expr {
  enum class Kind { constant, variable, add, sub, mul, div, neg, sin, cos, exp, tanh, pow };

  Kind kind = Kind::constant;
  double value = 0.0;   // constant
  int var = 0;          // variable index, 0-based (prints as x{var+1})
  int exponent = 0;     // pow
  std::vector<Expr> child;

  static Expr constant(double v) {
    Expr e;
    e.kind = Kind::constant;
    e.value = v;
    return e;
  }
  static Expr variable(int index) {
    Expr e;
    e.kind = Kind::variable;
    e.var = index;
    return e;
  }
  static Expr unary(Kind k, Expr a) {
    Expr e;
    e.kind = k;
    e.child.push_back(std::move(a));
    return e;
  }
  static Expr binary(Kind k, Expr a, Expr b) {
    Expr e;
    e.kind = k;
    e.child.push_back(std::move(a));
    e.child.push_back(std::move(b));
    return e;
  }
  static Expr power(Expr a, int k) {
    Expr e;
    e.kind = Kind::pow;
    e.exponent = k;
    e.child.push_back(std::move(a));
    return e;
  }

  bool operator==(const Expr& o) const {
    if (kind != o.kind || child.size() != o.child.size()) return false;
    switch (kind) {
      case Kind::constant:
        if (value != o.value) return false;
        break;
      case Kind::variable:
        if (var != o.var) return false;
        break;
      case Kind::pow:
        if (exponent != o.exponent) return false;
        break;
      default: break;
    }
    for (std::size_t i = 0; i < child.size(); ++i)
      if (!(child[i] == o.child[i])) return false;
    return true;
  }

  int max_variable() const {
    int m = kind == Kind::variable ? var : -1;
    for (const auto& c : child) m = std::max(m, c.max_variable());
    return m;
  }
};

namespace detail {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Expr parse() {
    Expr e = expression();
    skip_ws();
    if (pos_ != text_.size()) fail("end of input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& expected) { throw ParseError(pos_ + 1, expected); }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expr expression() {
    Expr e = term();
    for (;;) {
      if (eat('+'))
        e = Expr::binary(Expr::Kind::add, std::move(e), term());
      else if (eat('-'))
        e = Expr::binary(Expr::Kind::sub, std::move(e), term());
      else
        return e;
    }
  }

  Expr term() {
    Expr e = factor();
    for (;;) {
      if (eat('*'))
        e = Expr::binary(Expr::Kind::mul, std::move(e), factor());
      else if (eat('/'))
        e = Expr::binary(Expr::Kind::div, std::move(e), factor());
      else
        return e;
    }
  }

  Expr factor() {
    if (eat('-')) return Expr::unary(Expr::Kind::neg, factor());
    return primary();
  }

  Expr primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("a number, variable, function or '('");
    const char c = text_[pos_];
    if (eat('(')) {
      Expr e = expression();
      if (!eat(')')) fail("')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    fail("a number, variable, function or '('");
  }

  Expr number() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.' ||
            text_[pos_] == 'e' || text_[pos_] == 'E' ||
            ((text_[pos_] == '+' || text_[pos_] == '-') && pos_ > start &&
             (text_[pos_ - 1] == 'e' || text_[pos_ - 1] == 'E'))))
      ++pos_;
    try {
      std::size_t used = 0;
      const double v = std::stod(std::string(text_.substr(start, pos_ - start)), &used);
      if (used != pos_ - start) {
        pos_ = start + used;
        fail("a valid number");
      }
      return Expr::constant(v);
    } catch (const std::invalid_argument&) {
      pos_ = start;
      fail("a valid number");
    } catch (const std::out_of_range&) {
      pos_ = start;
      fail("a representable number");
    }
  }

  Expr identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                                   text_[pos_] == '_'))
      ++pos_;
    const std::string name(text_.substr(start, pos_ - start));
    if (name.size() >= 2 && name[0] == 'x') {
      bool digits = true;
      for (std::size_t i = 1; i < name.size(); ++i)
        digits = digits && std::isdigit(static_cast<unsigned char>(name[i]));
      if (digits) {
        const int idx = std::stoi(name.substr(1));
        if (idx < 1) {
          pos_ = start;
          fail("a variable index >= 1");
        }
        return Expr::variable(idx - 1);
      }
    }
    if (name == "sin" || name == "cos" || name == "exp" || name == "tanh") {
      if (!eat('(')) fail("'('");
      Expr arg = expression();
      if (!eat(')')) fail("')'");
      if (name == "sin") return Expr::unary(Expr::Kind::sin, std::move(arg));
      if (name == "cos") return Expr::unary(Expr::Kind::cos, std::move(arg));
      if (name == "exp") return Expr::unary(Expr::Kind::exp, std::move(arg));
      return Expr::unary(Expr::Kind::tanh, std::move(arg));
    }
    if (name == "pow") {
      if (!eat('(')) fail("'('");
      Expr base = expression();
      if (!eat(',')) fail("','");
      skip_ws();
      bool negative = eat('-');
      const std::size_t istart = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (pos_ == istart) fail("an integer exponent");
      int k = std::stoi(std::string(text_.substr(istart, pos_ - istart)));
      if (!eat(')')) fail("')'");
      return Expr::power(std::move(base), negative ? -k : k);
    }
    pos_ = start;
    fail("sin, cos, exp, tanh, pow or a variable x1..xn");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parse a single vector-field component expression.
inline Expr parse_field(std::string_view text) { return detail::Parser(text).parse(); }

/// Printer; printing then reparsing yields a structurally identical tree.
inline std::string print_expr(const Expr& e) {
  auto paren = [](const std::string& s) { return "(" + s + ")"; };
  switch (e.kind) {
    case Expr::Kind::constant: {
      // grammar has no negative literals: trees from the parser carry the
      // sign in a neg node, so round-trip identity holds on parser output
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", e.value);
      return std::string(buf);
    }
    case Expr::Kind::variable: return "x" + std::to_string(e.var + 1);
    case Expr::Kind::add: return paren(print_expr(e.child[0]) + " + " + print_expr(e.child[1]));
    case Expr::Kind::sub: return paren(print_expr(e.child[0]) + " - " + print_expr(e.child[1]));
    case Expr::Kind::mul: return paren(print_expr(e.child[0]) + " * " + print_expr(e.child[1]));
    case Expr::Kind::div: return paren(print_expr(e.child[0]) + " / " + print_expr(e.child[1]));
    case Expr::Kind::neg: return "-" + paren(print_expr(e.child[0]));
    case Expr::Kind::sin: return "sin" + paren(print_expr(e.child[0]));
    case Expr::Kind::cos: return "cos" + paren(print_expr(e.child[0]));
    case Expr::Kind::exp: return "exp" + paren(print_expr(e.child[0]));
    case Expr::Kind::tanh: return "tanh" + paren(print_expr(e.child[0]));
    case Expr::Kind::pow:
      return "pow(" + print_expr(e.child[0]) + ", " + std::to_string(e.exponent) + ")";
  }
  return "?";
}

namespace detail {

template <typename S>
S ipow(S base, int k) {
  if (k == 0) return S(1.0);
  bool inv = k < 0;
  unsigned m = static_cast<unsigned>(inv ? -static_cast<long long>(k) : k);
  S acc(1.0);
  S b = base;
  while (m) {
    if (m & 1u) acc = acc * b;
    b = b * b;
    m >>= 1;
  }
  return inv ? S(1.0) / acc : acc;
}

}  // namespace detail

/// Generic recursive evaluator; S must provide arithmetic and sin/cos/exp/tanh.
template <typename S>
S eval_expr(const Expr& e, const std::vector<S>& vars) {
  using K = Expr::Kind;
  switch (e.kind) {
    case K::constant: return S(e.value);
    case K::variable:
      if (e.var < 0 || static_cast<std::size_t>(e.var) >= vars.size())
        throw EvalError("expression references x" + std::to_string(e.var + 1) +
                        " beyond the state dimension");
      return vars[static_cast<std::size_t>(e.var)];
    case K::add: return eval_expr(e.child[0], vars) + eval_expr(e.child[1], vars);
    case K::sub: return eval_expr(e.child[0], vars) - eval_expr(e.child[1], vars);
    case K::mul: return eval_expr(e.child[0], vars) * eval_expr(e.child[1], vars);
    case K::div: return eval_expr(e.child[0], vars) / eval_expr(e.child[1], vars);
    case K::neg: return -eval_expr(e.child[0], vars);
    case K::sin: return sin(eval_expr(e.child[0], vars));
    case K::cos: return cos(eval_expr(e.child[0], vars));
    case K::exp: return exp(eval_expr(e.child[0], vars));
    case K::tanh: return tanh(eval_expr(e.child[0], vars));
    case K::pow: return detail::ipow(eval_expr(e.child[0], vars), e.exponent);
  }
  throw EvalError("corrupt expression node");
}

/// Forward-mode dual number carrying one directional derivative.
struct Dual {
  double v = 0.0;
  double d = 0.0;
  Dual() = default;
  Dual(double value) : v(value) {}
  Dual(double value, double deriv) : v(value), d(deriv) {}
};

inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator-(Dual a) { return {-a.v, -a.d}; }
inline Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
inline Dual operator/(Dual a, Dual b) {
  return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)};
}
inline Dual sin(Dual a) { return {std::sin(a.v), std::cos(a.v) * a.d}; }
inline Dual cos(Dual a) { return {std::cos(a.v), -std::sin(a.v) * a.d}; }
inline Dual exp(Dual a) {
  const double e = std::exp(a.v);
  return {e, e * a.d};
}
inline Dual tanh(Dual a) {
  const double t = std::tanh(a.v);
  return {t, (1.0 - t * t) * a.d};
}

}  // namespace fbmlab
