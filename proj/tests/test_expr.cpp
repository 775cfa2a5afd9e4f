#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <functional>

#include "fbmlab/expr.hpp"
#include "fbmlab/rng.hpp"

using namespace fbmlab;

namespace {

// Independent reference evaluator: compiles the tree to a postfix program and
// runs it on an explicit stack (different strategy from the recursive eval).
struct PostfixOp {
  Expr::Kind kind;
  double value;
  int var;
  int exponent;
};

void compile_postfix(const Expr& e, std::vector<PostfixOp>& prog) {
  for (const auto& c : e.child) compile_postfix(c, prog);
  prog.push_back({e.kind, e.value, e.var, e.exponent});
}

double run_postfix(const std::vector<PostfixOp>& prog, const std::vector<double>& vars) {
  std::vector<double> stack;
  for (const auto& op : prog) {
    using K = Expr::Kind;
    switch (op.kind) {
      case K::constant: stack.push_back(op.value); break;
      case K::variable: stack.push_back(vars[static_cast<std::size_t>(op.var)]); break;
      case K::neg: stack.back() = -stack.back(); break;
      case K::sin: stack.back() = std::sin(stack.back()); break;
      case K::cos: stack.back() = std::cos(stack.back()); break;
      case K::exp: stack.back() = std::exp(stack.back()); break;
      case K::tanh: stack.back() = std::tanh(stack.back()); break;
      case K::pow: stack.back() = std::pow(stack.back(), op.exponent); break;
      default: {
        const double b = stack.back();
        stack.pop_back();
        const double a = stack.back();
        switch (op.kind) {
          case K::add: stack.back() = a + b; break;
          case K::sub: stack.back() = a - b; break;
          case K::mul: stack.back() = a * b; break;
          case K::div: stack.back() = a / b; break;
          default: FAIL("bad op");
        }
      }
    }
  }
  return stack.back();
}

// depth-bounded random expression in the grammar (constants nonnegative; the
// grammar carries signs in neg nodes)
Expr random_expr(const RandomStream& s, std::uint64_t& ctr, int depth, int nvars) {
  const double u = s.uniform(ctr++);
  if (depth <= 0 || u < 0.25) {
    if (u < 0.125) return Expr::constant(std::floor(s.uniform(ctr++) * 100.0) / 16.0);
    return Expr::variable(static_cast<int>(s.uniform(ctr++) * nvars));
  }
  const double pick = s.uniform(ctr++);
  auto sub = [&](int d) { return random_expr(s, ctr, d, nvars); };
  if (pick < 0.18) return Expr::binary(Expr::Kind::add, sub(depth - 1), sub(depth - 1));
  if (pick < 0.36) return Expr::binary(Expr::Kind::sub, sub(depth - 1), sub(depth - 1));
  if (pick < 0.54) return Expr::binary(Expr::Kind::mul, sub(depth - 1), sub(depth - 1));
  if (pick < 0.62) return Expr::binary(Expr::Kind::div, sub(depth - 1), sub(depth - 1));
  if (pick < 0.70) return Expr::unary(Expr::Kind::neg, sub(depth - 1));
  if (pick < 0.78) return Expr::unary(Expr::Kind::sin, sub(depth - 1));
  if (pick < 0.86) return Expr::unary(Expr::Kind::cos, sub(depth - 1));
  if (pick < 0.92) return Expr::unary(Expr::Kind::tanh, sub(depth - 1));
  if (pick < 0.96) return Expr::power(sub(depth - 1), static_cast<int>(s.uniform(ctr++) * 5.0) - 1);
  return Expr::unary(Expr::Kind::exp, sub(depth - 1));
}

}  // namespace

TEST_CASE("grammar basics", "[expr]") {
  const Expr e = parse_field("1 + 0.5*sin(x1)");
  Expr expected = Expr::binary(
      Expr::Kind::add, Expr::constant(1.0),
      Expr::binary(Expr::Kind::mul, Expr::constant(0.5),
                   Expr::unary(Expr::Kind::sin, Expr::variable(0))));
  CHECK(e == expected);

  const Expr e2 = parse_field("x1*x2 - x3/2");
  Expr expected2 = Expr::binary(
      Expr::Kind::sub, Expr::binary(Expr::Kind::mul, Expr::variable(0), Expr::variable(1)),
      Expr::binary(Expr::Kind::div, Expr::variable(2), Expr::constant(2.0)));
  CHECK(e2 == expected2);

  // whitespace-insensitive
  CHECK(parse_field(" x1 *x2-  x3/ 2 ") == expected2);
  // left associativity and precedence
  CHECK(eval_expr(parse_field("1 - 2 - 3"), std::vector<double>{}) == -4.0);
  CHECK(eval_expr(parse_field("2 + 3 * 4"), std::vector<double>{}) == 14.0);
  CHECK(eval_expr(parse_field("-2*3"), std::vector<double>{}) == -6.0);
  CHECK(eval_expr(parse_field("pow(2, -2)"), std::vector<double>{}) == 0.25);
}

TEST_CASE("parse errors carry offsets and expectations", "[expr]") {
  try {
    parse_field("sin(x1");
    FAIL("expected ParseError");
  } catch (const ParseError& err) {
    CHECK(err.offset == 7);
    CHECK(err.expected == "')'");
  }
  CHECK_THROWS_AS(parse_field("x1 +"), ParseError);
  CHECK_THROWS_AS(parse_field("foo(x1)"), ParseError);
  CHECK_THROWS_AS(parse_field("pow(x1, x2)"), ParseError);
  CHECK_THROWS_AS(parse_field("1 2"), ParseError);
  CHECK_THROWS_AS(parse_field(""), ParseError);
}

TEST_CASE("round trip print-parse identity on a 200-expression fuzz corpus", "[expr]") {
  RandomStream s(2718, 0);
  std::uint64_t ctr = 0;
  for (int i = 0; i < 200; ++i) {
    const Expr e = random_expr(s, ctr, 4, 3);
    const std::string text = print_expr(e);
    INFO(text);
    CHECK(parse_field(text) == e);
  }
}

TEST_CASE("evaluator agrees with an independent postfix machine", "[expr]") {
  RandomStream s(314, 1);
  std::uint64_t ctr = 0;
  int compared = 0;
  for (int i = 0; i < 200; ++i) {
    const Expr e = random_expr(s, ctr, 4, 3);
    std::vector<PostfixOp> prog;
    compile_postfix(e, prog);
    for (int pt = 0; pt < 5; ++pt) {
      std::vector<double> x = {s.uniform(ctr++) * 4.0 - 2.0, s.uniform(ctr++) * 4.0 - 2.0,
                               s.uniform(ctr++) * 4.0 - 2.0};
      const double ref = run_postfix(prog, x);
      if (!std::isfinite(ref) || std::abs(ref) > 1e12) continue;
      const double got = eval_expr(e, x);
      CHECK(got == Catch::Approx(ref).epsilon(1e-14).margin(1e-14));
      ++compared;
    }
  }
  CHECK(compared > 500);
}

TEST_CASE("dual arithmetic differentiates the whitelist", "[expr]") {
  auto check_deriv = [](const std::string& text, double x, double expected) {
    const Expr e = parse_field(text);
    const Dual r = eval_expr(e, std::vector<Dual>{Dual(x, 1.0)});
    CHECK(r.d == Catch::Approx(expected).margin(1e-12));
  };
  check_deriv("sin(x1)", 0.0, 1.0);
  check_deriv("cos(x1)", 0.0, 0.0);
  check_deriv("exp(x1)", 1.0, std::exp(1.0));
  check_deriv("tanh(x1)", 0.5, 1.0 - std::tanh(0.5) * std::tanh(0.5));
  check_deriv("pow(x1, 3)", 2.0, 12.0);
  check_deriv("pow(x1, -1)", 2.0, -0.25);
  check_deriv("x1*x1 + 2*x1", 3.0, 8.0);
  check_deriv("1 / x1", 2.0, -0.25);
}
