#include "doctest.h"

#include "em4lab/error.hpp"
#include "em4lab/expr.hpp"
#include "em4lab/jet.hpp"
#include "em4lab/program.hpp"

#include <cmath>
#include <random>

using namespace em4lab;

namespace {

std::string gen(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 2 : 11);
  switch (pick(rng)) {
    case 0: return std::to_string(std::uniform_int_distribution<int>(1, 9)(rng));
    case 1: return "x";
    case 2: return "y";
    case 3: return "(" + gen(rng, depth - 1) + " + " + gen(rng, depth - 1) + ")";
    case 4: return gen(rng, depth - 1) + " - " + gen(rng, depth - 1);
    case 5: return gen(rng, depth - 1) + "*" + gen(rng, depth - 1);
    case 6: return "(" + gen(rng, depth - 1) + ")/(2 + " + gen(rng, depth - 1) + "^2)";
    case 7: return "-" + gen(rng, depth - 1);
    case 8: return "sin(" + gen(rng, depth - 1) + ")";
    case 9: return "exp(-(" + gen(rng, depth - 1) + ")^2)";
    case 10: return "(" + gen(rng, depth - 1) + ")^" + std::to_string(std::uniform_int_distribution<int>(2, 3)(rng));
    default: return "atan(" + gen(rng, depth - 1) + ")*pi";
  }
}

}  // namespace

TEST_CASE("parse shapes") {
  const Expression e = parse("a^2*sin(x)^2");
  const Node& r = e.root();
  REQUIRE(r.kind == NodeKind::kMul);
  CHECK(r.lhs->kind == NodeKind::kPow);
  CHECK(r.lhs->lhs->name == "a");
  CHECK(r.rhs->kind == NodeKind::kPow);
  CHECK(r.rhs->lhs->kind == NodeKind::kCall);
  CHECK(r.rhs->lhs->func == Func::kSin);

  const Expression fs = parse("1/(1+x^2+y^2)^2");
  CHECK(fs.root().kind == NodeKind::kDiv);
  CHECK(fs.root().rhs->kind == NodeKind::kPow);

  // ^ is right-associative and binds tighter than unary minus.
  CHECK(eval(parse("2^3^2"), {}) == 512.0);
  CHECK(eval(parse("-2^2"), {}) == -4.0);
  CHECK(eval(parse("2^-1"), {}) == 0.5);
  CHECK(eval(parse(" 1 -  2 - 3 "), {}) == -4.0);
  CHECK(eval(parse("8/4/2"), {}) == 1.0);
}

TEST_CASE("parse errors carry offsets") {
  try {
    parse("2*+x");
    FAIL("expected a syntax error");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 2);
    CHECK(e.code() == ErrorCode::kSyntax);
  }
  try {
    parse("sin(");
    FAIL("expected a syntax error");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 4);
  }
  try {
    parse("1 + foo(x)");
    FAIL("expected an unknown function");
  } catch (const ParseError& e) {
    CHECK(e.code() == ErrorCode::kUnknownFunction);
    CHECK(e.offset() == 4);
  }
  CHECK_THROWS_AS(parse(""), ParseError);
  CHECK_THROWS_AS(parse("(1 + 2"), ParseError);
  CHECK_THROWS_AS(parse("1 2"), ParseError);
  CHECK_THROWS_AS(parse("sin x"), ParseError);
}

TEST_CASE("eval examples") {
  CHECK(std::abs(eval(parse("sin(x)^2+cos(x)^2"), {{"x", 0.7}}) - 1.0) <= 1e-15);
  CHECK(eval(parse("pi"), {}) == 3.141592653589793);
  CHECK_THROWS_AS(eval(parse("sqrt(x)"), {{"x", -1.0}}), Error);
  CHECK_THROWS_AS(eval(parse("log(x)"), {{"x", 0.0}}), Error);
  CHECK_THROWS_AS(eval(parse("1/x"), {{"x", 0.0}}), Error);
  CHECK_THROWS_AS(eval(parse("x^0.5"), {{"x", -2.0}}), Error);
  CHECK(eval(parse("x^3"), {{"x", -2.0}}) == -8.0);
  try {
    eval(parse("1 + log(x - 1)"), {{"x", 1.0}});
    FAIL("expected a domain error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDomain);
    CHECK(std::string(e.what()).find("log(x - 1)") != std::string::npos);
  }
  try {
    eval(parse("x + z"), {{"x", 1.0}});
    FAIL("expected an unbound variable");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kUnboundVariable);
  }
}

TEST_CASE("canonical printing") {
  CHECK(print(parse("(a*b)*c")) == "a * b * c");
  CHECK(print(parse("a*(b*c)")) == "a * (b * c)");
  CHECK(print(parse("a-(b-c)")) == "a - (b - c)");
  CHECK(print(parse("(-x)^2")) == "(-x)^2");
  CHECK(print(parse("-x^2")) == "-x^2");
  CHECK(print(parse("x^(1/2)")) == "x^(1 / 2)");
  CHECK(print(parse("0.1")) == "0.1");
  CHECK(print(parse("1e-6")) == "1e-06");
}

TEST_CASE("negative literals round-trip") {
  auto node = [](NodeKind k, NodePtr l, NodePtr r) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->lhs = std::move(l);
    n->rhs = std::move(r);
    return NodePtr(n);
  };
  auto var = std::make_shared<Node>();
  var->kind = NodeKind::kVariable;
  var->name = "x";
  const Expression cases[] = {
      Expression::number(-1.0),
      Expression(node(NodeKind::kPow, Expression::number(-2.0).root_ptr(), Expression::number(2.0).root_ptr())),
      Expression(node(NodeKind::kSub, var, Expression::number(-1.0).root_ptr())),
  };
  for (const Expression& e : cases) {
    const Expression again = parse(e.to_string());
    CHECK(again == e);
    CHECK(eval(again, {{"x", 3.0}}) == eval(e, {{"x", 3.0}}));
  }
}

TEST_CASE("parse . print . parse is the identity on random expressions") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 2000; ++t) {
    const Expression e = parse(gen(rng, 4));
    const std::string text = print(e);
    const Expression again = parse(text);
    CHECK(again == e);
    CHECK(print(again) == text);
  }
}

TEST_CASE("compiled programs agree with tree evaluation") {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int t = 0; t < 500; ++t) {
    std::vector<Expression> outs = {parse(gen(rng, 4)), parse(gen(rng, 3))};
    const Program p(outs, {"x"}, {{"y", 0.25}});
    for (int s = 0; s < 5; ++s) {
      const double x = u(rng);
      double tree0 = 0.0, tree1 = 0.0;
      bool tree_ok = true;
      try {
        tree0 = eval(outs[0], {{"x", x}, {"y", 0.25}});
        tree1 = eval(outs[1], {{"x", x}, {"y", 0.25}});
      } catch (const Error&) {
        tree_ok = false;
      }
      if (!tree_ok) continue;
      const std::vector<double> v = p({x});
      CHECK(std::abs(v[0] - tree0) <= 1e-12 * (1.0 + std::abs(tree0)));
      CHECK(std::abs(v[1] - tree1) <= 1e-12 * (1.0 + std::abs(tree1)));
    }
  }
}

TEST_CASE("common subexpressions are shared across outputs") {
  const Expression a = parse("sin(x*y) + (1 + x)^2");
  const Expression b = parse("sin(x*y) * (1 + x)^2");
  const Program p({a, b}, {"x", "y"}, {});
  const Program single({a}, {"x", "y"}, {});
  CHECK(p.size() <= single.size() + 1);
  const Program folded({parse("2*c + x")}, {"x"}, {{"c", 3.0}});
  CHECK(folded({1.0})[0] == 7.0);
}

TEST_CASE("program jets match finite differences") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 300; ++t) {
    const Expression e = parse(gen(rng, 3));
    const Program p({e}, {"x", "y"}, {});
    const double x = u(rng), y = u(rng);
    std::vector<Jet<2>> in = {Jet<2>::variable(x, 0), Jet<2>::variable(y, 1)};
    Jet<2> out;
    std::vector<Jet<2>> scratch;
    try {
      p.run(in.data(), &out, scratch);
    } catch (const Error&) {
      continue;
    }
    const double h = 1e-4;
    auto f = [&](double a, double b) { return p({a, b})[0]; };
    try {
      const double fx = (8 * (f(x + h, y) - f(x - h, y)) - (f(x + 2 * h, y) - f(x - 2 * h, y))) / (12 * h);
      const double fxy = (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4 * h * h);
      const double fyy = (f(x, y + h) - 2 * f(x, y) + f(x, y - h)) / (h * h);
      const double scale = 1.0 + std::abs(out.v) + std::abs(fx) + std::abs(fyy);
      CHECK(std::abs(out.d[0] - fx) <= 1e-5 * scale);
      CHECK(std::abs(out.hess(0, 1) - fxy) <= 1e-3 * scale);
      CHECK(std::abs(out.hess(1, 1) - fyy) <= 1e-3 * scale);
    } catch (const Error&) {
    }
  }
}

TEST_CASE("program domain errors name the subexpression") {
  const Program p({parse("x + sqrt(x - 2)")}, {"x"}, {});
  try {
    p({1.0});
    FAIL("expected a domain error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDomain);
    CHECK(std::string(e.what()).find("sqrt(x - 2)") != std::string::npos);
  }
  CHECK_THROWS_AS(Program({parse("x + w")}, {"x"}, {}), Error);
  CHECK_THROWS_AS(Program({parse("log(0)")}, {"x"}, {}), Error);
}
