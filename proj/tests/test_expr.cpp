#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mkv/expr.hpp"

using namespace mkv;

namespace {

const std::vector<std::string> kCoords = {"x", "y"};
const std::vector<std::string> kParams = {"a"};

double ev(const std::string& src, double x, double y, double a = 0.5) {
  const Expression e = parse_expression(src, kCoords, kParams);
  const double p[2] = {x, y};
  const double q[1] = {a};
  return e.eval_value(std::span<const double>(p, 2), std::span<const double>(q, 1));
}

Jet jet_of(const std::string& src, double x, double y, int order, double a = 0.5) {
  const Expression e = parse_expression(src, kCoords, kParams);
  const double p[2] = {x, y};
  const double q[1] = {a};
  return e.eval(std::span<const double>(p, 2), std::span<const double>(q, 1), order);
}

}  // namespace

TEST_CASE("precedence and associativity") {
  CHECK(ev("2+3*4", 0, 0) == doctest::Approx(14.0));
  CHECK(ev("2*3^2", 0, 0) == doctest::Approx(18.0));
  CHECK(ev("2^3^2", 0, 0) == doctest::Approx(512.0));   // right-associative power
  CHECK(ev("8/4/2", 0, 0) == doctest::Approx(1.0));     // left-associative division
  CHECK(ev("2-3-4", 0, 0) == doctest::Approx(-5.0));
  CHECK(ev("(2+3)*4", 0, 0) == doctest::Approx(20.0));
  // unary minus binds tighter than the caret: -x^2 is (-x)^2
  CHECK(ev("-x^2", 3, 0) == doctest::Approx(9.0));
  CHECK(ev("-(x^2)", 3, 0) == doctest::Approx(-9.0));
  CHECK(ev("--x", 3, 0) == doctest::Approx(3.0));
}

TEST_CASE("function library matches the standard library") {
  const double x = 0.7;
  CHECK(ev("exp(x)", x, 0) == doctest::Approx(std::exp(x)));
  CHECK(ev("log(x)", x, 0) == doctest::Approx(std::log(x)));
  CHECK(ev("sin(x)", x, 0) == doctest::Approx(std::sin(x)));
  CHECK(ev("cos(x)", x, 0) == doctest::Approx(std::cos(x)));
  CHECK(ev("tan(x)", x, 0) == doctest::Approx(std::tan(x)));
  CHECK(ev("sinh(x)", x, 0) == doctest::Approx(std::sinh(x)));
  CHECK(ev("cosh(x)", x, 0) == doctest::Approx(std::cosh(x)));
  CHECK(ev("tanh(x)", x, 0) == doctest::Approx(std::tanh(x)));
  CHECK(ev("sqrt(x)", x, 0) == doctest::Approx(std::sqrt(x)));
  CHECK(ev("a*x", 2, 0, 0.25) == doctest::Approx(0.5));
}

TEST_CASE("parse errors carry a position and an expectation") {
  try {
    parse_expression("x + q", kCoords, kParams);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.position == 4);
    CHECK(e.expected == "declared coordinate or parameter");
  }
  CHECK_THROWS_AS(parse_expression("x + ", kCoords, kParams), ParseError);
  CHECK_THROWS_AS(parse_expression("x 3", kCoords, kParams), ParseError);
  CHECK_THROWS_AS(parse_expression("sin x", kCoords, kParams), ParseError);
  CHECK_THROWS_AS(parse_expression("(x+1", kCoords, kParams), ParseError);
  CHECK_THROWS_AS(parse_expression("", kCoords, kParams), ParseError);
}

TEST_CASE("polynomial jets against hand derivatives") {
  // p = 3 x^2 y + y^3 - 2 x
  const Jet j = jet_of("3*x^2*y + y^3 - 2*x", 1.5, -0.5, 3);
  const double x = 1.5, y = -0.5;
  CHECK(j.value() == doctest::Approx(3 * x * x * y + y * y * y - 2 * x));
  CHECK(j.d(0) == doctest::Approx(6 * x * y - 2));
  CHECK(j.d(1) == doctest::Approx(3 * x * x + 3 * y * y));
  CHECK(j.d2(0, 0) == doctest::Approx(6 * y));
  CHECK(j.d2(0, 1) == doctest::Approx(6 * x));
  CHECK(j.d2(1, 1) == doctest::Approx(6 * y));
  CHECK(j.d3(0, 0, 0) == doctest::Approx(0.0));
  CHECK(j.d3(0, 0, 1) == doctest::Approx(6.0));
  CHECK(j.d3(0, 1, 1) == doctest::Approx(0.0));
  CHECK(j.d3(1, 1, 1) == doctest::Approx(6.0));
}

TEST_CASE("jet first and second partials agree with finite differences") {
  const std::string src = "exp(sin(x)*y) + sqrt(1 + x^2) * cos(y) + a*tanh(x*y)";
  const double x = 0.8, y = -0.6, h = 1e-5;
  const Jet j = jet_of(src, x, y, 2);
  auto f = [&](double xx, double yy) { return ev(src, xx, yy); };
  const double fdx = (f(x + h, y) - f(x - h, y)) / (2 * h);
  const double fdy = (f(x, y + h) - f(x, y - h)) / (2 * h);
  CHECK(j.d(0) == doctest::Approx(fdx).epsilon(1e-8));
  CHECK(j.d(1) == doctest::Approx(fdy).epsilon(1e-8));
  const double fdxx = (f(x + h, y) - 2 * f(x, y) + f(x - h, y)) / (h * h);
  const double fdxy =
      (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4 * h * h);
  CHECK(j.d2(0, 0) == doctest::Approx(fdxx).epsilon(1e-4));
  CHECK(j.d2(0, 1) == doctest::Approx(fdxy).epsilon(1e-4));
}

namespace {

Expression random_ast(std::mt19937& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 2 : 9);
  switch (pick(rng)) {
    case 0: {
      std::uniform_real_distribution<double> num(-4.0, 4.0);
      return Expression::number(num(rng));
    }
    case 1:
      return rng() % 2 ? Expression::coordinate(0, "x") : Expression::coordinate(1, "y");
    case 2:
      return Expression::parameter(0, "a");
    case 3:
      return Expression::neg(random_ast(rng, depth - 1));
    case 4:
      return Expression::add(random_ast(rng, depth - 1), random_ast(rng, depth - 1));
    case 5:
      return Expression::sub(random_ast(rng, depth - 1), random_ast(rng, depth - 1));
    case 6:
      return Expression::mul(random_ast(rng, depth - 1), random_ast(rng, depth - 1));
    case 7:
      return Expression::div(random_ast(rng, depth - 1), random_ast(rng, depth - 1));
    case 8:
      return Expression::pow(random_ast(rng, depth - 1), random_ast(rng, depth - 1));
    default: {
      const ExprFunc funcs[] = {ExprFunc::Exp,  ExprFunc::Log,  ExprFunc::Sin,
                                ExprFunc::Cos,  ExprFunc::Tan,  ExprFunc::Sinh,
                                ExprFunc::Cosh, ExprFunc::Tanh, ExprFunc::Sqrt};
      return Expression::call(funcs[rng() % 9], random_ast(rng, depth - 1));
    }
  }
}

}  // namespace

TEST_CASE("render round trip is structure preserving on random trees") {
  std::mt19937 rng(20260824);
  for (int iter = 0; iter < 300; ++iter) {
    const Expression e = random_ast(rng, 5);
    const std::string text = e.render();
    Expression back;
    REQUIRE_NOTHROW(back = parse_expression(text, kCoords, kParams));
    CHECK(e.same_structure(back));
    CHECK(back.render() == text);  // canonical form is a fixed point
  }
}

TEST_CASE("negative literals render back through the grammar") {
  const Expression e = Expression::pow(Expression::number(-2.0), Expression::number(3.0));
  const Expression back = parse_expression(e.render(), kCoords, kParams);
  CHECK(e.same_structure(back));
  CHECK(back.eval_value({}, {}) == doctest::Approx(-8.0));
}
