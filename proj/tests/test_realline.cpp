#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mkv/realline.hpp"

using namespace mkv;

TEST_CASE("linear component: constant factor, closed flow form") {
  RealLineProblem problem = make_realline_problem("x", std::nullopt, {0.5, 8.0});
  problem.x0 = 1.0;
  const Report r = realline_analyze(problem);
  CHECK(r.passed());
  CHECK(r.summary.at("f") == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(r.summary.at("c") == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(r.summary.at("c_prime") == doctest::Approx(0.0).epsilon(1e-10).scale(1.0));
  CHECK(r.summary.at("closed_form_residual") < 1e-6);
  CHECK(r.summary.at("defining_ode_residual") < 1e-12);
  // the halved-factor variant is reported but does not hold
  CHECK(r.summary.at("variant_convention_ode_residual") > 0.1);
}

TEST_CASE("flow along the linear component reproduces an exponential") {
  // dx/dt = x from x0 = 1 gives x(t) = e^t, so r(x(t))^2 = e^{2t} matches
  // (c/f) e^{ft} + c_prime with f = 2, c = 2, c_prime = 0.
  RealLineProblem problem = make_realline_problem("x", std::nullopt, {0.5, 8.0});
  problem.x0 = 1.0;
  const Report r = realline_analyze(problem);
  CHECK(r.summary.at("flow_t_form_residual") < 1e-10);
}

TEST_CASE("constant component degenerates to an isometry") {
  const Report r = realline_analyze(make_realline_problem("3", std::nullopt, {0.5, 2.0}));
  CHECK(r.passed());
  CHECK(r.summary.at("killing") == 1.0);
  CHECK_FALSE(r.warnings.empty());
}

TEST_CASE("explicit factor expression is honored") {
  RealLineProblem problem = make_realline_problem("x", std::optional<std::string>("2"), {0.5, 8.0});
  problem.x0 = 1.0;
  const Report r = realline_analyze(problem);
  CHECK(r.passed());
  CHECK(r.summary.at("defining_ode_residual") < 1e-12);
}

TEST_CASE("wrong explicit factor is flagged") {
  RealLineProblem problem = make_realline_problem("x", std::optional<std::string>("3"), {0.5, 8.0});
  problem.x0 = 1.0;
  const Report r = realline_analyze(problem);
  CHECK_FALSE(r.passed());
  CHECK(r.summary.at("defining_ode_residual") > 0.1);
}

TEST_CASE("flow leaving the interval fails with a warning") {
  RealLineProblem problem = make_realline_problem("x", std::nullopt, {0.5, 2.0});
  problem.x0 = 1.0;  // e^2 > 2, the flow exits
  const Report r = realline_analyze(problem);
  CHECK_FALSE(r.passed());
  bool mentioned = false;
  for (const auto& w : r.warnings) mentioned = mentioned || w.find("left the domain") != std::string::npos;
  CHECK(mentioned);
}

TEST_CASE("vanishing component is rejected") {
  CheckOptions at_one;
  at_one.point = std::vector<double>{1.0};
  CHECK_THROWS_AS(
      realline_analyze(make_realline_problem("x - 1", std::nullopt, {0.5, 2.0}), at_one),
      SpecError);
}

TEST_CASE("nonconstant factor falls back to pointwise reporting") {
  RealLineProblem problem = make_realline_problem("x^2", std::nullopt, {0.5, 1.2});
  problem.x0 = 0.6;
  problem.t_end = 0.5;
  const Report r = realline_analyze(problem);
  CHECK(r.summary.find("f") == r.summary.end());  // no aggregate factor
  CHECK(r.summary.at("defining_ode_residual") < 1e-12);
  bool has_pointwise = false;
  for (const auto& d : r.details) has_pointwise = has_pointwise || d.fitted.count("f") > 0;
  CHECK(has_pointwise);
}
