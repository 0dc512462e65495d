#pragma once

#include "mkv/manifold.hpp"
#include "mkv/report.hpp"

namespace mkv {

/// The one-dimensional model: V = r(x) d/dx on an interval with g = dx^2.
/// The canonical residual follows the defining second-order condition
/// componentwise, 2rr'' + 4r'^2 = 2fr'; a halved-factor variant of the same
/// equation circulates and is reported separately, never asserted.
struct RealLineProblem {
  Expression r;                 // parsed over the single coordinate "x"
  std::optional<Expression> f;  // fitted pointwise when absent
  std::pair<double, double> domain{0.5, 2.0};
  double x0 = 1.0;              // flow start
  double t_end = 2.0;
  double step = 1e-3;
};

RealLineProblem make_realline_problem(const std::string& r_src,
                                      const std::optional<std::string>& f_src,
                                      std::pair<double, double> domain = {0.5, 2.0});

Report realline_analyze(const RealLineProblem& problem, const CheckOptions& opt = {});

}  // namespace mkv
