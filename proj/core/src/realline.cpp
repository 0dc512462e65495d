#include "mkv/realline.hpp"

#include "mkv/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace mkv {
namespace {

struct RVals {
  double r, r1, r2;
};

RVals r_at(const Expression& r, double x) {
  const double p[1] = {x};
  const Jet j = r.eval(std::span<const double>(p, 1), {}, 2);
  return {j.value(), j.d(0), j.d2(0, 0)};
}

}  // namespace

RealLineProblem make_realline_problem(const std::string& r_src,
                                      const std::optional<std::string>& f_src,
                                      std::pair<double, double> domain) {
  const std::vector<std::string> coords = {"x"};
  const std::vector<std::string> params;
  RealLineProblem p;
  p.r = parse_expression(r_src, coords, params);
  if (f_src) p.f = parse_expression(*f_src, coords, params);
  p.domain = domain;
  p.x0 = 0.5 * (domain.first + domain.second);
  return p;
}

Report realline_analyze(const RealLineProblem& problem, const CheckOptions& opt) {
  const double tol = opt.tol.value_or(1e-6);
  ReportBuilder b("real-line", "flow-and-factor", tol);

  const auto [lo, hi] = problem.domain;
  if (!(hi > lo)) throw SpecError("real-line domain is empty");
  const double margin = 0.05 * (hi - lo);
  std::vector<double> xs;
  const int per_axis = std::max(2, opt.grid);
  for (int i = 0; i < per_axis; ++i)
    xs.push_back(lo + margin + (hi - lo - 2 * margin) * i / (per_axis - 1));
  std::mt19937 rng(kSampleSeed);
  std::uniform_real_distribution<double> uni(lo + margin, hi - margin);
  for (int i = 0; i < kRandomSamples; ++i) xs.push_back(uni(rng));
  if (opt.point && !opt.point->empty()) xs = {opt.point->front()};

  auto f_at = [&](double x, const RVals& v) -> std::optional<double> {
    if (problem.f) {
      const double p[1] = {x};
      return problem.f->eval_value(std::span<const double>(p, 1), {});
    }
    if (std::abs(v.r1) < 1e-10) return std::nullopt;  // Killing-degenerate
    return (2.0 * v.r * v.r2 + 4.0 * v.r1 * v.r1) / (2.0 * v.r1);
  };

  bool killing = true;
  double f_lo = 1e300, f_hi = -1e300, f_sum = 0.0;
  int f_cnt = 0;
  double def_res = 0.0, var_res = 0.0;
  for (double x : xs) {
    const RVals v = r_at(problem.r, x);
    if (std::abs(v.r) < 1e-10) throw SpecError("r vanishes on the domain");
    if (std::abs(v.r1) > 1e-10) killing = false;
    const auto f = f_at(x, v);
    double res = 0.0;
    if (f) {
      const double lhs = 2.0 * v.r * v.r2 + 4.0 * v.r1 * v.r1;
      const double rhs = 2.0 * *f * v.r1;
      res = relative_residual(std::abs(lhs - rhs), std::max(std::abs(lhs), std::abs(rhs)));
      def_res = std::max(def_res, res);
      var_res = std::max(var_res,
                         relative_residual(std::abs(v.r * v.r2 + 2.0 * v.r1 * v.r1 - rhs),
                                           std::max(std::abs(lhs), std::abs(rhs))));
      f_lo = std::min(f_lo, *f);
      f_hi = std::max(f_hi, *f);
      f_sum += *f;
      ++f_cnt;
      b.add_point({x}, res, {{"f", *f}});
    } else {
      b.add_point({x}, 0.0);
    }
  }

  if (killing) {
    b.warn("r' = 0 on the domain: the field is Killing and the factor is undefined");
    b.set_summary("killing", 1.0);
    return b.finish(true);
  }
  const double f_mean = f_cnt ? f_sum / f_cnt : 0.0;
  const bool f_const = f_cnt > 0 && (f_hi - f_lo) < 1e-6 * (1.0 + std::abs(f_mean));
  if (f_const) b.set_summary("f", f_mean);
  b.set_summary("defining_ode_residual", def_res);
  b.set_summary("variant_convention_ode_residual", var_res);

  // Flow integration dx/dt = r(x), fixed-step RK4.
  double x0 = problem.x0;
  if (x0 <= lo || x0 >= hi) x0 = 0.5 * (lo + hi);
  const RVals v0 = r_at(problem.r, x0);
  const double c = 2.0 * v0.r * v0.r * v0.r1;  // 2 r^2 r' at t = 0
  double t_form_res = 0.0, var_t_res = 0.0, closed_res = 0.0;
  bool left_domain = false;
  double x = x0, t = 0.0;
  const auto rv = [&](double xx) { return r_at(problem.r, xx).r; };
  const int steps = static_cast<int>(std::ceil(problem.t_end / problem.step));
  for (int i = 0; i <= steps; ++i) {
    if (x <= lo || x >= hi) {
      left_domain = true;
      b.warn("flow left the domain at t = " + std::to_string(t));
      break;
    }
    const RVals v = r_at(problem.r, x);
    const auto f = f_at(x, v);
    const double rdot = v.r1 * v.r;
    const double rddot = (v.r2 * v.r + v.r1 * v.r1) * v.r;
    if (f) {
      const double lhs = v.r * rddot + rdot * rdot;
      const double rhs = *f * v.r * rdot;
      t_form_res = std::max(t_form_res, relative_residual(std::abs(lhs - rhs),
                                                          std::max(std::abs(lhs), std::abs(rhs))));
      var_t_res = std::max(
          var_t_res, relative_residual(std::abs(v.r * rddot + rdot - 2.0 * *f * v.r * rdot),
                                       std::max(std::abs(lhs), std::abs(rhs))));
      if (f_const && std::abs(f_mean) > 1e-10) {
        const double cprime = v0.r * v0.r - c / f_mean;
        const double closed = c / f_mean * std::exp(f_mean * t) + cprime;
        closed_res = std::max(closed_res, relative_residual(std::abs(v.r * v.r - closed),
                                                            std::abs(closed)));
      }
    }
    if (i == steps) break;
    const double hstep = problem.step;
    const double k1 = v.r;
    const double k2 = rv(x + 0.5 * hstep * k1);
    const double k3 = rv(x + 0.5 * hstep * k2);
    const double k4 = rv(x + hstep * k3);
    x += hstep / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += hstep;
  }
  b.set_summary("c", c);
  if (f_const && std::abs(f_mean) > 1e-10)
    b.set_summary("c_prime", v0.r * v0.r - c / f_mean);
  b.set_summary("flow_t_form_residual", t_form_res);
  b.set_summary("variant_convention_t_form_residual", var_t_res);
  if (f_const && std::abs(f_mean) > 1e-10) b.set_summary("closed_form_residual", closed_res);

  const bool pass = def_res < tol && t_form_res < tol && closed_res < tol && !left_domain;
  return b.finish(pass);
}

}  // namespace mkv
