#include "mkv/killing.hpp"

#include <algorithm>
#include <cmath>

namespace mkv {
namespace {

constexpr double kKillingEps = 1e-8;

std::vector<std::vector<double>> check_points(const ManifoldSpec& spec, const CheckOptions& opt) {
  if (opt.point) {
    if (static_cast<int>(opt.point->size()) != spec.dim)
      throw SpecError("point has wrong dimension for '" + spec.name + "'");
    return {*opt.point};
  }
  return sample_points(spec, opt.grid);
}

Vec apply(const Nd<2>& a, const Vec& v) {
  const int n = a.extent();
  Vec r(static_cast<size_t>(n), 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) r[static_cast<size_t>(i)] += a(i, j) * v[static_cast<size_t>(j)];
  return r;
}

double bnorm(const GeometryCache& geo, const Nd<2>& s) {
  return std::sqrt(std::max(geo.norm2_bilinear(s), 0.0));
}

/// Conformal factor of L_Vg against 2g: the g-projection coefficient
/// tr_g(L_Vg)/(2n), plus the residual of L_Vg - 2*lambda*g.
struct ConformalFit {
  double lambda = 0.0;
  double residual = 0.0;
};
ConformalFit conformal_fit(const GeometryCache& geo, const Nd<2>& lie) {
  const int n = geo.n;
  ConformalFit out;
  double tr = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) tr += geo.ginv(i, j) * lie(i, j);
  out.lambda = tr / (2.0 * n);
  Nd<2> dev(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) dev(i, j) = lie(i, j) - 2.0 * out.lambda * geo.g(i, j);
  out.residual = relative_residual(bnorm(geo, dev), bnorm(geo, lie));
  return out;
}

double lambda_at(const ManifoldSpec& spec, const std::vector<Expression>& comps, const Vec& p) {
  const GeometryCache geo = geometry_at(spec, p);
  const FieldJets v = field_jets(spec, comps, p, 2);
  return conformal_fit(geo, lie_derivative_metric(geo, v)).lambda;
}

}  // namespace

const char* field_class_name(FieldClass c) {
  switch (c) {
    case FieldClass::Killing: return "KILLING";
    case FieldClass::TwoKilling: return "TWO_KILLING";
    case FieldClass::Homothetic: return "HOMOTHETIC";
    case FieldClass::Conformal: return "CONFORMAL";
    case FieldClass::MixedKilling: return "MIXED_KILLING";
    case FieldClass::None: return "NONE";
  }
  return "?";
}

FactorFit estimate_factor(const GeometryCache& geo, const FieldJets& v, double eps) {
  FactorFit out;
  const Nd<2> lie = lie_derivative_metric(geo, v);
  const double n2 = geo.norm2_bilinear(lie);
  if (std::sqrt(std::max(n2, 0.0)) < eps) return out;  // Killing-degenerate
  const Nd<2> lie2 = second_lie_derivative_metric(geo, v);
  out.f = geo.inner_bilinear(lie2, lie) / n2;
  Nd<2> dev(geo.n);
  for (int i = 0; i < geo.n; ++i)
    for (int j = 0; j < geo.n; ++j) dev(i, j) = lie2(i, j) - out.f * lie(i, j);
  out.residual = relative_residual(bnorm(geo, dev), bnorm(geo, lie2));
  out.defined = true;
  return out;
}

KillingReport classify_components(const ManifoldSpec& spec, const std::vector<Expression>& comps,
                                  const std::string& display_name, const CheckOptions& opt) {
  if (comps.size() != static_cast<size_t>(spec.dim))
    throw SpecError("field '" + display_name + "' has wrong component count");
  const double proj_tol = opt.tol.value_or(1e-7);
  ReportBuilder b(spec.name, "field-classification", proj_tol);

  struct PointData {
    Vec p;
    double lie_norm, lie2_norm;
    ConformalFit conf;
    FactorFit fit;
  };
  std::vector<PointData> pts;
  for (const auto& p : check_points(spec, opt)) {
    try {
      const GeometryCache geo = geometry_at(spec, p);
      const FieldJets v = field_jets(spec, comps, p, 2);
      PointData d;
      d.p = p;
      const Nd<2> lie = lie_derivative_metric(geo, v);
      d.lie_norm = bnorm(geo, lie);
      d.lie2_norm = bnorm(geo, second_lie_derivative_metric(geo, v));
      d.conf = conformal_fit(geo, lie);
      d.fit = estimate_factor(geo, v);
      pts.push_back(std::move(d));
    } catch (const SpecError&) {
      throw;
    } catch (const std::exception& e) {
      b.note_failure(p, e.what());
    }
  }
  if (pts.empty()) throw SpecError("no evaluable sample points for '" + display_name + "'");

  KillingReport out;
  out.field = display_name;
  for (const auto& d : pts) {
    out.max_lie_norm = std::max(out.max_lie_norm, d.lie_norm);
    out.max_second_lie_norm = std::max(out.max_second_lie_norm, d.lie2_norm);
    if (d.fit.defined)
      out.max_projection_residual = std::max(out.max_projection_residual, d.fit.residual);
  }

  const bool all_conformal =
      std::all_of(pts.begin(), pts.end(), [&](const PointData& d) { return d.conf.residual < proj_tol; });
  auto factor_stats = [&](auto get) {
    double lo = 1e300, hi = -1e300, sum = 0.0;
    int cnt = 0;
    for (const auto& d : pts) {
      const auto v = get(d);
      if (!v) continue;
      lo = std::min(lo, *v);
      hi = std::max(hi, *v);
      sum += *v;
      ++cnt;
    }
    struct S { double mean, spread; int cnt; };
    return S{cnt ? sum / cnt : 0.0, cnt ? hi - lo : 0.0, cnt};
  };

  if (out.max_lie_norm < kKillingEps) {
    out.classification = FieldClass::Killing;
    out.mixed = true;  // vacuously: both sides of the defining condition vanish
  } else if (out.max_second_lie_norm < kKillingEps) {
    out.classification = FieldClass::TwoKilling;
    out.mixed = false;
  } else if (all_conformal) {
    const auto s = factor_stats([](const PointData& d) { return std::optional<double>(d.conf.lambda); });
    if (s.spread < 1e-6 * (1.0 + std::abs(s.mean))) {
      out.classification = FieldClass::Homothetic;
      out.f = 2.0 * s.mean;
      out.f_constant = true;
      out.mixed = std::abs(out.f) > 1e-6;
    } else {
      out.classification = FieldClass::Conformal;
      // Mixed iff lambda is constant along the flow; lambda is a derived
      // quantity, so V(lambda) is taken by central differences along V.
      bool flow_constant = true;
      for (const auto& d : pts) {
        const double step = 1e-5;
        const FieldJets v = field_jets(spec, comps, d.p, 0);
        Vec pp = d.p, pm = d.p;
        for (int i = 0; i < spec.dim; ++i) {
          pp[static_cast<size_t>(i)] += step * v.value(i);
          pm[static_cast<size_t>(i)] -= step * v.value(i);
        }
        double vlam;
        try {
          vlam = (lambda_at(spec, comps, pp) - lambda_at(spec, comps, pm)) / (2.0 * step);
        } catch (const std::exception&) {
          continue;  // probe left the evaluable region
        }
        if (std::abs(vlam) > 1e-6 * (1.0 + std::abs(d.conf.lambda))) {
          flow_constant = false;
          break;
        }
      }
      out.mixed = flow_constant;
      const auto fs = factor_stats([](const PointData& d) {
        return d.fit.defined ? std::optional<double>(d.fit.f) : std::nullopt;
      });
      out.f = fs.mean;
      out.f_constant = fs.spread < 1e-6 * (1.0 + std::abs(fs.mean));
    }
  } else {
    const bool projected = std::all_of(pts.begin(), pts.end(), [&](const PointData& d) {
      return !d.fit.defined || d.fit.residual < proj_tol;
    });
    const auto fs = factor_stats([](const PointData& d) {
      return d.fit.defined ? std::optional<double>(d.fit.f) : std::nullopt;
    });
    out.f = fs.mean;
    out.f_constant = fs.cnt > 0 && fs.spread < 1e-6 * (1.0 + std::abs(fs.mean));
    if (projected && fs.cnt > 0) {
      bool nonzero_f = false;
      for (const auto& d : pts)
        if (d.fit.defined && std::abs(d.fit.f) > 1e-6) nonzero_f = true;
      if (nonzero_f) {
        out.classification = FieldClass::MixedKilling;
        out.mixed = true;
      } else {
        out.classification = FieldClass::TwoKilling;
      }
    } else {
      out.classification = FieldClass::None;
    }
  }
  if (out.classification == FieldClass::Homothetic && out.mixed) out.f_constant = true;

  for (const auto& d : pts) {
    std::map<std::string, double> fitted;
    if (d.fit.defined) fitted["f"] = d.fit.f;
    fitted["lie_norm"] = d.lie_norm;
    b.add_point(d.p, d.fit.defined ? d.fit.residual : 0.0, std::move(fitted));
  }
  b.set_summary("max_lie_norm", out.max_lie_norm);
  b.set_summary("max_second_lie_norm", out.max_second_lie_norm);
  if (out.f_constant) b.set_summary("f", out.f);
  b.set_summary("mixed", out.mixed ? 1.0 : 0.0);
  out.report = b.finish(out.classification != FieldClass::None);
  out.report.summary["classification"] = static_cast<double>(out.classification);
  return out;
}

KillingReport classify_field(const ManifoldSpec& spec, const std::string& field_name,
                             const CheckOptions& opt) {
  return classify_components(spec, spec.field(field_name), field_name, opt);
}

double curvature_criterion_vector(const GeometryCache& geo, const FieldJets& v, double f,
                                  const Vec& y) {
  const int n = geo.n;
  const Vec vv = v.values();
  const Nd<2> a = covariant_derivative_vector(geo, v);
  const Nd<2> phi = twist_operator(geo, v);
  const Vec ndv = apply(a, y);          // nabla_Y V
  const Vec phiy = apply(phi, y);
  Vec lhs(static_cast<size_t>(n), 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          lhs[static_cast<size_t>(l)] += 2.0 * geo.riemann(i, j, k, l) * vv[static_cast<size_t>(i)] *
                                         y[static_cast<size_t>(j)] * vv[static_cast<size_t>(k)];
  const Vec t1 = nabla_x_nabla_vv(geo, v, y);       // nabla_Y nabla_V V
  const Vec t2 = apply(a, ndv);                     // nabla_{nabla_Y V} V
  const Vec t3 = apply(phi, ndv);
  const Vec t4 = apply(phi, phiy);
  const Vec t5 = apply(a, phiy);                    // nabla_{phi Y} V
  double worst = 0.0, scale = 0.0;
  for (int l = 0; l < n; ++l) {
    const size_t s = static_cast<size_t>(l);
    const double rhs = 2.0 * f * ndv[s] + f * phiy[s] - 2.0 * t1[s] - 2.0 * t2[s] - 3.0 * t3[s] -
                       t4[s] - t5[s];
    scale = std::max(scale, std::max(std::abs(lhs[s]), std::abs(rhs)));
    worst = std::max(worst, std::abs(lhs[s] - rhs));
  }
  return relative_residual(worst, scale);
}

double curvature_criterion_scalar(const GeometryCache& geo, const FieldJets& v, double f,
                                  const Vec& y) {
  const int n = geo.n;
  const Vec vv = v.values();
  const Nd<2> a = covariant_derivative_vector(geo, v);
  const Vec ndv = apply(a, y);
  double lhs = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          lhs += geo.riemann_low(i, j, k, l) * y[static_cast<size_t>(i)] *
                 vv[static_cast<size_t>(j)] * vv[static_cast<size_t>(k)] * y[static_cast<size_t>(l)];
  const Vec t1 = nabla_x_nabla_vv(geo, v, y);
  auto gdot = [&](const Vec& x, const Vec& z) {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        s += geo.g(i, j) * x[static_cast<size_t>(i)] * z[static_cast<size_t>(j)];
    return s;
  };
  const double rhs = gdot(t1, y) + gdot(ndv, ndv) - f * gdot(ndv, y);
  return relative_residual(std::abs(lhs - rhs), std::max(std::abs(lhs), std::abs(rhs)));
}

double bochner_integrand(const GeometryCache& geo, const FieldJets& v, double f) {
  const int n = geo.n;
  const Vec vv = v.values();
  double ric = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      ric += geo.ricci(i, j) * vv[static_cast<size_t>(i)] * vv[static_cast<size_t>(j)];
  const VectorWithDerivs acc = acceleration_field(geo, v);
  double div_acc = 0.0;
  for (int i = 0; i < n; ++i) {
    div_acc += acc.deriv(i, i);
    for (int k = 0; k < n; ++k) div_acc += geo.gamma(i, i, k) * acc.value[static_cast<size_t>(k)];
  }
  const double terms = ric - div_acc - norm2_covariant_derivative(geo, v) + f * divergence(geo, v);
  return relative_residual(std::abs(terms),
                           std::abs(ric) + std::abs(div_acc) + norm2_covariant_derivative(geo, v));
}

Report curvature_criteria_check(const ManifoldSpec& spec, const std::vector<Expression>& comps,
                                const std::string& display_name, double f,
                                const CheckOptions& opt) {
  if (comps.size() != static_cast<size_t>(spec.dim))
    throw SpecError("field '" + display_name + "' has wrong component count");
  const double tol = opt.tol.value_or(1e-8);
  ReportBuilder b(spec.name, "curvature-criteria", tol);
  double worst_vec = 0.0, worst_scal = 0.0, worst_int = 0.0;
  for (const auto& p : check_points(spec, opt)) {
    try {
      const GeometryCache geo = geometry_at(spec, p);
      const FieldJets v = field_jets(spec, comps, p, 2);
      double rv = 0.0, rs = 0.0;
      for (int j = 0; j < geo.n; ++j) {
        Vec y(static_cast<size_t>(geo.n), 0.0);
        y[static_cast<size_t>(j)] = 1.0;
        rv = std::max(rv, curvature_criterion_vector(geo, v, f, y));
        rs = std::max(rs, curvature_criterion_scalar(geo, v, f, y));
      }
      const double ri = bochner_integrand(geo, v, f);
      worst_vec = std::max(worst_vec, rv);
      worst_scal = std::max(worst_scal, rs);
      worst_int = std::max(worst_int, ri);
      b.add_point(p, std::max({rv, rs, ri}),
                  {{"vector_criterion", rv}, {"scalar_criterion", rs}, {"integrand", ri}});
    } catch (const SpecError&) {
      throw;
    } catch (const std::exception& e) {
      b.note_failure(p, e.what());
    }
  }
  b.set_summary("f", f);
  b.set_summary("max_vector_criterion", worst_vec);
  b.set_summary("max_scalar_criterion", worst_scal);
  b.set_summary("max_integrand", worst_int);
  return b.finish();
}

Report conformal_change_check(const ManifoldSpec& spec, const std::string& field_name,
                              const Expression& rho, const CheckOptions& opt) {
  const auto& comps = spec.field(field_name);
  const double tol = opt.tol.value_or(1e-8);
  ReportBuilder b(spec.name, "conformal-rescaling-invariance", tol);

  const KillingReport base = classify_components(spec, comps, field_name, opt);
  if (!base.mixed || !base.f_constant)
    throw SpecError("field '" + field_name + "' must satisfy the second-order condition with a "
                    "constant factor before rescaling");
  const double f = base.f;

  const auto pvals = spec.parameter_values();
  bool identity_holds = true;
  for (const auto& p : check_points(spec, opt)) {
    try {
      const Jet rj = rho.eval(p, pvals, 2);
      if (rj.value() <= 0.0) throw SpecError("conformal factor must stay positive on the domain");
      const GeometryCache geo = geometry_at(spec, p);
      const FieldJets v = field_jets(spec, comps, p, 2);
      const int n = geo.n;
      double vrho = 0.0;
      for (int i = 0; i < n; ++i) vrho += v.value(i) * rj.d(i);
      double vvrho = 0.0;  // V(V rho) = V^j d_j (V^i d_i rho)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
          vvrho += v.value(j) * (v.d(i, j) * rj.d(i) + v.value(i) * rj.d2(i, j));
      const Nd<2> lie = lie_derivative_metric(geo, v);
      Nd<2> dev(n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          dev(i, j) = 2.0 * vrho * lie(i, j) - (f * vrho - vvrho) * geo.g(i, j);
      const double res = relative_residual(
          bnorm(geo, dev), std::abs(vrho) * bnorm(geo, lie) + std::abs(f * vrho - vvrho));
      if (res >= tol) identity_holds = false;
      b.add_point(p, res, {{"v_rho", vrho}});
    } catch (const SpecError&) {
      throw;
    } catch (const std::exception& e) {
      b.note_failure(p, e.what());
    }
  }

  ManifoldSpec scaled = spec;
  scaled.name = spec.name + "-rescaled";
  for (int i = 0; i < spec.dim; ++i)
    for (int j = 0; j < spec.dim; ++j)
      scaled.metric[static_cast<size_t>(i)][static_cast<size_t>(j)] = Expression::mul(
          rho, spec.metric[static_cast<size_t>(i)][static_cast<size_t>(j)]);
  CheckOptions copt = opt;
  copt.tol.reset();
  const KillingReport rescaled = classify_components(scaled, comps, field_name, copt);

  b.set_summary("identity_holds", identity_holds ? 1.0 : 0.0);
  b.set_summary("rescaled_mixed", rescaled.mixed ? 1.0 : 0.0);
  b.set_summary("f", f);
  const bool agree = identity_holds == rescaled.mixed;
  if (!agree) b.warn("invariance identity disagrees with direct reclassification");
  return b.finish(agree);
}

Report reeb_mixed_killing_check(const ManifoldSpec& spec, const CheckOptions& opt) {
  require_structure(spec);
  const double tol = opt.tol.value_or(1e-7);
  ReportBuilder b(spec.name, "reeb-field-analysis", tol);

  double max_h = 0.0, max_factor_identity = 0.0;
  for (const auto& p : check_points(spec, opt)) {
    try {
      const StructureAtPoint s = structure_at(spec, p);
      const int n = s.geo.n;
      const Nd<2> lie = lie_derivative_metric(s.geo, s.xi);
      const Nd<2> lie2 = second_lie_derivative_metric(s.geo, s.xi);
      max_h = std::max(max_h, s.h.max_abs());

      // (L_xi g)(X,Y) = 2 g(h'X, Y)
      double r1 = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double rhs = 0.0;
          for (int m = 0; m < n; ++m) rhs += 2.0 * s.geo.g(j, m) * s.hprime(m, i);
          r1 = std::max(r1, std::abs(lie(i, j) - rhs));
        }
      r1 = relative_residual(r1, lie.max_abs());

      // (L_xi L_xi g)(X,Y) = 4 g(h^2 X, Y) + 2 g((nabla_xi h')X, Y)
      const Nd<2> nxh = s.nabla_along_xi(s.hprime, s.dhprime);
      double r2 = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double rhs = 0.0;
          for (int m = 0; m < n; ++m) {
            double h2mi = 0.0;
            for (int k = 0; k < n; ++k) h2mi += s.h(m, k) * s.h(k, i);
            rhs += s.geo.g(j, m) * (4.0 * h2mi + 2.0 * nxh(m, i));
          }
          r2 = std::max(r2, std::abs(lie2(i, j) - rhs));
        }
      r2 = relative_residual(r2, lie2.max_abs());

      const FactorFit fit = estimate_factor(s.geo, s.xi);
      if (fit.defined && fit.residual < tol) {
        // nabla_xi h' = f h' - 2 h^2 and R(Y,xi)xi = -f h phi Y + h^2 Y
        const Vec xiv = s.xi.values();
        double d = 0.0;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            double h2 = 0.0, hphi = 0.0;
            for (int k = 0; k < n; ++k) {
              h2 += s.h(i, k) * s.h(k, j);
              hphi += s.h(i, k) * s.phi(k, j);
            }
            d = std::max(d, std::abs(nxh(i, j) - fit.f * s.hprime(i, j) + 2.0 * h2));
            double curv = 0.0;  // (R(e_j, xi) xi)^i
            for (int a = 0; a < n; ++a)
              for (int k = 0; k < n; ++k)
                curv += s.geo.riemann(j, a, k, i) * xiv[static_cast<size_t>(a)] *
                        xiv[static_cast<size_t>(k)];
            d = std::max(d, std::abs(curv + fit.f * hphi - h2));
          }
        max_factor_identity = std::max(max_factor_identity, d);
      }
      b.add_point(p, std::max(r1, r2));
    } catch (const SpecError&) {
      throw;
    } catch (const std::exception& e) {
      b.note_failure(p, e.what());
    }
  }

  const KillingReport cls = classify_components(spec, spec.structure->xi, "xi", opt);
  const bool h_zero = max_h < 1e-8;
  const bool reeb_mixed = cls.classification == FieldClass::Killing ||
                          (cls.mixed && cls.max_lie_norm < 1e-8);
  b.set_summary("max_h", max_h);
  b.set_summary("classification", static_cast<double>(cls.classification));
  b.set_summary("mixed", cls.mixed ? 1.0 : 0.0);
  b.set_summary("factor_identity_residual", max_factor_identity);
  const bool equivalence = (h_zero == reeb_mixed);
  if (!equivalence) b.warn("h = 0 equivalence violated");
  Report rep = b.finish();
  if (rep.verdict == Verdict::Pass && (!equivalence || max_factor_identity >= tol))
    rep.verdict = Verdict::Fail;
  return rep;
}

Report two_killing_reeb_check(const ManifoldSpec& spec, const CheckOptions& opt) {
  require_structure(spec);
  const double tol = opt.tol.value_or(1e-8);
  ReportBuilder b(spec.name, "second-order-reeb-criterion", tol);
  double max_lie2 = 0.0, max_crit = 0.0;
  for (const auto& p : check_points(spec, opt)) {
    try {
      const StructureAtPoint s = structure_at(spec, p);
      const int n = s.geo.n;
      const Nd<2> lie2 = second_lie_derivative_metric(s.geo, s.xi);
      max_lie2 = std::max(max_lie2, lie2.max_abs());
      const Nd<2> nxh = s.nabla_along_xi(s.h, s.dh);
      double crit = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double phih2 = 0.0;
          for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) phih2 += s.phi(i, k) * s.h(k, l) * s.h(l, j);
          crit = std::max(crit, std::abs(nxh(i, j) + 2.0 * phih2));
        }
      max_crit = std::max(max_crit, crit);
      b.add_point(p, 0.0, {{"second_lie_norm", lie2.max_abs()}, {"criterion_norm", crit}});
    } catch (const SpecError&) {
      throw;
    } catch (const std::exception& e) {
      b.note_failure(p, e.what());
    }
  }
  const bool two_killing = max_lie2 < tol;
  const bool criterion = max_crit < tol;
  b.set_summary("max_second_lie_norm", max_lie2);
  b.set_summary("max_criterion_norm", max_crit);
  if (two_killing != criterion) b.warn("second-order criterion disagrees with the direct computation");
  return b.finish(two_killing == criterion);
}

Report collinear_field_check(const ManifoldSpec& spec, const Expression& alpha,
                             const CheckOptions& opt, const std::optional<Expression>& factor) {
  require_structure(spec);
  const double tol = opt.tol.value_or(1e-7);
  ReportBuilder b(spec.name, "collinear-field-conditions", tol);
  const auto pvals = spec.parameter_values();

  double max_o1 = 0.0, max_o2 = 0.0;
  for (const auto& p : check_points(spec, opt)) {
    try {
      const StructureAtPoint s = structure_at(spec, p);
      const int n = s.geo.n;
      const Jet aj = alpha.eval(p, pvals, 1);
      const double a = aj.value();
      if (std::abs(a) < 1e-12) throw SpecError("alpha vanishes at a sample point");
      Vec da(static_cast<size_t>(n));
      for (int i = 0; i < n; ++i) da[static_cast<size_t>(i)] = aj.d(i);
      const Vec grad = s.geo.raise(da);
      const Vec xiv = s.xi.values();
      double xia = 0.0;
      for (int i = 0; i < n; ++i) xia += xiv[static_cast<size_t>(i)] * da[static_cast<size_t>(i)];

      const Nd<2> nxh = s.nabla_along_xi(s.h, s.dh);
      double o1 = 0.0, o1_scale = 0.0;
      for (int j = 0; j < n; ++j) {  // probe X = e_j
        double phixa = 0.0;          // (phi X) alpha
        for (int i = 0; i < n; ++i) phixa += da[static_cast<size_t>(i)] * s.phi(i, j);
        for (int l = 0; l < n; ++l) {
          const double lhs = a * a * nxh(l, j);
          const double rhs =
              phixa * (grad[static_cast<size_t>(l)] - xia * xiv[static_cast<size_t>(l)]);
          o1_scale = std::max(o1_scale, std::max(std::abs(lhs), std::abs(rhs)));
          o1 = std::max(o1, std::abs(lhs - rhs));
        }
      }
      o1 = relative_residual(o1, o1_scale);

      double gradn2 = 0.0;
      for (int i = 0; i < n; ++i)
        gradn2 += grad[static_cast<size_t>(i)] * da[static_cast<size_t>(i)];
      const double o2_lhs = xia * xia;
      const double o2_rhs = gradn2 + a * a * s.tr_h2;
      const double o2 = relative_residual(std::abs(o2_lhs - o2_rhs),
                                          std::max(std::abs(o2_lhs), std::abs(o2_rhs)));

      std::map<std::string, double> fitted = {{"vector_condition", o1}, {"scalar_condition", o2}};
      if (factor) {
        // alpha^2 (nabla_xi h)X = alpha^2 phi h^2 X + alpha(f + alpha - xi alpha) h X,
        // the reduced form when alpha varies along xi only.
        const double f = factor->eval_value(p, pvals);
        double red = 0.0, red_scale = 0.0;
        for (int j = 0; j < n; ++j)
          for (int l = 0; l < n; ++l) {
            double phih2 = 0.0, hx = s.h(l, j);
            for (int k = 0; k < n; ++k)
              for (int m = 0; m < n; ++m) phih2 += s.phi(l, k) * s.h(k, m) * s.h(m, j);
            const double lhs = a * a * nxh(l, j);
            const double rhs = a * a * phih2 + a * (f + a - xia) * hx;
            red_scale = std::max(red_scale, std::max(std::abs(lhs), std::abs(rhs)));
            red = std::max(red, std::abs(lhs - rhs));
          }
        fitted["reduced_condition"] = relative_residual(red, red_scale);
      }
      max_o1 = std::max(max_o1, o1);
      max_o2 = std::max(max_o2, o2);
      b.add_point(p, std::max(o1, o2), std::move(fitted));
    } catch (const SpecError&) {
      throw;
    } catch (const std::exception& e) {
      b.note_failure(p, e.what());
    }
  }

  std::vector<Expression> comps;
  for (int i = 0; i < spec.dim; ++i)
    comps.push_back(Expression::mul(alpha, spec.structure->xi[static_cast<size_t>(i)]));
  CheckOptions copt = opt;
  copt.tol.reset();
  const KillingReport cls = classify_components(spec, comps, "alpha*xi", copt);
  b.set_summary("classification", static_cast<double>(cls.classification));
  b.set_summary("mixed", cls.mixed ? 1.0 : 0.0);
  b.set_summary("max_vector_condition", max_o1);
  b.set_summary("max_scalar_condition", max_o2);
  // Necessity: a mixed Killing alpha*xi must satisfy both conditions.
  const bool necessity_ok = !cls.mixed || (max_o1 < tol && max_o2 < tol);
  if (!necessity_ok) b.warn("field satisfies the second-order condition but violates the necessary pair");
  return b.finish(necessity_ok);
}

ContactTransformFit contact_transformation_check(const ManifoldSpec& spec,
                                                 const std::string& field_name,
                                                 const CheckOptions& opt) {
  require_structure(spec);
  const double tol = opt.tol.value_or(1e-7);
  ReportBuilder b(spec.name, "contact-transformation-fit", tol);
  ContactTransformFit out;
  const auto& comps = spec.field(field_name);
  const auto pvals = spec.parameter_values();

  auto lie_eta_at = [&](const Vec& p, const StructureAtPoint& s) {
    const FieldJets v = field_jets(spec, comps, p, 1);
    const int n = s.geo.n;
    Vec lv(static_cast<size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
      double t = 0.0;
      for (int j = 0; j < n; ++j)
        t += v.value(j) * s.deta_full(j, i) + s.eta[static_cast<size_t>(j)] * v.d(j, i);
      lv[static_cast<size_t>(i)] = t;
    }
    return lv;
  };
  auto sigma_at = [&](const Vec& p) {
    const StructureAtPoint s = structure_at(spec, p);
    const Vec lv = lie_eta_at(p, s);
    const int n = s.geo.n;
    double num = 0.0, den = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        num += s.geo.ginv(i, j) * lv[static_cast<size_t>(i)] * s.eta[static_cast<size_t>(j)];
        den += s.geo.ginv(i, j) * s.eta[static_cast<size_t>(i)] * s.eta[static_cast<size_t>(j)];
      }
    return num / den;
  };

  double sum_sigma = 0.0, lo = 1e300, hi = -1e300;
  int count = 0;
  double max_h = 0.0, max_grad_dev = 0.0;
  for (const auto& p : check_points(spec, opt)) {
    try {
      const StructureAtPoint s = structure_at(spec, p);
      const int n = s.geo.n;
      max_h = std::max(max_h, s.h.max_abs());
      const Vec lv = lie_eta_at(p, s);
      const double sigma = sigma_at(p);
      double dev = 0.0;
      for (int i = 0; i < n; ++i)
        dev = std::max(dev, std::abs(lv[static_cast<size_t>(i)] -
                                     sigma * s.eta[static_cast<size_t>(i)]));
      const double res = relative_residual(dev, max_abs(lv));
      out.residual = std::max(out.residual, res);
      sum_sigma += sigma;
      lo = std::min(lo, sigma);
      hi = std::max(hi, sigma);
      ++count;

      if (res < tol) {
        // grad sigma = (xi sigma) xi, with sigma differentiated numerically.
        const double step = 1e-5;
        Vec ds(static_cast<size_t>(n));
        bool ok = true;
        for (int i = 0; i < n; ++i) {
          Vec pp = p, pm = p;
          pp[static_cast<size_t>(i)] += step;
          pm[static_cast<size_t>(i)] -= step;
          try {
            ds[static_cast<size_t>(i)] = (sigma_at(pp) - sigma_at(pm)) / (2.0 * step);
          } catch (const std::exception&) {
            ok = false;
            break;
          }
        }
        if (ok && max_h < 1e-8) {
          const Vec grad = s.geo.raise(ds);
          const Vec xiv = s.xi.values();
          double xis = 0.0;
          for (int i = 0; i < n; ++i) xis += xiv[static_cast<size_t>(i)] * ds[static_cast<size_t>(i)];
          double gd = 0.0;
          for (int i = 0; i < n; ++i)
            gd = std::max(gd, std::abs(grad[static_cast<size_t>(i)] -
                                       xis * xiv[static_cast<size_t>(i)]));
          max_grad_dev = std::max(max_grad_dev, gd);
        }
      }
      b.add_point(p, res, {{"sigma", sigma}});
    } catch (const SpecError&) {
      throw;
    } catch (const std::exception& e) {
      b.note_failure(p, e.what());
    }
  }
  if (count > 0) {
    out.sigma = sum_sigma / count;
    out.sigma_constant = (hi - lo) < 1e-6 * (1.0 + std::abs(out.sigma));
  }
  b.set_summary("sigma", out.sigma);
  b.set_summary("max_h", max_h);
  if (max_h < 1e-8 && out.residual < tol) {
    b.set_summary("max_grad_sigma_dev", max_grad_dev);
    if (max_grad_dev >= 1e-6) b.warn("grad sigma is not aligned with xi");
  }
  Report rep = b.finish();
  if (rep.verdict == Verdict::Pass && max_h < 1e-8 && out.residual < tol && max_grad_dev >= 1e-6)
    rep.verdict = Verdict::Fail;
  out.report = std::move(rep);
  return out;
}

}  // namespace mkv
