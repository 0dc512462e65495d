#include "mkv/contact.hpp"

#include <algorithm>
#include <cmath>

namespace mkv {
namespace {

Nd<2> matmul(const Nd<2>& a, const Nd<2>& b) {
  const int n = a.extent();
  Nd<2> r(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += a(i, k) * b(k, j);
      r(i, j) = s;
    }
  return r;
}

Vec apply(const Nd<2>& a, const Vec& v) {
  const int n = a.extent();
  Vec r(static_cast<size_t>(n), 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) r[static_cast<size_t>(i)] += a(i, j) * v[static_cast<size_t>(j)];
  return r;
}

double trace(const Nd<2>& a) {
  double t = 0.0;
  for (int i = 0; i < a.extent(); ++i) t += a(i, i);
  return t;
}

std::vector<std::vector<double>> check_points(const ManifoldSpec& spec, const CheckOptions& opt) {
  if (opt.point) {
    if (static_cast<int>(opt.point->size()) != spec.dim)
      throw SpecError("point has wrong dimension for '" + spec.name + "'");
    return {*opt.point};
  }
  return sample_points(spec, opt.grid);
}

double tol_or(const CheckOptions& opt, double fallback) { return opt.tol.value_or(fallback); }

}  // namespace

void require_structure(const ManifoldSpec& spec) {
  if (!spec.structure) throw SpecError("spec '" + spec.name + "' has no contact block");
  if (spec.dim % 2 == 0)
    throw SpecError("contact structure needs odd dimension, got " + std::to_string(spec.dim));
  const auto& st = *spec.structure;
  const size_t n = static_cast<size_t>(spec.dim);
  if (st.xi.size() != n || st.phi.size() != n)
    throw SpecError("contact block of '" + spec.name + "' has inconsistent sizes");
  for (const auto& row : st.phi)
    if (row.size() != n) throw SpecError("phi matrix of '" + spec.name + "' is not square");
  if (st.eta && st.eta->size() != n)
    throw SpecError("eta of '" + spec.name + "' has wrong length");
}

Nd<2> StructureAtPoint::deta_form() const {
  const int n = geo.n;
  Nd<2> d(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) d(i, j) = deta_full(i, j) - deta_full(j, i);
  return d;
}

Nd<2> StructureAtPoint::fundamental() const {
  const int n = geo.n;
  Nd<2> f(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int m = 0; m < n; ++m) s += geo.g(i, m) * phi(m, j);
      f(i, j) = s;
    }
  return f;
}

Nd<3> StructureAtPoint::nabla_op(const Nd<2>& op, const Nd<3>& dop) const {
  const int n = geo.n;
  Nd<3> r(n);
  for (int a = 0; a < n; ++a)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = dop(a, i, j);
        for (int m = 0; m < n; ++m)
          s += geo.gamma(i, a, m) * op(m, j) - geo.gamma(m, a, j) * op(i, m);
        r(a, i, j) = s;
      }
  return r;
}

Nd<2> StructureAtPoint::nabla_along_xi(const Nd<2>& op, const Nd<3>& dop) const {
  const int n = geo.n;
  const Nd<3> nab = nabla_op(op, dop);
  Nd<2> r(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int a = 0; a < n; ++a) s += xi.value(a) * nab(a, i, j);
      r(i, j) = s;
    }
  return r;
}

StructureAtPoint structure_at(const ManifoldSpec& spec, std::span<const double> p) {
  require_structure(spec);
  StructureAtPoint s;
  s.geo = geometry_at(spec, p);
  const int n = s.geo.n;
  s.xi = field_jets(spec, spec.structure->xi, p, 2);
  const auto params = spec.parameter_values();

  s.phi = Nd<2>(n);
  s.dphi = Nd<3>(n);
  Nd<4> ddphi(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Jet J = spec.structure->phi[static_cast<size_t>(i)][static_cast<size_t>(j)].eval(
          p, params, 2);
      s.phi(i, j) = J.value();
      for (int a = 0; a < n; ++a) {
        s.dphi(a, i, j) = J.d(a);
        for (int b = 0; b < n; ++b) ddphi(a, b, i, j) = J.d2(a, b);
      }
    }

  s.eta.assign(static_cast<size_t>(n), 0.0);
  s.deta_full = Nd<2>(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) s.eta[static_cast<size_t>(i)] += s.geo.g(i, j) * s.xi.value(j);
    for (int a = 0; a < n; ++a) {
      double d = 0.0;
      for (int j = 0; j < n; ++j)
        d += s.geo.dg(a, i, j) * s.xi.value(j) + s.geo.g(i, j) * s.xi.d(j, a);
      s.deta_full(a, i) = d;
    }
  }
  if (spec.structure->eta) {
    for (int i = 0; i < n; ++i) {
      const double given =
          (*spec.structure->eta)[static_cast<size_t>(i)].eval_value(p, params);
      const double own = s.eta[static_cast<size_t>(i)];
      if (std::abs(given - own) > 1e-10 * (1.0 + std::abs(own)))
        throw SpecError("eta of '" + spec.name + "' disagrees with g*xi at a sample point");
    }
  }

  // h = half the Lie derivative of phi along xi, with one coordinate partial.
  s.h = Nd<2>(n);
  s.dh = Nd<3>(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double v = 0.0;
      for (int k = 0; k < n; ++k)
        v += s.xi.value(k) * s.dphi(k, i, j) - s.phi(k, j) * s.xi.d(i, k) +
             s.phi(i, k) * s.xi.d(k, j);
      s.h(i, j) = 0.5 * v;
      for (int a = 0; a < n; ++a) {
        double d = 0.0;
        for (int k = 0; k < n; ++k)
          d += s.xi.d(k, a) * s.dphi(k, i, j) + s.xi.value(k) * ddphi(a, k, i, j) -
               s.dphi(a, k, j) * s.xi.d(i, k) - s.phi(k, j) * s.xi.d2(i, k, a) +
               s.dphi(a, i, k) * s.xi.d(k, j) + s.phi(i, k) * s.xi.d2(k, j, a);
        s.dh(a, i, j) = 0.5 * d;
      }
    }

  s.hprime = matmul(s.h, s.phi);
  s.dhprime = Nd<3>(n);
  for (int a = 0; a < n; ++a)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double d = 0.0;
        for (int k = 0; k < n; ++k)
          d += s.dh(a, i, k) * s.phi(k, j) + s.h(i, k) * s.dphi(a, k, j);
        s.dhprime(a, i, j) = d;
      }

  s.tr_h2 = trace(matmul(s.h, s.h));
  return s;
}

Report validate_structure(const ManifoldSpec& spec, const CheckOptions& opt) {
  require_structure(spec);
  const double tol = tol_or(opt, 1e-8);
  ReportBuilder b(spec.name, "structure-axioms", tol);
  for (const auto& p : check_points(spec, opt)) {
    try {
      const StructureAtPoint s = structure_at(spec, p);
      const int n = s.geo.n;
      const Vec xiv = s.xi.values();

      double worst = std::abs([&] {
        double e = 0.0;
        for (int i = 0; i < n; ++i) e += s.eta[static_cast<size_t>(i)] * xiv[static_cast<size_t>(i)];
        return e - 1.0;
      }());

      const Nd<2> phi2 = matmul(s.phi, s.phi);
      Nd<2> r(n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          r(i, j) = phi2(i, j) + (i == j ? 1.0 : 0.0) -
                    xiv[static_cast<size_t>(i)] * s.eta[static_cast<size_t>(j)];
      worst = std::max(worst, r.max_abs());

      // g(phi Y, phi X) = g(Y, X) - eta(Y) eta(X)
      Nd<2> gc(n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double s2 = 0.0;
          for (int a = 0; a < n; ++a)
            for (int c = 0; c < n; ++c) s2 += s.phi(a, i) * s.geo.g(a, c) * s.phi(c, j);
          gc(i, j) = s2 - s.geo.g(i, j) +
                     s.eta[static_cast<size_t>(i)] * s.eta[static_cast<size_t>(j)];
        }
      worst = std::max(worst, relative_residual(gc.max_abs(), s.geo.g.max_abs()));

      worst = std::max(worst, max_abs(apply(s.phi, xiv)));  // phi xi = 0
      for (int j = 0; j < n; ++j) {                         // eta o phi = 0
        double d = 0.0;
        for (int i = 0; i < n; ++i) d += s.eta[static_cast<size_t>(i)] * s.phi(i, j);
        worst = std::max(worst, std::abs(d));
      }
      b.add_point(p, worst);
    } catch (const SpecError&) {
      throw;
    } catch (const std::exception& e) {
      b.note_failure(p, e.what());
    }
  }
  return b.finish();
}

Report is_almost_cokahler(const ManifoldSpec& spec, const CheckOptions& opt) {
  require_structure(spec);
  const double tol = tol_or(opt, 1e-8);
  ReportBuilder b(spec.name, "closed-eta-and-fundamental-form", tol);
  double worst_deta = 0.0, worst_dbig = 0.0;
  for (const auto& p : check_points(spec, opt)) {
    try {
      const StructureAtPoint s = structure_at(spec, p);
      const int n = s.geo.n;
      const double deta = relative_residual(s.deta_form().max_abs(), s.deta_full.max_abs());

      // dPhi_{aij} = alternation of the coordinate partials of Phi.
      Nd<3> dbig(n);
      for (int a = 0; a < n; ++a)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            double d = 0.0;
            for (int m = 0; m < n; ++m)
              d += s.geo.dg(a, i, m) * s.phi(m, j) + s.geo.g(i, m) * s.dphi(a, m, j);
            dbig(a, i, j) = d;
          }
      Nd<3> alt(n);
      double scale = dbig.max_abs();
      for (int a = 0; a < n; ++a)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            alt(a, i, j) = dbig(a, i, j) - dbig(i, a, j) + dbig(j, a, i);
      const double dphi_res = relative_residual(alt.max_abs(), scale);

      worst_deta = std::max(worst_deta, deta);
      worst_dbig = std::max(worst_dbig, dphi_res);
      b.add_point(p, std::max(deta, dphi_res));
    } catch (const SpecError&) {
      throw;
    } catch (const std::exception& e) {
      b.note_failure(p, e.what());
    }
  }
  b.set_summary("max_d_eta", worst_deta);
  b.set_summary("max_d_fundamental", worst_dbig);
  return b.finish();
}

Report verify_structure_identities(const ManifoldSpec& spec, const CheckOptions& opt) {
  require_structure(spec);
  const double tol = tol_or(opt, 1e-7);
  ReportBuilder b(spec.name, "structure-identities", tol);
  std::map<std::string, double> worst;
  for (const auto& p : check_points(spec, opt)) {
    try {
      const StructureAtPoint s = structure_at(spec, p);
      const int n = s.geo.n;
      const Vec xiv = s.xi.values();
      std::map<std::string, double> res;

      res["h_xi"] = max_abs(apply(s.h, xiv));
      res["h_phi_anticommute"] =
          (matmul(s.h, s.phi) + matmul(s.phi, s.h)).max_abs();
      res["nabla_xi_phi"] = s.nabla_along_xi(s.phi, s.dphi).max_abs();

      // (nabla_Y eta)X = g(h'X, Y)
      Nd<2> covd_eta(n);
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          double d = s.deta_full(j, i);
          for (int m = 0; m < n; ++m) d -= s.geo.gamma(m, j, i) * s.eta[static_cast<size_t>(m)];
          double rhs = 0.0;
          for (int m = 0; m < n; ++m) rhs += s.geo.g(j, m) * s.hprime(m, i);
          covd_eta(j, i) = d - rhs;
        }
      res["covd_eta"] = covd_eta.max_abs();

      const Nd<2> nxi = covariant_derivative_vector(s.geo, s.xi);
      Nd<2> hp_dev(n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) hp_dev(i, j) = s.hprime(i, j) - nxi(i, j);
      res["hprime_vs_nabla_xi"] = hp_dev.max_abs();

      // R(Y,X)xi = (nabla_Y h')X - (nabla_X h')Y over basis pairs
      const Nd<3> nab = s.nabla_op(s.hprime, s.dhprime);
      double curv = 0.0, curv_scale = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int l = 0; l < n; ++l) {
            double lhs = 0.0;
            for (int k = 0; k < n; ++k) lhs += s.geo.riemann(j, i, k, l) * xiv[static_cast<size_t>(k)];
            curv_scale = std::max(curv_scale, std::abs(lhs));
            curv = std::max(curv, std::abs(lhs - (nab(j, l, i) - nab(i, l, j))));
          }
      res["curvature_xi"] = relative_residual(curv, curv_scale);

      double ricxx = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          ricxx += s.geo.ricci(i, j) * xiv[static_cast<size_t>(i)] * xiv[static_cast<size_t>(j)];
      res["ricci_xi_xi"] = relative_residual(std::abs(ricxx + s.tr_h2), std::abs(s.tr_h2));

      res["trace_h"] = std::abs(trace(s.h));
      res["trace_hprime"] = std::abs(trace(s.hprime));
      res["hprime_sq"] = (matmul(s.hprime, s.hprime) - matmul(s.h, s.h)).max_abs();

      Nd<2> sym(n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double d = 0.0;
          for (int k = 0; k < n; ++k) d += s.geo.g(i, k) * s.h(k, j) - s.geo.g(j, k) * s.h(k, i);
          sym(i, j) = d;
        }
      res["h_self_adjoint"] = relative_residual(sym.max_abs(), s.h.max_abs());

      double point_worst = 0.0;
      for (const auto& [k, v] : res) {
        point_worst = std::max(point_worst, v);
        auto it = worst.find(k);
        if (it == worst.end())
          worst.emplace(k, v);
        else
          it->second = std::max(it->second, v);
      }
      b.add_point(p, point_worst);
    } catch (const SpecError&) {
      throw;
    } catch (const std::exception& e) {
      b.note_failure(p, e.what());
    }
  }
  for (const auto& [k, v] : worst) b.set_summary("max_" + k, v);
  return b.finish();
}

Report nijenhuis_normality(const ManifoldSpec& spec, const CheckOptions& opt) {
  require_structure(spec);
  const double tol = tol_or(opt, 1e-7);
  ReportBuilder b(spec.name, "normality", tol);
  for (const auto& p : check_points(spec, opt)) {
    try {
      const StructureAtPoint s = structure_at(spec, p);
      const int n = s.geo.n;
      const Nd<2> deta = s.deta_form();
      double worst = 0.0, scale = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k) {
            double nij = 0.0;
            for (int l = 0; l < n; ++l)
              nij += s.phi(l, i) * s.dphi(l, k, j) - s.phi(l, j) * s.dphi(l, k, i) +
                     s.phi(k, l) * (s.dphi(j, l, i) - s.dphi(i, l, j));
            scale = std::max(scale, std::abs(nij));
            nij += 2.0 * deta(i, j) * s.xi.value(k);
            worst = std::max(worst, std::abs(nij));
          }
      b.add_point(p, relative_residual(worst, scale));
    } catch (const SpecError&) {
      throw;
    } catch (const std::exception& e) {
      b.note_failure(p, e.what());
    }
  }
  return b.finish();
}

Report is_cokahler(const ManifoldSpec& spec, const CheckOptions& opt) {
  require_structure(spec);
  const double tol = tol_or(opt, 1e-8);
  ReportBuilder b(spec.name, "parallel-phi", tol);
  double worst_norm = 0.0;
  for (const auto& p : check_points(spec, opt)) {
    try {
      const StructureAtPoint s = structure_at(spec, p);
      const int n = s.geo.n;
      const Nd<3> nab = s.nabla_op(s.phi, s.dphi);
      double q = 0.0;
      for (int a = 0; a < n; ++a)
        for (int bx = 0; bx < n; ++bx)
          for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k)
              for (int j = 0; j < n; ++j)
                for (int l = 0; l < n; ++l)
                  q += s.geo.ginv(a, bx) * s.geo.g(i, k) * s.geo.ginv(j, l) * nab(a, i, j) *
                       nab(bx, k, l);
      const double norm = std::sqrt(std::max(q, 0.0));
      worst_norm = std::max(worst_norm, norm);
      b.add_point(p, norm);
    } catch (const SpecError&) {
      throw;
    } catch (const std::exception& e) {
      b.note_failure(p, e.what());
    }
  }
  b.set_summary("max_nabla_phi_norm", worst_norm);
  return b.finish();
}

Report kahlerian_leaves_check(const ManifoldSpec& spec, const CheckOptions& opt) {
  require_structure(spec);
  const double tol = tol_or(opt, 1e-7);
  ReportBuilder b(spec.name, "leafwise-kahler-criterion", tol);
  for (const auto& p : check_points(spec, opt)) {
    try {
      const StructureAtPoint s = structure_at(spec, p);
      const int n = s.geo.n;
      const Nd<3> nab = s.nabla_op(s.phi, s.dphi);
      // (nabla_Y phi)X = g(X, hY) xi - eta(X) hY with Y = e_a, X = e_j
      double worst = 0.0, scale = 0.0;
      for (int a = 0; a < n; ++a)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            double ghj = 0.0;
            for (int m = 0; m < n; ++m) ghj += s.geo.g(j, m) * s.h(m, a);
            const double rhs =
                ghj * s.xi.value(i) - s.eta[static_cast<size_t>(j)] * s.h(i, a);
            scale = std::max(scale, std::max(std::abs(nab(a, i, j)), std::abs(rhs)));
            worst = std::max(worst, std::abs(nab(a, i, j) - rhs));
          }
      b.add_point(p, relative_residual(worst, scale));
    } catch (const SpecError&) {
      throw;
    } catch (const std::exception& e) {
      b.note_failure(p, e.what());
    }
  }
  return b.finish();
}

EtaEinsteinFit eta_einstein_fit(const ManifoldSpec& spec, const CheckOptions& opt) {
  require_structure(spec);
  const double tol = tol_or(opt, 1e-7);
  ReportBuilder b(spec.name, "eta-einstein-fit", tol);
  EtaEinsteinFit fit;
  double sum_a = 0.0, sum_b = 0.0;
  int count = 0;
  double max_h = 0.0, max_dr = 0.0, max_dq = 0.0;
  const int m2 = spec.dim - 1;  // 2m for dim = 2m+1
  for (const auto& p : check_points(spec, opt)) {
    try {
      const StructureAtPoint s = structure_at(spec, p);
      const int n = s.geo.n;
      const Vec xiv = s.xi.values();
      const double ricxx = [&] {
        double v = 0.0;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            v += s.geo.ricci(i, j) * xiv[static_cast<size_t>(i)] * xiv[static_cast<size_t>(j)];
        return v;
      }();
      // Least squares of Q against a*I + b*xi(x)eta reduces to a 2x2 system
      // whose entries are the traces [n 1; 1 1][a b]^T = [r Ric(xi,xi)]^T.
      const double a_fit = (s.geo.scalar - ricxx) / (n - 1);
      const double b_fit = (n * ricxx - s.geo.scalar) / (n - 1);

      Nd<2> dev(n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          dev(i, j) = s.geo.ricci_op(i, j) - a_fit * (i == j ? 1.0 : 0.0) -
                      b_fit * xiv[static_cast<size_t>(i)] * s.eta[static_cast<size_t>(j)];
      const double res =
          relative_residual(std::sqrt(std::max(s.geo.norm2_op(dev), 0.0)),
                            std::sqrt(std::max(s.geo.norm2_op(s.geo.ricci_op), 0.0)));

      const double a_cf = (s.geo.scalar + s.tr_h2) / m2;
      const double b_cf = -(s.geo.scalar + n * s.tr_h2) / m2;
      fit.closed_form_dev = std::max(fit.closed_form_dev,
                                     std::max(std::abs(a_fit - a_cf), std::abs(b_fit - b_cf)));

      max_h = std::max(max_h, s.h.max_abs());
      max_dr = std::max(max_dr, max_abs(s.geo.dscalar));
      // (nabla_X Q)Y = (Xr/2m)[Y - eta(Y)xi]
      double dq = 0.0;
      for (int a = 0; a < n; ++a)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            double cov = s.geo.dricci_op(a, i, j);
            for (int k = 0; k < n; ++k)
              cov += s.geo.gamma(i, a, k) * s.geo.ricci_op(k, j) -
                     s.geo.gamma(k, a, j) * s.geo.ricci_op(i, k);
            const double rhs = s.geo.dscalar[static_cast<size_t>(a)] / m2 *
                               ((i == j ? 1.0 : 0.0) -
                                xiv[static_cast<size_t>(i)] * s.eta[static_cast<size_t>(j)]);
            dq = std::max(dq, std::abs(cov - rhs));
          }
      max_dq = std::max(max_dq, dq);

      sum_a += a_fit;
      sum_b += b_fit;
      ++count;
      b.add_point(p, res, {{"a", a_fit}, {"b", b_fit}});
      fit.residual = std::max(fit.residual, res);
    } catch (const SpecError&) {
      throw;
    } catch (const std::exception& e) {
      b.note_failure(p, e.what());
    }
  }
  if (count > 0) {
    fit.a = sum_a / count;
    fit.b = sum_b / count;
  }
  b.set_summary("a", fit.a);
  b.set_summary("b", fit.b);
  b.set_summary("closed_form_dev", fit.closed_form_dev);
  b.set_summary("max_ricci_op_derivative_dev", max_dq);
  if (max_h < 1e-8) {
    b.set_summary("max_dr", max_dr);
    if (max_dr > 1e-6)
      b.warn("h vanishes but the scalar curvature is not constant");
  }
  fit.report = b.finish();
  return fit;
}

KappaMuFit kappa_mu_fit(const ManifoldSpec& spec, const CheckOptions& opt) {
  require_structure(spec);
  const double tol = tol_or(opt, 1e-7);
  ReportBuilder b(spec.name, "kappa-mu-fit", tol);
  KappaMuFit fit;
  double sum_k = 0.0, sum_m = 0.0;
  int count = 0;
  double qxi_trace_worst = 0.0, ricci_form_worst = 0.0, kappa_max = -1e300;
  const int m2 = spec.dim - 1;
  for (const auto& p : check_points(spec, opt)) {
    try {
      const StructureAtPoint s = structure_at(spec, p);
      const int n = s.geo.n;
      const Vec xiv = s.xi.values();

      // R(e_i,e_j)xi fitted against kappa*(eta_j delta^l_i - eta_i delta^l_j)
      // + mu*(eta_j h^l_i - eta_i h^l_j) over all basis pairs.
      double g11 = 0.0, g12 = 0.0, g22 = 0.0, r1 = 0.0, r2 = 0.0, lnorm = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int l = 0; l < n; ++l) {
            double lhs = 0.0;
            for (int k = 0; k < n; ++k)
              lhs += s.geo.riemann(i, j, k, l) * xiv[static_cast<size_t>(k)];
            const double b1 = s.eta[static_cast<size_t>(j)] * (l == i ? 1.0 : 0.0) -
                              s.eta[static_cast<size_t>(i)] * (l == j ? 1.0 : 0.0);
            const double b2 = s.eta[static_cast<size_t>(j)] * s.h(l, i) -
                              s.eta[static_cast<size_t>(i)] * s.h(l, j);
            g11 += b1 * b1;
            g12 += b1 * b2;
            g22 += b2 * b2;
            r1 += lhs * b1;
            r2 += lhs * b2;
            lnorm = std::max(lnorm, std::abs(lhs));
          }
      double kappa, mu;
      const double det = g11 * g22 - g12 * g12;
      if (det > 1e-12 * std::max(1.0, g11 * g22)) {
        kappa = (g22 * r1 - g12 * r2) / det;
        mu = (g11 * r2 - g12 * r1) / det;
      } else {
        kappa = g11 > 0.0 ? r1 / g11 : 0.0;
        mu = 0.0;  // h = 0 makes the mu direction degenerate
      }

      double worst = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int l = 0; l < n; ++l) {
            double lhs = 0.0;
            for (int k = 0; k < n; ++k)
              lhs += s.geo.riemann(i, j, k, l) * xiv[static_cast<size_t>(k)];
            const double b1 = s.eta[static_cast<size_t>(j)] * (l == i ? 1.0 : 0.0) -
                              s.eta[static_cast<size_t>(i)] * (l == j ? 1.0 : 0.0);
            const double b2 = s.eta[static_cast<size_t>(j)] * s.h(l, i) -
                              s.eta[static_cast<size_t>(i)] * s.h(l, j);
            worst = std::max(worst, std::abs(lhs - kappa * b1 - mu * b2));
          }
      const double res = relative_residual(worst, lnorm);

      if (res < tol) {
        // Q xi = 2m kappa xi and h^2 = kappa phi^2
        const Vec qxi = apply(s.geo.ricci_op, xiv);
        double dq = 0.0;
        for (int i = 0; i < n; ++i)
          dq = std::max(dq,
                         std::abs(qxi[static_cast<size_t>(i)] - m2 * kappa * xiv[static_cast<size_t>(i)]));
        const Nd<2> h2 = matmul(s.h, s.h);
        const Nd<2> phi2 = matmul(s.phi, s.phi);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            dq = std::max(dq, std::abs(h2(i, j) - kappa * phi2(i, j)));
        qxi_trace_worst = std::max(qxi_trace_worst, relative_residual(dq, std::abs(kappa)));
        if (n == 3) {
          double dr = 0.0;
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
              const double rhs = mu * s.h(i, j) +
                                 (s.geo.scalar / 2.0 - kappa) * (i == j ? 1.0 : 0.0) +
                                 (3.0 * kappa - s.geo.scalar / 2.0) * xiv[static_cast<size_t>(i)] *
                                     s.eta[static_cast<size_t>(j)];
              dr = std::max(dr, std::abs(s.geo.ricci_op(i, j) - rhs));
            }
          ricci_form_worst =
              std::max(ricci_form_worst, relative_residual(dr, s.geo.ricci_op.max_abs()));
        }
        kappa_max = std::max(kappa_max, kappa);
      }

      sum_k += kappa;
      sum_m += mu;
      ++count;
      b.add_point(p, res, {{"kappa", kappa}, {"mu", mu}});
      fit.residual = std::max(fit.residual, res);
    } catch (const SpecError&) {
      throw;
    } catch (const std::exception& e) {
      b.note_failure(p, e.what());
    }
  }
  if (count > 0) {
    fit.kappa = sum_k / count;
    fit.mu = sum_m / count;
  }
  b.set_summary("kappa", fit.kappa);
  b.set_summary("mu", fit.mu);
  if (fit.residual < tol) {
    b.set_summary("ricci_xi_and_h_sq_dev", qxi_trace_worst);
    if (spec.dim == 3) b.set_summary("ricci_op_form_dev", ricci_form_worst);
    if (kappa_max > 1e-10) b.warn("fitted kappa is positive, which the structure forbids");
  }
  fit.report = b.finish();
  return fit;
}

DeformationResult d_homothetic_deform(const ManifoldSpec& spec, const DeformationParams& params,
                                      const CheckOptions& opt) {
  require_structure(spec);
  if (!(params.c > 0.0)) throw SpecError("deformation constant c must be positive");
  if (!params.u.valid()) throw SpecError("deformation function u missing");

  const auto pvals = spec.parameter_values();
  const auto points = check_points(spec, opt);
  // Admissibility: u nonzero and constant along the phi-directions.
  for (const auto& p : points) {
    const Jet uj = params.u.eval(p, pvals, 1);
    if (std::abs(uj.value()) < 1e-8) throw SpecError("deformation function u vanishes on the domain");
    const StructureAtPoint s = structure_at(spec, p);
    const int n = s.geo.n;
    double off = 0.0, scale = 0.0;
    for (int j = 0; j < n; ++j) {
      double d = 0.0;
      for (int i = 0; i < n; ++i) {
        d += uj.d(i) * s.phi(i, j);
        scale = std::max(scale, std::abs(uj.d(i)));
      }
      off = std::max(off, std::abs(d));
    }
    if (relative_residual(off, scale) > 1e-8)
      throw SpecError("deformation function u varies off the Reeb direction");
  }

  const int n = spec.dim;
  std::vector<Expression> eta_expr;
  if (spec.structure->eta) {
    eta_expr = *spec.structure->eta;
  } else {
    for (int i = 0; i < n; ++i) {
      Expression e = Expression::number(0.0);
      for (int j = 0; j < n; ++j)
        e = Expression::add(
            e, Expression::mul(spec.metric[static_cast<size_t>(i)][static_cast<size_t>(j)],
                               spec.structure->xi[static_cast<size_t>(j)]));
      eta_expr.push_back(e);
    }
  }

  DeformationResult out;
  out.deformed = spec;
  out.deformed.name = spec.name + "-deformed";
  const Expression cnum = Expression::number(params.c);
  const Expression weight = Expression::sub(Expression::mul(params.u, params.u), cnum);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      out.deformed.metric[static_cast<size_t>(i)][static_cast<size_t>(j)] = Expression::add(
          Expression::mul(cnum, spec.metric[static_cast<size_t>(i)][static_cast<size_t>(j)]),
          Expression::mul(weight, Expression::mul(eta_expr[static_cast<size_t>(i)],
                                                  eta_expr[static_cast<size_t>(j)])));
  ContactBlock blk;
  for (int i = 0; i < n; ++i)
    blk.xi.push_back(Expression::div(spec.structure->xi[static_cast<size_t>(i)], params.u));
  std::vector<Expression> eta2;
  for (int i = 0; i < n; ++i) eta2.push_back(Expression::mul(params.u, eta_expr[static_cast<size_t>(i)]));
  blk.eta = std::move(eta2);
  blk.phi = spec.structure->phi;
  out.deformed.structure = std::move(blk);

  const double tol = tol_or(opt, 1e-8);
  ReportBuilder b(spec.name, "homothetic-deformation", tol);
  for (const auto& p : points) {
    try {
      const StructureAtPoint before = structure_at(spec, p);
      const StructureAtPoint after = structure_at(out.deformed, p);
      const double u = params.u.eval_value(p, pvals);
      Nd<2> dev(n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) dev(i, j) = after.h(i, j) - before.h(i, j) / u;
      b.add_point(p, relative_residual(dev.max_abs(), before.h.max_abs()));
    } catch (const SpecError&) {
      throw;
    } catch (const std::exception& e) {
      b.note_failure(p, e.what());
    }
  }
  CheckOptions vopt = opt;
  vopt.tol.reset();
  const Report axioms = validate_structure(out.deformed, vopt);
  b.set_summary("deformed_axiom_residual", axioms.max_residual);
  if (!axioms.passed()) b.warn("deformed structure fails the axiom check");
  Report rep = b.finish();
  if (!axioms.passed()) rep.verdict = Verdict::Fail;
  out.report = std::move(rep);
  return out;
}

}  // namespace mkv
