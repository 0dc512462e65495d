#include "mkv/geometry.hpp"

#include <cmath>
#include <sstream>

namespace mkv {

namespace {

// Gauss-Jordan inverse with partial pivoting; returns the determinant.
double invert(const Nd<2>& m, Nd<2>& out) {
  const int n = m.extent();
  std::vector<std::vector<double>> a(static_cast<size_t>(n),
                                     std::vector<double>(static_cast<size_t>(2 * n), 0.0));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a[i][j] = m(i, j);
    a[i][static_cast<size_t>(n + i)] = 1.0;
  }
  double det = 1.0;
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    if (a[pivot][col] == 0.0) return 0.0;
    if (pivot != col) {
      std::swap(a[pivot], a[col]);
      det = -det;
    }
    det *= a[col][col];
    const double inv = 1.0 / a[col][col];
    for (int j = 0; j < 2 * n; ++j) a[col][j] *= inv;
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r][col];
      if (f == 0.0) continue;
      for (int j = 0; j < 2 * n; ++j) a[r][j] -= f * a[col][j];
    }
  }
  out = Nd<2>(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out(i, j) = a[i][static_cast<size_t>(n + j)];
  return det;
}

std::string point_string(std::span<const double> p) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p[i];
  os << ")";
  return os.str();
}

}  // namespace

double GeometryCache::norm2_vector(const Vec& v) const {
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) s += g(i, j) * v[static_cast<size_t>(i)] * v[static_cast<size_t>(j)];
  return s;
}

double GeometryCache::norm2_covector(const Vec& w) const {
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      s += ginv(i, j) * w[static_cast<size_t>(i)] * w[static_cast<size_t>(j)];
  return s;
}

double GeometryCache::norm2_op(const Nd<2>& a) const {
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) s += g(i, j) * a(i, p) * a(j, q) * ginv(p, q);
  return s;
}

double GeometryCache::norm2_bilinear(const Nd<2>& s) const { return inner_bilinear(s, s); }

double GeometryCache::inner_bilinear(const Nd<2>& a, const Nd<2>& b) const {
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) s += ginv(i, p) * ginv(j, q) * a(i, j) * b(p, q);
  return s;
}

Vec GeometryCache::lower(const Vec& v) const {
  Vec w(static_cast<size_t>(n), 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) w[static_cast<size_t>(i)] += g(i, j) * v[static_cast<size_t>(j)];
  return w;
}

Vec GeometryCache::raise(const Vec& w) const {
  Vec v(static_cast<size_t>(n), 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) v[static_cast<size_t>(i)] += ginv(i, j) * w[static_cast<size_t>(j)];
  return v;
}

Vec GeometryCache::divergence_ricci_op() const {
  Vec out(static_cast<size_t>(n), 0.0);
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      s += dricci_op(i, i, j);
      for (int m = 0; m < n; ++m)
        s += gamma(i, i, m) * ricci_op(m, j) - gamma(m, i, j) * ricci_op(i, m);
    }
    out[static_cast<size_t>(j)] = s;
  }
  return out;
}

GeometryCache geometry_at(const ManifoldSpec& spec, std::span<const double> p) {
  const int n = spec.dim;
  const auto params = spec.parameter_values();

  GeometryCache c;
  c.n = n;
  c.point.assign(p.begin(), p.end());
  c.g = Nd<2>(n);
  c.dg = Nd<3>(n);
  c.ddg = Nd<4>(n);
  c.dddg = Nd<5>(n);

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Jet e = spec.metric[static_cast<size_t>(i)][static_cast<size_t>(j)].eval(p, params, 3);
      c.g(i, j) = e.value();
      for (int a = 0; a < n; ++a) {
        c.dg(a, i, j) = e.d(a);
        for (int b = 0; b < n; ++b) {
          c.ddg(a, b, i, j) = e.d2(a, b);
          for (int q = 0; q < n; ++q) c.dddg(a, b, q, i, j) = e.d3(a, b, q);
        }
      }
    }
  }

  const double det = invert(c.g, c.ginv);
  if (std::abs(det) <= 1e-10)
    throw DegenerateMetricError("metric degenerate (|det| = " + std::to_string(std::abs(det)) +
                                ") at " + point_string(p));

  // ∂ g^{-1} = -g^{-1} (∂g) g^{-1} and its derivative.
  c.dginv = Nd<3>(n);
  for (int a = 0; a < n; ++a)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) s -= c.ginv(i, k) * c.dg(a, k, l) * c.ginv(l, j);
        c.dginv(a, i, j) = s;
      }
  c.ddginv = Nd<4>(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double s = 0.0;
          for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l)
              s -= c.dginv(b, i, k) * c.dg(a, k, l) * c.ginv(l, j) +
                   c.ginv(i, k) * c.ddg(a, b, k, l) * c.ginv(l, j) +
                   c.ginv(i, k) * c.dg(a, k, l) * c.dginv(b, l, j);
          c.ddginv(a, b, i, j) = s;
        }

  // Christoffel symbols and their first two derivative layers.
  auto S = [&](int l, int i, int j) { return c.dg(i, l, j) + c.dg(j, l, i) - c.dg(l, i, j); };
  auto dS = [&](int a, int l, int i, int j) {
    return c.ddg(a, i, l, j) + c.ddg(a, j, l, i) - c.ddg(a, l, i, j);
  };
  auto ddS = [&](int a, int b, int l, int i, int j) {
    return c.dddg(a, b, i, l, j) + c.dddg(a, b, j, l, i) - c.dddg(a, b, l, i, j);
  };

  c.gamma = Nd<3>(n);
  c.dgamma = Nd<4>(n);
  c.ddgamma = Nd<5>(n);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s0 = 0.0;
        for (int l = 0; l < n; ++l) s0 += c.ginv(k, l) * S(l, i, j);
        c.gamma(k, i, j) = 0.5 * s0;
        for (int a = 0; a < n; ++a) {
          double s1 = 0.0;
          for (int l = 0; l < n; ++l)
            s1 += c.dginv(a, k, l) * S(l, i, j) + c.ginv(k, l) * dS(a, l, i, j);
          c.dgamma(a, k, i, j) = 0.5 * s1;
          for (int b = 0; b < n; ++b) {
            double s2 = 0.0;
            for (int l = 0; l < n; ++l)
              s2 += c.ddginv(a, b, k, l) * S(l, i, j) + c.dginv(a, k, l) * dS(b, l, i, j) +
                    c.dginv(b, k, l) * dS(a, l, i, j) + c.ginv(k, l) * ddS(a, b, l, i, j);
            c.ddgamma(a, b, k, i, j) = 0.5 * s2;
          }
        }
      }

  // Curvature hierarchy.
  c.riemann = Nd<4>(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double s = c.dgamma(i, l, j, k) - c.dgamma(j, l, i, k);
          for (int m = 0; m < n; ++m)
            s += c.gamma(l, i, m) * c.gamma(m, j, k) - c.gamma(l, j, m) * c.gamma(m, i, k);
          c.riemann(i, j, k, l) = s;
        }

  c.riemann_low = Nd<4>(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double s = 0.0;
          for (int m = 0; m < n; ++m) s += c.riemann(i, j, k, m) * c.g(m, l);
          c.riemann_low(i, j, k, l) = s;
        }

  c.ricci = Nd<2>(n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += c.riemann(i, j, k, i);
      c.ricci(j, k) = s;
    }

  c.dricci = Nd<3>(n);
  for (int a = 0; a < n; ++a)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
          s += c.ddgamma(a, i, i, j, k) - c.ddgamma(a, j, i, i, k);
          for (int m = 0; m < n; ++m)
            s += c.dgamma(a, i, i, m) * c.gamma(m, j, k) + c.gamma(i, i, m) * c.dgamma(a, m, j, k) -
                 c.dgamma(a, i, j, m) * c.gamma(m, i, k) - c.gamma(i, j, m) * c.dgamma(a, m, i, k);
        }
        c.dricci(a, j, k) = s;
      }

  c.ricci_op = Nd<2>(n);
  c.dricci_op = Nd<3>(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += c.ginv(i, k) * c.ricci(k, j);
      c.ricci_op(i, j) = s;
      for (int a = 0; a < n; ++a) {
        double t = 0.0;
        for (int k = 0; k < n; ++k)
          t += c.dginv(a, i, k) * c.ricci(k, j) + c.ginv(i, k) * c.dricci(a, k, j);
        c.dricci_op(a, i, j) = t;
      }
    }

  c.scalar = 0.0;
  c.dscalar.assign(static_cast<size_t>(n), 0.0);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      c.scalar += c.ginv(j, k) * c.ricci(j, k);
      for (int a = 0; a < n; ++a)
        c.dscalar[static_cast<size_t>(a)] +=
            c.dginv(a, j, k) * c.ricci(j, k) + c.ginv(j, k) * c.dricci(a, j, k);
    }

  return c;
}

FieldJets field_jets(const ManifoldSpec& spec, const std::vector<Expression>& comps,
                     std::span<const double> p, int order) {
  const auto params = spec.parameter_values();
  FieldJets f;
  f.n = spec.dim;
  f.comp.reserve(comps.size());
  for (const auto& e : comps) f.comp.push_back(e.eval(p, params, order));
  return f;
}

FieldJets field_jets(const ManifoldSpec& spec, const std::string& field_name,
                     std::span<const double> p, int order) {
  return field_jets(spec, spec.field(field_name), p, order);
}

Nd<2> covariant_derivative_vector(const GeometryCache& geo, const FieldJets& v) {
  const int n = geo.n;
  Nd<2> a(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = v.d(i, j);
      for (int k = 0; k < n; ++k) s += geo.gamma(i, j, k) * v.value(k);
      a(i, j) = s;
    }
  return a;
}

VectorWithDerivs acceleration_field(const GeometryCache& geo, const FieldJets& v) {
  const int n = geo.n;
  VectorWithDerivs w{Vec(static_cast<size_t>(n), 0.0), Nd<2>(n)};
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) {
      double aij = v.d(i, j);
      for (int k = 0; k < n; ++k) aij += geo.gamma(i, j, k) * v.value(k);
      s += v.value(j) * aij;
    }
    w.value[static_cast<size_t>(i)] = s;
    for (int a = 0; a < n; ++a) {
      double t = 0.0;
      for (int j = 0; j < n; ++j) {
        double aij = v.d(i, j);
        double daij = v.d2(i, a, j);
        for (int k = 0; k < n; ++k) {
          aij += geo.gamma(i, j, k) * v.value(k);
          daij += geo.dgamma(a, i, j, k) * v.value(k) + geo.gamma(i, j, k) * v.d(k, a);
        }
        t += v.d(j, a) * aij + v.value(j) * daij;
      }
      w.deriv(a, i) = t;
    }
  }
  return w;
}

Vec covariant_derivative_along(const GeometryCache& geo, const VectorWithDerivs& w, const Vec& x) {
  const int n = geo.n;
  Vec out(static_cast<size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int a = 0; a < n; ++a) {
      double t = w.deriv(a, i);
      for (int k = 0; k < n; ++k) t += geo.gamma(i, a, k) * w.value[static_cast<size_t>(k)];
      s += x[static_cast<size_t>(a)] * t;
    }
    out[static_cast<size_t>(i)] = s;
  }
  return out;
}

Vec second_covariant_derivative(const GeometryCache& geo, const FieldJets& v, const Vec& x,
                                const Vec& y) {
  const int n = geo.n;
  VectorWithDerivs w{Vec(static_cast<size_t>(n), 0.0), Nd<2>(n)};
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) {
      double aij = v.d(i, j);
      for (int k = 0; k < n; ++k) aij += geo.gamma(i, j, k) * v.value(k);
      s += y[static_cast<size_t>(j)] * aij;
    }
    w.value[static_cast<size_t>(i)] = s;
    for (int a = 0; a < n; ++a) {
      double t = 0.0;
      for (int j = 0; j < n; ++j) {
        double daij = v.d2(i, a, j);
        for (int k = 0; k < n; ++k)
          daij += geo.dgamma(a, i, j, k) * v.value(k) + geo.gamma(i, j, k) * v.d(k, a);
        t += y[static_cast<size_t>(j)] * daij;
      }
      w.deriv(a, i) = t;
    }
  }
  return covariant_derivative_along(geo, w, x);
}

Vec nabla_x_nabla_vv(const GeometryCache& geo, const FieldJets& v, const Vec& x) {
  return covariant_derivative_along(geo, acceleration_field(geo, v), x);
}

Nd<2> lie_derivative_metric(const GeometryCache& geo, const FieldJets& v, double cross_check_tol) {
  const int n = geo.n;
  Nd<2> coord(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k)
        s += v.value(k) * geo.dg(k, i, j) + geo.g(k, j) * v.d(k, i) + geo.g(i, k) * v.d(k, j);
      coord(i, j) = s;
    }

  const Nd<2> a = covariant_derivative_vector(geo, v);
  Nd<2> cov(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += geo.g(j, k) * a(k, i) + geo.g(i, k) * a(k, j);
      cov(i, j) = s;
    }

  const double diff = (coord - cov).max_abs();
  if (relative_residual(diff, coord.max_abs()) > cross_check_tol)
    throw InternalConsistencyError(
        "coordinate and covariant Lie-derivative formulas disagree: " + std::to_string(diff));
  return coord;
}

BilinearWithDerivs lie_derivative_metric_with_derivs(const GeometryCache& geo,
                                                     const FieldJets& v) {
  const int n = geo.n;
  BilinearWithDerivs t{Nd<2>(n), Nd<3>(n)};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k)
        s += v.value(k) * geo.dg(k, i, j) + geo.g(k, j) * v.d(k, i) + geo.g(i, k) * v.d(k, j);
      t.value(i, j) = s;
      for (int a = 0; a < n; ++a) {
        double d = 0.0;
        for (int k = 0; k < n; ++k)
          d += v.d(k, a) * geo.dg(k, i, j) + v.value(k) * geo.ddg(a, k, i, j) +
               geo.dg(a, k, j) * v.d(k, i) + geo.g(k, j) * v.d2(k, a, i) +
               geo.dg(a, i, k) * v.d(k, j) + geo.g(i, k) * v.d2(k, a, j);
        t.deriv(a, i, j) = d;
      }
    }
  return t;
}

namespace {

// ∂_a (∇V)^i_j, used by the twist-operator derivative below.
double d_covd(const GeometryCache& geo, const FieldJets& v, int a, int i, int j) {
  double s = v.d2(i, a, j);
  for (int k = 0; k < geo.n; ++k)
    s += geo.dgamma(a, i, j, k) * v.value(k) + geo.gamma(i, j, k) * v.d(k, a);
  return s;
}

}  // namespace

Nd<2> twist_operator(const GeometryCache& geo, const FieldJets& v) {
  const int n = geo.n;
  const Nd<2> a = covariant_derivative_vector(geo, v);
  Nd<2> phi(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = -a(i, j);
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) s += geo.ginv(i, k) * a(l, k) * geo.g(l, j);
      phi(i, j) = s;
    }
  // skewness of the lowered operator is exact algebra; guard against misuse
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double lij = 0.0, lji = 0.0;
      for (int k = 0; k < n; ++k) {
        lij += geo.g(i, k) * phi(k, j);
        lji += geo.g(j, k) * phi(k, i);
      }
      if (std::abs(lij + lji) > 1e-10 * (1.0 + phi.max_abs()))
        throw InternalConsistencyError("twist operator lost skew-symmetry");
    }
  return phi;
}

Nd<2> second_lie_derivative_metric(const GeometryCache& geo, const FieldJets& v,
                                   double cross_check_tol) {
  const int n = geo.n;

  // (a) the coordinate Lie derivative applied twice
  const BilinearWithDerivs t = lie_derivative_metric_with_derivs(geo, v);
  Nd<2> twice(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k)
        s += v.value(k) * t.deriv(k, i, j) + t.value(k, j) * v.d(k, i) + t.value(i, k) * v.d(k, j);
      twice(i, j) = s;
    }

  // (b) the curvature expansion, symmetrized over (X,Y). The raw expansion
  // carries a skew ∇_Vφ contribution that cancels under symmetrization.
  const Nd<2> a = covariant_derivative_vector(geo, v);
  const Nd<2> phi = twist_operator(geo, v);
  const Vec vv = v.values();
  Nd<2> raw(n);
  for (int j = 0; j < n; ++j) {
    Vec ej(static_cast<size_t>(n), 0.0);
    ej[static_cast<size_t>(j)] = 1.0;
    const Vec ddv = nabla_x_nabla_vv(geo, v, ej);  // ∇_{e_j}∇_V V
    Vec u(static_cast<size_t>(n), 0.0);
    for (int l = 0; l < n; ++l) {
      double s = 2.0 * ddv[static_cast<size_t>(l)];
      for (int q = 0; q < n; ++q)
        for (int r = 0; r < n; ++r)
          s += 2.0 * vv[static_cast<size_t>(q)] * geo.riemann(q, j, r, l) *
               vv[static_cast<size_t>(r)];  // 2 R(V, e_j) V
      for (int m = 0; m < n; ++m) {
        s += 2.0 * a(m, j) * a(l, m);        // 2 ∇_{∇_{e_j}V} V
        s += 3.0 * phi(l, m) * a(m, j);      // 3 φ ∇_{e_j}V
        s += phi(l, m) * phi(m, j);          // φ² e_j
        s += phi(m, j) * a(l, m);            // ∇_{φ e_j} V
      }
      u[static_cast<size_t>(l)] = s;
    }
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int l = 0; l < n; ++l) s += geo.g(i, l) * u[static_cast<size_t>(l)];
      raw(i, j) = s;
    }
  }
  Nd<2> expansion(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) expansion(i, j) = 0.5 * (raw(i, j) + raw(j, i));

  const double diff = (twice - expansion).max_abs();
  if (relative_residual(diff, twice.max_abs()) > cross_check_tol)
    throw InternalConsistencyError(
        "second Lie derivative: coordinate and curvature routes disagree by " +
        std::to_string(diff));
  return twice;
}

Nd<4> weyl_tensor(const GeometryCache& geo) {
  const int n = geo.n;
  if (n != 3) throw SpecError("Weyl display implemented for dimension 3 only");
  Nd<4> w(n);
  const double r = geo.scalar;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double s = geo.riemann(i, j, k, l);
          s -= geo.ricci(j, k) * (l == i ? 1.0 : 0.0) - geo.ricci(i, k) * (l == j ? 1.0 : 0.0) +
               geo.g(j, k) * geo.ricci_op(l, i) - geo.g(i, k) * geo.ricci_op(l, j);
          s += 0.5 * r * (geo.g(j, k) * (l == i ? 1.0 : 0.0) - geo.g(i, k) * (l == j ? 1.0 : 0.0));
          w(i, j, k, l) = s;
        }
  return w;
}

Vec lie_derivative_connection(const GeometryCache& geo, const FieldJets& v, const Vec& x,
                              const Vec& y) {
  const int n = geo.n;
  const Nd<2> a = covariant_derivative_vector(geo, v);
  Vec out(static_cast<size_t>(n), 0.0);
  for (int k = 0; k < n; ++k) {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double hess = d_covd(geo, v, i, k, j);  // ∂_i A^k_j
        for (int m = 0; m < n; ++m)
          hess += geo.gamma(k, i, m) * a(m, j) - geo.gamma(m, i, j) * a(k, m);
        double curv = 0.0;
        for (int m = 0; m < n; ++m) curv += v.value(m) * geo.riemann(i, m, j, k);
        s += x[static_cast<size_t>(i)] * y[static_cast<size_t>(j)] * (hess - curv);
      }
    out[static_cast<size_t>(k)] = s;
  }
  return out;
}

double divergence(const GeometryCache& geo, const FieldJets& v) {
  const Nd<2> a = covariant_derivative_vector(geo, v);
  double s = 0.0;
  for (int i = 0; i < geo.n; ++i) s += a(i, i);
  return s;
}

Vec gradient(const GeometryCache& geo, const Jet& scalar) {
  const int n = geo.n;
  Vec out(static_cast<size_t>(n), 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out[static_cast<size_t>(i)] += geo.ginv(i, j) * scalar.d(j);
  return out;
}

double norm2_covariant_derivative(const GeometryCache& geo, const FieldJets& v) {
  return geo.norm2_op(covariant_derivative_vector(geo, v));
}

Report curvature_substrate_check(const ManifoldSpec& spec, const CheckOptions& opt) {
  // Per-identity thresholds; an explicit --tol overrides all of them.
  const double tol_compat = opt.tol.value_or(1e-10);
  const double tol_sym = opt.tol.value_or(1e-9);
  const double tol_bianchi2 = opt.tol.value_or(1e-7);
  ReportBuilder b(spec.name, "curvature-substrate", opt.tol.value_or(1e-7));

  std::vector<std::vector<double>> pts;
  if (opt.point) {
    if (static_cast<int>(opt.point->size()) != spec.dim)
      throw SpecError("point has wrong dimension for '" + spec.name + "'");
    pts = {*opt.point};
  } else {
    pts = sample_points(spec, opt.grid);
  }

  bool ok = true;
  double worst_compat = 0.0, worst_sym = 0.0, worst_b2 = 0.0;
  for (const auto& p : pts) {
    try {
      const GeometryCache geo = geometry_at(spec, p);
      const int n = geo.n;

      // nabla_a g_ij = dg(a,i,j) - Gamma^k_{ai} g_kj - Gamma^k_{aj} g_ik
      double compat = 0.0;
      for (int a = 0; a < n; ++a)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            double s = geo.dg(a, i, j);
            for (int k = 0; k < n; ++k)
              s -= geo.gamma(k, a, i) * geo.g(k, j) + geo.gamma(k, a, j) * geo.g(i, k);
            compat = std::max(compat, std::abs(s));
          }
      compat = relative_residual(compat, geo.g.max_abs());

      // Lowered Riemann antisymmetries, pair symmetry and the first Bianchi sum.
      const double rscale = geo.riemann_low.max_abs();
      double sym = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) {
              sym = std::max(sym, std::abs(geo.riemann_low(i, j, k, l) +
                                           geo.riemann_low(j, i, k, l)));
              sym = std::max(sym, std::abs(geo.riemann_low(i, j, k, l) +
                                           geo.riemann_low(i, j, l, k)));
              sym = std::max(sym, std::abs(geo.riemann_low(i, j, k, l) -
                                           geo.riemann_low(k, l, i, j)));
              sym = std::max(sym, std::abs(geo.riemann_low(i, j, k, l) +
                                           geo.riemann_low(j, k, i, l) +
                                           geo.riemann_low(k, i, j, l)));
            }
      sym = relative_residual(sym, rscale);

      // 2 (div Q)_j = d_j r
      const Vec divq = geo.divergence_ricci_op();
      double b2 = 0.0, b2_scale = 0.0;
      for (int j = 0; j < n; ++j) {
        const double lhs = 2.0 * divq[static_cast<size_t>(j)];
        const double rhs = geo.dscalar[static_cast<size_t>(j)];
        b2_scale = std::max(b2_scale, std::max(std::abs(lhs), std::abs(rhs)));
        b2 = std::max(b2, std::abs(lhs - rhs));
      }
      b2 = relative_residual(b2, b2_scale);

      worst_compat = std::max(worst_compat, compat);
      worst_sym = std::max(worst_sym, sym);
      worst_b2 = std::max(worst_b2, b2);
      if (compat >= tol_compat || sym >= tol_sym || b2 >= tol_bianchi2) ok = false;
      b.add_point(p, std::max({compat, sym, b2}),
                  {{"metric_compatibility", compat},
                   {"riemann_symmetries", sym},
                   {"contracted_bianchi", b2},
                   {"scalar_curvature", geo.scalar}});
    } catch (const SpecError&) {
      throw;
    } catch (const std::exception& e) {
      b.note_failure(p, e.what());
    }
  }
  b.set_summary("max_metric_compatibility", worst_compat);
  b.set_summary("max_riemann_symmetries", worst_sym);
  b.set_summary("max_contracted_bianchi", worst_b2);
  Report rep = b.finish(ok);
  return rep;
}

}  // namespace mkv
