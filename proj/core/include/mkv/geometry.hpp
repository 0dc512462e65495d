#pragma once

#include <span>

#include "mkv/manifold.hpp"
#include "mkv/report.hpp"
#include "mkv/tensor.hpp"

namespace mkv {

/// Everything metric-derived at one point. Partial-derivative index comes
/// first in the mixed arrays: dg(a,i,j) = ∂_a g_ij, dgamma(a,k,i,j) = ∂_a Γ^k_ij.
/// riemann(i,j,k,l) holds (R(e_i,e_j)e_k)^l.
struct GeometryCache {
  int n = 0;
  std::vector<double> point;

  Nd<2> g, ginv;
  Nd<3> dg, dginv;
  Nd<4> ddg, ddginv;
  Nd<5> dddg;

  Nd<3> gamma;    // gamma(k,i,j) = Γ^k_ij
  Nd<4> dgamma;   // dgamma(a,k,i,j)
  Nd<5> ddgamma;  // ddgamma(a,b,k,i,j)

  Nd<4> riemann;       // (R(e_i,e_j)e_k)^l
  Nd<4> riemann_low;   // g(R(e_i,e_j)e_k, e_l)
  Nd<2> ricci;         // Ric(e_i,e_j)
  Nd<2> ricci_op;      // Q^i_j
  Nd<3> dricci;        // ∂_a Ric_ij
  Nd<3> dricci_op;     // ∂_a Q^i_j
  double scalar = 0.0;
  std::vector<double> dscalar;  // ∂_a r

  // Contractions with the metric.
  double norm2_vector(const Vec& v) const;
  double norm2_covector(const Vec& w) const;
  double norm2_op(const Nd<2>& a) const;       // (1,1) operator A^i_j
  double norm2_bilinear(const Nd<2>& s) const; // (0,2) tensor S_ij
  double inner_bilinear(const Nd<2>& a, const Nd<2>& b) const;  // (0,2)·(0,2)
  Vec lower(const Vec& v) const;
  Vec raise(const Vec& w) const;

  /// (div Q)_j = ∇_i Q^i_j, the contracted second-Bianchi side.
  Vec divergence_ricci_op() const;
};

/// Degenerate metric (|det| below threshold) at a sample point.
struct DegenerateMetricError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

GeometryCache geometry_at(const ManifoldSpec& spec, std::span<const double> p);

/// Components of a vector field together with its partials at a point.
struct FieldJets {
  int n = 0;
  std::vector<Jet> comp;

  double value(int i) const { return comp[static_cast<size_t>(i)].value(); }
  double d(int i, int a) const { return comp[static_cast<size_t>(i)].d(a); }      // ∂_a V^i
  double d2(int i, int a, int b) const { return comp[static_cast<size_t>(i)].d2(a, b); }
  Vec values() const {
    Vec v(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<size_t>(i)] = value(i);
    return v;
  }
};

FieldJets field_jets(const ManifoldSpec& spec, const std::vector<Expression>& comps,
                     std::span<const double> p, int order);
FieldJets field_jets(const ManifoldSpec& spec, const std::string& field_name,
                     std::span<const double> p, int order);

/// (∇V)^i_j = ∂_j V^i + Γ^i_{jk} V^k, returned as A(i,j).
Nd<2> covariant_derivative_vector(const GeometryCache& geo, const FieldJets& v);

/// ∇_V V as a vector plus its coordinate partials dW(a,i) = ∂_a W^i
/// (needed to take one more covariant derivative or a divergence).
struct VectorWithDerivs {
  Vec value;
  Nd<2> deriv;  // deriv(a,i) = ∂_a W^i
};
VectorWithDerivs acceleration_field(const GeometryCache& geo, const FieldJets& v);

/// ∇_X W for a vector field W given with partials, X a plain vector at p.
Vec covariant_derivative_along(const GeometryCache& geo, const VectorWithDerivs& w, const Vec& x);

/// ∇_X(∇_Y V) where Y is extended with constant coordinate components.
Vec second_covariant_derivative(const GeometryCache& geo, const FieldJets& v, const Vec& x,
                                const Vec& y);

/// ∇_X(∇_V V) — the combination entering the curvature identities.
Vec nabla_x_nabla_vv(const GeometryCache& geo, const FieldJets& v, const Vec& x);

/// (L_Vg)_ij, computed both from lowered covariant derivatives and from the
/// coordinate formula; the two must agree to `cross_check_tol`.
Nd<2> lie_derivative_metric(const GeometryCache& geo, const FieldJets& v,
                            double cross_check_tol = 1e-10);

/// (L_Vg)_ij with first partials d(a,i,j) = ∂_a (L_Vg)_ij. Needs order-2
/// jets of V (metric partials come from the cache).
struct BilinearWithDerivs {
  Nd<2> value;
  Nd<3> deriv;
};
BilinearWithDerivs lie_derivative_metric_with_derivs(const GeometryCache& geo, const FieldJets& v);

/// (L_VL_Vg)_ij by applying the coordinate Lie derivative twice, cross-checked
/// against the curvature expansion; disagreement past `cross_check_tol`
/// (relative) throws InternalConsistencyError.
Nd<2> second_lie_derivative_metric(const GeometryCache& geo, const FieldJets& v,
                                   double cross_check_tol = 1e-8);

struct InternalConsistencyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The skew operator φ of V: g(X, φY) = g(∇_X V, Y) − g(X, ∇_Y V).
Nd<2> twist_operator(const GeometryCache& geo, const FieldJets& v);

/// Weyl operator W(e_i,e_j)e_k components (dimension-3 display; identically
/// zero there, reported as a self-check).
Nd<4> weyl_tensor(const GeometryCache& geo);

/// (L_V∇)(X,Y) = ∇_X∇_Y V − ∇_{∇_X Y} V − R(X,V)Y for constant-component X, Y.
Vec lie_derivative_connection(const GeometryCache& geo, const FieldJets& v, const Vec& x,
                              const Vec& y);

double divergence(const GeometryCache& geo, const FieldJets& v);
Vec gradient(const GeometryCache& geo, const Jet& scalar);

/// ‖∇V‖² = ∇_iV_j ∇^iV^j.
double norm2_covariant_derivative(const GeometryCache& geo, const FieldJets& v);

/// Consistency checks on the curvature machinery itself: metric compatibility
/// nabla g = 0 (1e-10), Riemann antisymmetries and first Bianchi (1e-9), and
/// the contracted second Bianchi identity div Q = grad r / 2 (1e-7).
Report curvature_substrate_check(const ManifoldSpec& spec, const CheckOptions& opt = {});

/// Relative residual convention used across all checks.
inline double relative_residual(double residual_norm, double reference_norm) {
  return residual_norm / (1.0 + reference_norm);
}

}  // namespace mkv
