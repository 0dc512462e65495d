#pragma once

#include "mkv/contact.hpp"

namespace mkv {

enum class FieldClass { Killing, TwoKilling, Homothetic, Conformal, MixedKilling, None };
const char* field_class_name(FieldClass c);

/// Projection coefficient of L_VL_Vg onto L_Vg in the g-inner product, with
/// the orthogonal-projection residual. Undefined at points where V is
/// Killing-degenerate (|L_Vg| below eps).
struct FactorFit {
  double f = 0.0;
  double residual = 0.0;
  bool defined = false;
};
FactorFit estimate_factor(const GeometryCache& geo, const FieldJets& v, double eps = 1e-8);

struct KillingReport {
  std::string field;
  FieldClass classification = FieldClass::None;
  /// True when the field satisfies the defining second-order condition with a
  /// nonzero factor: always for Killing fields (vacuously), for homothetic
  /// fields with nonzero factor, for conformal fields whose factor is flow
  /// constant, and for every MixedKilling classification.
  bool mixed = false;
  double f = 0.0;
  bool f_constant = false;
  double max_lie_norm = 0.0;
  double max_second_lie_norm = 0.0;
  double max_projection_residual = 0.0;
  Report report;
};

KillingReport classify_field(const ManifoldSpec& spec, const std::string& field_name,
                             const CheckOptions& opt = {});
KillingReport classify_components(const ManifoldSpec& spec, const std::vector<Expression>& comps,
                                  const std::string& display_name, const CheckOptions& opt = {});

/// Pointwise residuals of the curvature criteria for a candidate factor f.
double curvature_criterion_vector(const GeometryCache& geo, const FieldJets& v, double f,
                                  const Vec& y);
double curvature_criterion_scalar(const GeometryCache& geo, const FieldJets& v, double f,
                                  const Vec& y);
/// Ric(V,V) - div(nabla_V V) - |nabla V|^2 + f div V.
double bochner_integrand(const GeometryCache& geo, const FieldJets& v, double f);

/// Residuals of the vector criterion, its scalar contraction, the trace form
/// and the divergence-style integrand for a candidate constant factor f,
/// probed with the coordinate basis at every sample point.
Report curvature_criteria_check(const ManifoldSpec& spec, const std::vector<Expression>& comps,
                                const std::string& display_name, double f,
                                const CheckOptions& opt = {});

/// Scales the metric to rho*g and compares the invariance identity
/// 2(Vrho)L_Vg = [f(Vrho) - V(Vrho)]g against direct reclassification.
Report conformal_change_check(const ManifoldSpec& spec, const std::string& field_name,
                              const Expression& rho, const CheckOptions& opt = {});

/// Reeb-field program: the two Lie-derivative formulas in terms of h and h',
/// classification of xi, the h=0 equivalence, and (when applicable) the
/// factor identities for nabla_xi h' and R(Y,xi)xi.
Report reeb_mixed_killing_check(const ManifoldSpec& spec, const CheckOptions& opt = {});

/// Equivalence L_xi L_xi g = 0 <=> nabla_xi h = -2 phi h^2, both sides
/// computed independently.
Report two_killing_reeb_check(const ManifoldSpec& spec, const CheckOptions& opt = {});

/// Necessary conditions for V = alpha*xi: the vector condition
/// alpha^2 (nabla_xi h)X = (phiX alpha)(grad alpha - (xi alpha) xi) and the
/// scalar condition (xi alpha)^2 = |grad alpha|^2 + alpha^2 tr h^2.
Report collinear_field_check(const ManifoldSpec& spec, const Expression& alpha,
                             const CheckOptions& opt = {},
                             const std::optional<Expression>& factor = std::nullopt);

struct ContactTransformFit {
  double sigma = 0.0;
  bool sigma_constant = false;
  double residual = 0.0;
  Report report;
};
/// Fits sigma from L_V eta = sigma * eta; when h vanishes and the fit is
/// clean, additionally checks grad sigma = (xi sigma) xi.
ContactTransformFit contact_transformation_check(const ManifoldSpec& spec,
                                                 const std::string& field_name,
                                                 const CheckOptions& opt = {});

}  // namespace mkv
