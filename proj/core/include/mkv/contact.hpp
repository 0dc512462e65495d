#pragma once

#include "mkv/geometry.hpp"
#include "mkv/report.hpp"

namespace mkv {

/// Almost contact structure data evaluated at a point: the geometry cache,
/// the structure tensors with enough partials for the identity checks, and the
/// derived operators h and h' = hφ. η is always recomputed as g·ξ.
struct StructureAtPoint {
  GeometryCache geo;
  FieldJets xi;       // order-2 jets of ξ
  Vec eta;            // η_i
  Nd<2> deta_full;    // ∂_a η_i
  Nd<2> phi;          // φ^i_j
  Nd<3> dphi;         // ∂_a φ^i_j
  Nd<2> h, hprime;    // h^i_j, h'^i_j
  Nd<3> dh, dhprime;  // ∂_a h^i_j, ∂_a h'^i_j
  double tr_h2 = 0.0;

  Nd<2> deta_form() const;  // (dη)_ij = ∂_i η_j − ∂_j η_i
  Nd<2> fundamental() const;  // Φ_ij = g(e_i, φ e_j)
  Nd<2> nabla_along_xi(const Nd<2>& op, const Nd<3>& dop) const;  // (∇_ξ T)^i_j
  Nd<3> nabla_op(const Nd<2>& op, const Nd<3>& dop) const;        // (∇_a T)^i_j
};

StructureAtPoint structure_at(const ManifoldSpec& spec, std::span<const double> p);

/// Sanity gate for any structure-level check: contact block present, odd
/// dimension, η (when given) consistent with g·ξ.
void require_structure(const ManifoldSpec& spec);

Report validate_structure(const ManifoldSpec& spec, const CheckOptions& opt = {});
Report is_almost_cokahler(const ManifoldSpec& spec, const CheckOptions& opt = {});
Report verify_structure_identities(const ManifoldSpec& spec, const CheckOptions& opt = {});
Report nijenhuis_normality(const ManifoldSpec& spec, const CheckOptions& opt = {});
Report is_cokahler(const ManifoldSpec& spec, const CheckOptions& opt = {});
Report kahlerian_leaves_check(const ManifoldSpec& spec, const CheckOptions& opt = {});

struct EtaEinsteinFit {
  double a = 0.0, b = 0.0;      // aggregate (mean over points)
  double residual = 0.0;        // max relative projection residual
  double closed_form_dev = 0.0; // max |fit − closed form| over points
  Report report;
};
EtaEinsteinFit eta_einstein_fit(const ManifoldSpec& spec, const CheckOptions& opt = {});

struct KappaMuFit {
  double kappa = 0.0, mu = 0.0;
  double residual = 0.0;
  Report report;
};
KappaMuFit kappa_mu_fit(const ManifoldSpec& spec, const CheckOptions& opt = {});

struct DeformationParams {
  Expression u;   // nonzero, varies along ξ only
  double c = 1.0; // positive
};

struct DeformationResult {
  ManifoldSpec deformed;
  Report report;  // u-admissibility, deformed axioms, H = h/u
};
DeformationResult d_homothetic_deform(const ManifoldSpec& spec, const DeformationParams& params,
                                      const CheckOptions& opt = {});

}  // namespace mkv
