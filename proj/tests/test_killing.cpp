#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mkv/catalog.hpp"

using namespace mkv;

namespace {

ManifoldSpec flat_with(const std::string& name, std::vector<std::string> comps) {
  ManifoldSpec spec = catalog_entry("flat-r3").spec;
  std::vector<Expression> parsed;
  for (const auto& c : comps) parsed.push_back(spec.parse(c));
  spec.fields[name] = std::move(parsed);
  return spec;
}

}  // namespace

TEST_CASE("classification of model fields on the flat chart") {
  {
    const ManifoldSpec spec = catalog_entry("flat-r3").spec;
    const KillingReport kr = classify_field(spec, "V");
    CHECK(kr.classification == FieldClass::Homothetic);
    CHECK(kr.mixed);
    CHECK(kr.f_constant);
    CHECK(kr.f == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(kr.max_projection_residual < 1e-10);
  }
  {
    const ManifoldSpec spec = flat_with("rot", {"-y", "x", "0"});
    const KillingReport kr = classify_field(spec, "rot");
    CHECK(kr.classification == FieldClass::Killing);
    CHECK(kr.mixed);  // vacuously, both sides vanish
  }
  {
    const ManifoldSpec spec = flat_with("quad", {"x^2 + y", "y*z", "x - z^2"});
    const KillingReport kr = classify_field(spec, "quad");
    CHECK(kr.classification == FieldClass::None);
    CHECK_FALSE(kr.mixed);
  }
  {
    // special conformal generator: the factor is the function 2x, and it is
    // not constant along the flow
    const ManifoldSpec spec = flat_with("conf", {"x^2 - y^2 - z^2", "2*x*y", "2*x*z"});
    const KillingReport kr = classify_field(spec, "conf");
    CHECK(kr.classification == FieldClass::Conformal);
    CHECK_FALSE(kr.mixed);
  }
}

TEST_CASE("factor scales linearly with the field") {
  const ManifoldSpec a = catalog_entry("flat-r3").spec;
  const ManifoldSpec b = flat_with("W", {"2*x", "2*(y - z)", "2*(y + z)"});
  const double f1 = classify_field(a, "V").f;
  const double f2 = classify_field(b, "W").f;
  CHECK(f2 == doctest::Approx(2.0 * f1).epsilon(1e-10));
}

TEST_CASE("factor fit is undefined for an isometric field") {
  const ManifoldSpec spec = flat_with("rot", {"-y", "x", "0"});
  const std::vector<double> p = {0.3, 0.1, -0.2};
  const GeometryCache geo = geometry_at(spec, p);
  const FieldJets v = field_jets(spec, "rot", p, 2);
  CHECK_FALSE(estimate_factor(geo, v).defined);
}

TEST_CASE("curvature criteria vanish for seeded dilation-plus-rotation fields") {
  const ManifoldSpec spec = catalog_entry("flat-r3").spec;
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> uni(-1.5, 1.5);
  const char* names[3] = {"x", "y", "z"};
  for (int iter = 0; iter < 15; ++iter) {
    const double lam = uni(rng) + 2.0;  // keep the dilation part away from zero
    double A[3][3] = {};
    for (int i = 0; i < 3; ++i) A[i][i] = lam;
    const double w1 = uni(rng), w2 = uni(rng), w3 = uni(rng);
    A[0][1] -= w3; A[1][0] += w3;
    A[0][2] += w2; A[2][0] -= w2;
    A[1][2] -= w1; A[2][1] += w1;
    std::vector<Expression> comps;
    for (int i = 0; i < 3; ++i) {
      Expression e = Expression::number(uni(rng));
      for (int j = 0; j < 3; ++j)
        e = Expression::add(e, Expression::mul(Expression::number(A[i][j]),
                                               Expression::coordinate(j, names[j])));
      comps.push_back(e);
    }
    const KillingReport kr = classify_components(spec, comps, "seeded", {});
    REQUIRE(kr.mixed);
    REQUIRE(kr.f_constant);
    CHECK(kr.f == doctest::Approx(2.0 * lam).epsilon(1e-9));
    const Report crit = curvature_criteria_check(spec, comps, "seeded", kr.f);
    CHECK(crit.passed());
    CHECK(crit.max_residual < 1e-10);
  }
}

TEST_CASE("criteria verdicts agree with the defining condition pointwise") {
  const ManifoldSpec spec = flat_with("quad", {"x^2", "x*y + z", "y^2 - z"});
  const auto& comps = spec.field("quad");
  for (const auto& p : sample_points(spec, 3)) {
    const GeometryCache geo = geometry_at(spec, p);
    const FieldJets v = field_jets(spec, comps, p, 2);
    const FactorFit fit = estimate_factor(geo, v);
    REQUIRE(fit.defined);
    const bool defining = fit.residual < 1e-8;
    double worst = 0.0;
    for (int j = 0; j < 3; ++j) {
      Vec y(3, 0.0);
      y[static_cast<size_t>(j)] = 1.0;
      worst = std::max(worst, curvature_criterion_vector(geo, v, fit.f, y));
      worst = std::max(worst, curvature_criterion_scalar(geo, v, fit.f, y));
    }
    const bool criteria = worst < 1e-8;
    CHECK(defining == criteria);
  }
}

TEST_CASE("integrand vanishes whenever the criteria do") {
  const ManifoldSpec spec = catalog_entry("flat-r3").spec;
  const auto& comps = spec.field("V");
  for (const auto& p : sample_points(spec, 3)) {
    const GeometryCache geo = geometry_at(spec, p);
    const FieldJets v = field_jets(spec, comps, p, 2);
    CHECK(bochner_integrand(geo, v, 2.0) < 1e-12);
  }
}

TEST_CASE("metric rescaling verdict matches direct reclassification") {
  const ManifoldSpec spec = catalog_entry("flat-r3").spec;
  CHECK(conformal_change_check(spec, "V", spec.parse("1")).passed());
  CHECK(conformal_change_check(spec, "V", spec.parse("exp(x)")).passed());
  CHECK(conformal_change_check(spec, "V", spec.parse("1 + x^2/4")).passed());
}

TEST_CASE("reeb-field analysis on catalog charts") {
  for (const auto& name : catalog_list()) {
    CAPTURE(name);
    const ManifoldSpec spec = catalog_entry(name).spec;
    CHECK(reeb_mixed_killing_check(spec).passed());
    CHECK(two_killing_reeb_check(spec).passed());
  }
}

TEST_CASE("collinear necessary conditions") {
  {
    // h = 0 and constant coefficient: the scaled Reeb field stays isometric
    // and both conditions hold trivially
    const ManifoldSpec spec = catalog_entry("flat-r3").spec;
    const Report r = collinear_field_check(spec, spec.parse("2"));
    CHECK(r.passed());
    CHECK(r.summary.at("max_vector_condition") < 1e-10);
    CHECK(r.summary.at("max_scalar_condition") < 1e-10);
  }
  {
    // h != 0: the conditions are violated, and consistently the scaled Reeb
    // field does not satisfy the second-order condition
    const ManifoldSpec spec = catalog_entry("olszak-halfspace").spec;
    const Report r = collinear_field_check(spec, spec.parse("2"));
    CHECK(r.passed());  // necessity is vacuous here
    CHECK(r.summary.at("mixed") == 0.0);
    CHECK(r.summary.at("max_scalar_condition") > 0.5);
  }
}

TEST_CASE("contact transformation fit") {
  ManifoldSpec spec = catalog_entry("flat-r3").spec;
  spec.fields["stretch"] = {spec.parse("x"), spec.parse("0"), spec.parse("0")};
  const ContactTransformFit fit = contact_transformation_check(spec, "stretch");
  CHECK(fit.report.passed());
  CHECK(fit.sigma_constant);
  CHECK(fit.sigma == doctest::Approx(1.0).epsilon(1e-10));
}
