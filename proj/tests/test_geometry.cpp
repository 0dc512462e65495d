#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mkv/catalog.hpp"

using namespace mkv;

namespace {

// Plain Gauss-Jordan inverse, independent of the library's linear algebra.
std::vector<std::vector<double>> invert(std::vector<std::vector<double>> m) {
  const size_t n = m.size();
  std::vector<std::vector<double>> inv(n, std::vector<double>(n, 0.0));
  for (size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
  for (size_t col = 0; col < n; ++col) {
    size_t piv = col;
    for (size_t r = col + 1; r < n; ++r)
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    std::swap(m[piv], m[col]);
    std::swap(inv[piv], inv[col]);
    const double d = m[col][col];
    REQUIRE(std::abs(d) > 1e-14);
    for (size_t j = 0; j < n; ++j) {
      m[col][j] /= d;
      inv[col][j] /= d;
    }
    for (size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = m[r][col];
      for (size_t j = 0; j < n; ++j) {
        m[r][j] -= f * m[col][j];
        inv[r][j] -= f * inv[col][j];
      }
    }
  }
  return inv;
}

double metric_entry(const ManifoldSpec& spec, int i, int j, const std::vector<double>& p) {
  return spec.metric[static_cast<size_t>(i)][static_cast<size_t>(j)].eval_value(
      p, spec.parameter_values());
}

}  // namespace

TEST_CASE("christoffel symbols against a finite-difference oracle") {
  for (const auto& name : catalog_list()) {
    CAPTURE(name);
    const ManifoldSpec spec = catalog_entry(name).spec;
    const int n = spec.dim;
    auto pts = sample_points(spec, 2);
    pts.resize(6);
    for (const auto& p : pts) {
      const GeometryCache geo = geometry_at(spec, p);
      std::vector<std::vector<double>> g(static_cast<size_t>(n), std::vector<double>(n));
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g[static_cast<size_t>(i)][static_cast<size_t>(j)] =
            metric_entry(spec, i, j, p);
      const auto ginv = invert(g);
      const double h = 1e-3;
      auto dg = [&](int a, int i, int j) {
        auto at = [&](double off) {
          std::vector<double> q = p;
          q[static_cast<size_t>(a)] += off;
          return metric_entry(spec, i, j, q);
        };
        return (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
      };
      for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            double want = 0.0;
            for (int l = 0; l < n; ++l)
              want += 0.5 * ginv[static_cast<size_t>(k)][static_cast<size_t>(l)] *
                      (dg(i, l, j) + dg(j, l, i) - dg(l, i, j));
            CHECK(geo.gamma(k, i, j) == doctest::Approx(want).epsilon(1e-6).scale(1.0));
          }
    }
  }
}

TEST_CASE("curvature substrate identities hold on every catalog chart") {
  for (const auto& name : catalog_list()) {
    CAPTURE(name);
    const Report r = curvature_substrate_check(catalog_entry(name).spec);
    CHECK(r.passed());
    CHECK(r.summary.at("max_metric_compatibility") < 1e-10);
    CHECK(r.summary.at("max_contracted_bianchi") < 1e-7);
  }
}

TEST_CASE("flat chart has vanishing curvature") {
  const ManifoldSpec spec = catalog_entry("flat-r3").spec;
  const GeometryCache geo = geometry_at(spec, std::vector<double>{0.3, -0.2, 0.7});
  CHECK(geo.riemann.max_abs() < 1e-14);
  CHECK(std::abs(geo.scalar) < 1e-14);
}

TEST_CASE("product of a line and a round sphere has scalar curvature two") {
  const ManifoldSpec spec = catalog_entry("r-cross-s2").spec;
  for (const auto& p : {std::vector<double>{0.0, 1.0, 0.5}, std::vector<double>{0.4, 2.1, -0.9}}) {
    const GeometryCache geo = geometry_at(spec, p);
    CHECK(geo.scalar == doctest::Approx(2.0).epsilon(1e-10));
  }
}

TEST_CASE("rotation fields are isometric, radial fields homothetic") {
  ManifoldSpec spec = catalog_entry("flat-r3").spec;
  spec.fields["rot"] = {spec.parse("-y"), spec.parse("x"), spec.parse("0")};
  spec.fields["radial"] = {spec.parse("x"), spec.parse("y"), spec.parse("z")};
  const std::vector<double> p = {0.4, -0.7, 0.2};
  const GeometryCache geo = geometry_at(spec, p);
  {
    const FieldJets v = field_jets(spec, "rot", p, 2);
    CHECK(lie_derivative_metric(geo, v).max_abs() < 1e-14);
  }
  {
    const FieldJets v = field_jets(spec, "radial", p, 2);
    const Nd<2> lie = lie_derivative_metric(geo, v);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        CHECK(lie(i, j) == doctest::Approx(2.0 * geo.g(i, j)).epsilon(1e-12));
  }
}

TEST_CASE("second-order derivative of the metric along a linear field, closed form") {
  // For V = A x on a flat chart both derivatives have constant closed forms:
  // the first is S = A + A^T, the second is A^T S + S A.
  ManifoldSpec spec = catalog_entry("flat-r3").spec;
  std::mt19937 rng(91);
  std::uniform_real_distribution<double> uni(-2.0, 2.0);
  for (int iter = 0; iter < 20; ++iter) {
    double A[3][3];
    std::vector<Expression> comps;
    const char* names[3] = {"x", "y", "z"};
    for (int i = 0; i < 3; ++i) {
      Expression e = Expression::number(0.0);
      for (int j = 0; j < 3; ++j) {
        A[i][j] = uni(rng);
        e = Expression::add(e, Expression::mul(Expression::number(A[i][j]),
                                               Expression::coordinate(j, names[j])));
      }
      comps.push_back(e);
    }
    const std::vector<double> p = {uni(rng) / 4, uni(rng) / 4, uni(rng) / 4};
    const GeometryCache geo = geometry_at(spec, p);
    const FieldJets v = field_jets(spec, comps, p, 2);
    double S[3][3], L2[3][3];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) S[i][j] = A[i][j] + A[j][i];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        L2[i][j] = 0.0;
        for (int k = 0; k < 3; ++k) L2[i][j] += A[k][i] * S[k][j] + S[i][k] * A[k][j];
      }
    const Nd<2> lie = lie_derivative_metric(geo, v);
    const Nd<2> lie2 = second_lie_derivative_metric(geo, v);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        CHECK(lie(i, j) == doctest::Approx(S[i][j]).epsilon(1e-12));
        CHECK(lie2(i, j) == doctest::Approx(L2[i][j]).epsilon(1e-12));
      }
  }
}

TEST_CASE("degenerate metric is rejected") {
  ManifoldSpec spec = catalog_entry("flat-r3").spec;
  spec.metric[2][2] = spec.parse("0");
  CHECK_THROWS_AS(geometry_at(spec, std::vector<double>{0.1, 0.2, 0.3}), DegenerateMetricError);
}

TEST_CASE("divergence and gradient on a known scalar") {
  const ManifoldSpec spec = catalog_entry("flat-r3").spec;
  const std::vector<double> p = {0.2, -0.4, 0.6};
  const GeometryCache geo = geometry_at(spec, p);
  const Expression s = spec.parse("x^2*y + z");
  const Jet j = s.eval(p, spec.parameter_values(), 1);
  const Vec grad = gradient(geo, j);
  CHECK(grad[0] == doctest::Approx(2 * p[0] * p[1]));
  CHECK(grad[1] == doctest::Approx(p[0] * p[0]));
  CHECK(grad[2] == doctest::Approx(1.0));
}
