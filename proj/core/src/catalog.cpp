#include "mkv/catalog.hpp"

#include <algorithm>
#include <cmath>

namespace mkv {
namespace {

std::vector<std::vector<double>> check_points(const ManifoldSpec& spec, const CheckOptions& opt) {
  if (opt.point) {
    if (static_cast<int>(opt.point->size()) != spec.dim)
      throw SpecError("point has wrong dimension for '" + spec.name + "'");
    return {*opt.point};
  }
  return sample_points(spec, opt.grid);
}

CatalogEntry make_flat_r3() {
  CatalogEntry e;
  ManifoldSpec& s = e.spec;
  s.name = "flat-r3";
  s.dim = 3;
  s.coordinates = {"x", "y", "z"};
  s.domain = {{-1, 1}, {-1, 1}, {-1, 1}};
  auto E = [&](const char* t) { return s.parse(t); };
  s.metric = {{E("1"), E("0"), E("0")}, {E("0"), E("1"), E("0")}, {E("0"), E("0"), E("1")}};
  s.fields["V"] = {E("x"), E("y-z"), E("y+z")};
  s.fields["translation"] = {E("1"), E("0"), E("0")};
  ContactBlock blk;
  blk.xi = {E("1"), E("0"), E("0")};
  blk.eta = {{E("1"), E("0"), E("0")}};
  blk.phi = {{E("0"), E("0"), E("0")}, {E("0"), E("0"), E("-1")}, {E("0"), E("1"), E("0")}};
  s.structure = std::move(blk);

  FrameTable t;
  t.frame = {{E("1"), E("0"), E("0")}, {E("0"), E("1"), E("0")}, {E("0"), E("0"), E("1")}};
  auto zeros3 = [&] { return std::vector<Expression>{E("0"), E("0"), E("0")}; };
  t.bracket.assign(3, std::vector<std::vector<Expression>>(3));
  t.connection.assign(3, std::vector<std::vector<Expression>>(3));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      t.bracket[i][j] = zeros3();
      t.connection[i][j] = zeros3();
    }
  t.h_action = {zeros3(), zeros3(), zeros3()};
  e.table = std::move(t);
  return e;
}

CatalogEntry make_olszak_halfspace() {
  CatalogEntry e;
  ManifoldSpec& s = e.spec;
  s.name = "olszak-halfspace";
  s.dim = 3;
  s.coordinates = {"x", "y", "z"};
  s.domain = {{-1, 1}, {-1, 1}, {0.25, 4}};
  s.parameters = {{"a", 1.0}};
  auto E = [&](const char* t) { return s.parse(t); };
  s.metric = {{E("z^2"), E("0"), E("0")},
              {E("0"), E("exp(2*a*x)/z^2"), E("0")},
              {E("0"), E("0"), E("1")}};
  ContactBlock blk;
  blk.xi = {E("0"), E("0"), E("1")};
  blk.eta = {{E("0"), E("0"), E("1")}};
  blk.phi = {{E("0"), E("-exp(a*x)/z^2"), E("0")},
             {E("z^2/exp(a*x)"), E("0"), E("0")},
             {E("0"), E("0"), E("0")}};
  s.structure = std::move(blk);
  s.fields["xi"] = {E("0"), E("0"), E("1")};

  FrameTable t;
  t.frame = {{E("1/z"), E("0"), E("0")},
             {E("0"), E("z/exp(a*x)"), E("0")},
             {E("0"), E("0"), E("1")}};
  auto zeros3 = [&] { return std::vector<Expression>{E("0"), E("0"), E("0")}; };
  t.bracket.assign(3, std::vector<std::vector<Expression>>(3));
  t.connection.assign(3, std::vector<std::vector<Expression>>(3));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      t.bracket[i][j] = zeros3();
      t.connection[i][j] = zeros3();
    }
  t.bracket[0][1] = {E("0"), E("-a/z"), E("0")};
  t.bracket[0][2] = {E("1/z"), E("0"), E("0")};
  t.bracket[1][2] = {E("0"), E("-1/z"), E("0")};
  t.connection[0][0] = {E("0"), E("0"), E("-1/z")};
  t.connection[1][0] = {E("0"), E("a/z"), E("0")};
  t.connection[1][1] = {E("-a/z"), E("0"), E("1/z")};
  t.connection[0][2] = {E("1/z"), E("0"), E("0")};
  t.connection[1][2] = {E("0"), E("-1/z"), E("0")};
  t.h_action = {{E("0"), E("1/z"), E("0")}, {E("1/z"), E("0"), E("0")}, zeros3()};
  e.table = std::move(t);
  return e;
}

CatalogEntry make_group_h() {
  CatalogEntry e;
  ManifoldSpec& s = e.spec;
  s.name = "group-H";
  s.dim = 3;  // n = 1 model of the 2n+1 family
  s.coordinates = {"x0", "x1", "x2"};
  s.domain = {{-1, 1}, {-1, 1}, {-1, 1}};
  s.parameters = {{"a1", 1.0}};
  auto E = [&](const char* t) { return s.parse(t); };
  // Coordinate metric making {d/dx0, exp(-a1 x0) d/dx1, exp(a1 x0) d/dx2}
  // orthonormal.
  s.metric = {{E("1"), E("0"), E("0")},
              {E("0"), E("exp(2*a1*x0)"), E("0")},
              {E("0"), E("0"), E("exp(-2*a1*x0)")}};
  ContactBlock blk;
  blk.xi = {E("1"), E("0"), E("0")};
  blk.eta = {{E("1"), E("0"), E("0")}};
  blk.phi = {{E("0"), E("0"), E("0")},
             {E("0"), E("0"), E("-exp(-2*a1*x0)")},
             {E("0"), E("exp(2*a1*x0)"), E("0")}};
  s.structure = std::move(blk);
  s.fields["xi"] = {E("1"), E("0"), E("0")};

  FrameTable t;
  t.frame = {{E("1"), E("0"), E("0")},
             {E("0"), E("exp(-a1*x0)"), E("0")},
             {E("0"), E("0"), E("exp(a1*x0)")}};
  auto zeros3 = [&] { return std::vector<Expression>{E("0"), E("0"), E("0")}; };
  t.bracket.assign(3, std::vector<std::vector<Expression>>(3));
  t.connection.assign(3, std::vector<std::vector<Expression>>(3));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      t.bracket[i][j] = zeros3();
      t.connection[i][j] = zeros3();
    }
  t.bracket[0][1] = {E("0"), E("-a1"), E("0")};
  t.bracket[0][2] = {E("0"), E("0"), E("a1")};
  t.connection[1][0] = {E("0"), E("a1"), E("0")};
  t.connection[2][0] = {E("0"), E("0"), E("-a1")};
  t.connection[1][1] = {E("-a1"), E("0"), E("0")};
  t.connection[2][2] = {E("a1"), E("0"), E("0")};
  t.h_action = {zeros3(), {E("0"), E("0"), E("a1")}, {E("0"), E("a1"), E("0")}};
  e.table = std::move(t);
  return e;
}

CatalogEntry make_r_cross_s2() {
  CatalogEntry e;
  ManifoldSpec& s = e.spec;
  s.name = "r-cross-s2";
  s.dim = 3;
  s.coordinates = {"u", "t", "p"};
  s.domain = {{-1, 1}, {0.3, 2.8}, {-1, 1}};
  auto E = [&](const char* t) { return s.parse(t); };
  s.metric = {{E("1"), E("0"), E("0")},
              {E("0"), E("1"), E("0")},
              {E("0"), E("0"), E("sin(t)^2")}};
  ContactBlock blk;
  blk.xi = {E("1"), E("0"), E("0")};
  blk.eta = {{E("1"), E("0"), E("0")}};
  blk.phi = {{E("0"), E("0"), E("0")},
             {E("0"), E("0"), E("-sin(t)")},
             {E("0"), E("1/sin(t)"), E("0")}};
  s.structure = std::move(blk);
  s.fields["xi"] = {E("1"), E("0"), E("0")};

  FrameTable t;
  t.frame = {{E("1"), E("0"), E("0")},
             {E("0"), E("1"), E("0")},
             {E("0"), E("0"), E("1/sin(t)")}};
  auto zeros3 = [&] { return std::vector<Expression>{E("0"), E("0"), E("0")}; };
  t.bracket.assign(3, std::vector<std::vector<Expression>>(3));
  t.connection.assign(3, std::vector<std::vector<Expression>>(3));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      t.bracket[i][j] = zeros3();
      t.connection[i][j] = zeros3();
    }
  t.bracket[1][2] = {E("0"), E("0"), E("-cos(t)/sin(t)")};
  t.connection[2][1] = {E("0"), E("0"), E("cos(t)/sin(t)")};
  t.connection[2][2] = {E("0"), E("-cos(t)/sin(t)"), E("0")};
  t.h_action = {zeros3(), zeros3(), zeros3()};
  e.table = std::move(t);
  return e;
}

Vec solve_in_frame(const Nd<2>& frame_cols, const Vec& v) {
  // frame_cols(i,k) = coordinate component i of e_k; returns coefficients c
  // with sum_k c_k e_k = v. Gaussian elimination, n <= 5.
  const int n = frame_cols.extent();
  std::vector<std::vector<double>> m(static_cast<size_t>(n),
                                     std::vector<double>(static_cast<size_t>(n) + 1, 0.0));
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) m[static_cast<size_t>(i)][static_cast<size_t>(k)] = frame_cols(i, k);
    m[static_cast<size_t>(i)][static_cast<size_t>(n)] = v[static_cast<size_t>(i)];
  }
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(m[static_cast<size_t>(r)][static_cast<size_t>(col)]) >
          std::abs(m[static_cast<size_t>(piv)][static_cast<size_t>(col)]))
        piv = r;
    std::swap(m[static_cast<size_t>(col)], m[static_cast<size_t>(piv)]);
    const double d = m[static_cast<size_t>(col)][static_cast<size_t>(col)];
    if (std::abs(d) < 1e-14) throw SpecError("frame is degenerate at a sample point");
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const double fac = m[static_cast<size_t>(r)][static_cast<size_t>(col)] / d;
      for (int cc = col; cc <= n; ++cc)
        m[static_cast<size_t>(r)][static_cast<size_t>(cc)] -=
            fac * m[static_cast<size_t>(col)][static_cast<size_t>(cc)];
    }
  }
  Vec c(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i)
    c[static_cast<size_t>(i)] =
        m[static_cast<size_t>(i)][static_cast<size_t>(n)] / m[static_cast<size_t>(i)][static_cast<size_t>(i)];
  return c;
}

}  // namespace

std::vector<std::string> catalog_list() {
  return {"flat-r3", "olszak-halfspace", "group-H", "r-cross-s2"};
}

CatalogEntry catalog_entry(const std::string& name) {
  if (name == "flat-r3") return make_flat_r3();
  if (name == "olszak-halfspace") return make_olszak_halfspace();
  if (name == "group-H") return make_group_h();
  if (name == "r-cross-s2") return make_r_cross_s2();
  throw SpecError("unknown catalog entry '" + name + "'");
}

Report verify_frame_table(const std::string& name, const CheckOptions& opt) {
  const CatalogEntry entry = catalog_entry(name);
  if (!entry.table) throw SpecError("catalog entry '" + name + "' has no frame table");
  const ManifoldSpec& spec = entry.spec;
  const FrameTable& t = *entry.table;
  const double tol = opt.tol.value_or(1e-8);
  ReportBuilder b(spec.name, "frame-table", tol);
  const int n = spec.dim;
  const auto pvals = spec.parameter_values();

  double ortho_worst = 0.0;
  for (const auto& p : check_points(spec, opt)) {
    try {
      const GeometryCache geo = geometry_at(spec, p);
      const StructureAtPoint st = structure_at(spec, p);
      std::vector<FieldJets> frame;
      Nd<2> cols(n);
      for (int k = 0; k < n; ++k) {
        frame.push_back(field_jets(spec, t.frame[static_cast<size_t>(k)], p, 1));
        for (int i = 0; i < n; ++i) cols(i, k) = frame.back().value(i);
      }

      double worst = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double gij = 0.0;
          for (int a = 0; a < n; ++a)
            for (int c = 0; c < n; ++c) gij += geo.g(a, c) * cols(a, i) * cols(c, j);
          ortho_worst = std::max(ortho_worst, std::abs(gij - (i == j ? 1.0 : 0.0)));
        }

      auto published = [&](const std::vector<Expression>& coeffs) {
        Vec out(static_cast<size_t>(n));
        for (int k = 0; k < n; ++k)
          out[static_cast<size_t>(k)] = coeffs[static_cast<size_t>(k)].eval_value(p, pvals);
        return out;
      };
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          // coordinate bracket [e_i, e_j]
          Vec br(static_cast<size_t>(n), 0.0);
          for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l)
              br[static_cast<size_t>(k)] += frame[static_cast<size_t>(i)].value(l) *
                                                frame[static_cast<size_t>(j)].d(k, l) -
                                            frame[static_cast<size_t>(j)].value(l) *
                                                frame[static_cast<size_t>(i)].d(k, l);
          // the tables list brackets only for i < j (antisymmetry)
          std::optional<Vec> want_b;
          if (i < j) {
            want_b = published(t.bracket[static_cast<size_t>(i)][static_cast<size_t>(j)]);
          }
          const Vec bc = solve_in_frame(cols, br);
          // connection nabla_{e_i} e_j
          Vec cv(static_cast<size_t>(n), 0.0);
          for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) {
              cv[static_cast<size_t>(k)] += frame[static_cast<size_t>(i)].value(l) *
                                            frame[static_cast<size_t>(j)].d(k, l);
              for (int m = 0; m < n; ++m)
                cv[static_cast<size_t>(k)] += frame[static_cast<size_t>(i)].value(l) *
                                              geo.gamma(k, l, m) *
                                              frame[static_cast<size_t>(j)].value(m);
            }
          const Vec cc = solve_in_frame(cols, cv);
          const Vec want_c = published(t.connection[static_cast<size_t>(i)][static_cast<size_t>(j)]);
          for (int k = 0; k < n; ++k) {
            if (want_b)
              worst = std::max(worst, std::abs(bc[static_cast<size_t>(k)] -
                                               (*want_b)[static_cast<size_t>(k)]));
            worst = std::max(worst, std::abs(cc[static_cast<size_t>(k)] -
                                             want_c[static_cast<size_t>(k)]));
          }
        }
      // h action on the frame
      for (int i = 0; i < n; ++i) {
        Vec hv(static_cast<size_t>(n), 0.0);
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l)
            hv[static_cast<size_t>(k)] += st.h(k, l) * cols(l, i);
        const Vec hc = solve_in_frame(cols, hv);
        const Vec want_h = published(t.h_action[static_cast<size_t>(i)]);
        for (int k = 0; k < n; ++k)
          worst = std::max(worst,
                           std::abs(hc[static_cast<size_t>(k)] - want_h[static_cast<size_t>(k)]));
      }
      b.add_point(p, worst);
    } catch (const SpecError&) {
      throw;
    } catch (const std::exception& e) {
      b.note_failure(p, e.what());
    }
  }
  b.set_summary("max_orthonormality_dev", ortho_worst);
  Report rep = b.finish();
  if (ortho_worst > 1e-10) {
    rep.verdict = Verdict::Fail;
    rep.warnings.push_back("frame is not orthonormal");
  }
  return rep;
}

Report reproduce_entry(const std::string& name, const CheckOptions& opt) {
  const CatalogEntry entry = catalog_entry(name);
  const ManifoldSpec& spec = entry.spec;
  ReportBuilder b(spec.name, "claims-checklist", opt.tol.value_or(1e-7));
  int failures = 0;
  auto claim = [&](const std::string& label, bool ok) {
    b.set_summary("claim " + label, ok ? 1.0 : 0.0);
    if (!ok) {
      ++failures;
      b.warn("claim failed: " + label);
    }
  };
  CheckOptions sub = opt;
  sub.tol.reset();

  const Report axioms = validate_structure(spec, sub);
  claim("structure axioms", axioms.passed());
  const Report closed = is_almost_cokahler(spec, sub);
  claim("closed forms", closed.passed());
  const Report idents = verify_structure_identities(spec, sub);
  claim("structure identities", idents.passed());
  const Report cok = is_cokahler(spec, sub);
  const Report leaves = kahlerian_leaves_check(spec, sub);
  claim("leafwise criterion", leaves.passed());
  const Report reeb = reeb_mixed_killing_check(spec, sub);
  claim("reeb analysis", reeb.passed());
  const Report twok = two_killing_reeb_check(spec, sub);
  claim("second-order criterion agreement", twok.passed());
  if (entry.table) claim("frame table", verify_frame_table(name, sub).passed());

  double max_h = 0.0;
  for (const auto& p : check_points(spec, sub)) {
    const StructureAtPoint s = structure_at(spec, p);
    max_h = std::max(max_h, s.h.max_abs());
  }
  const KillingReport xi_cls = classify_components(spec, spec.structure->xi, "xi", sub);

  if (name == "flat-r3") {
    claim("parallel phi", cok.passed());
    const Report normal = nijenhuis_normality(spec, sub);
    claim("normal structure", normal.passed());
    claim("h vanishes", max_h < 1e-8);
    claim("reeb field isometric", xi_cls.classification == FieldClass::Killing);
    const KillingReport v = classify_field(spec, "V", sub);
    claim("named field factor two",
          v.mixed && v.f_constant && std::abs(v.f - 2.0) < 1e-8 &&
              v.max_projection_residual < 1e-10);
    claim("translation isometric",
          classify_field(spec, "translation", sub).classification == FieldClass::Killing);
    const EtaEinsteinFit ee = eta_einstein_fit(spec, sub);
    claim("ricci flat fit", std::abs(ee.a) < 1e-8 && std::abs(ee.b) < 1e-8);
  } else if (name == "olszak-halfspace") {
    claim("not parallel phi", !cok.passed());
    claim("not normal", !nijenhuis_normality(spec, sub).passed());
    claim("h nonzero", max_h > 1e-2);
    claim("reeb field not second-order compatible", !xi_cls.mixed);
    const Report coll = collinear_field_check(spec, spec.parse("2"), sub);
    claim("constant multiple fails necessary pair",
          coll.summary.at("max_scalar_condition") > 1e-2 && coll.passed());
    // Ric(xi,xi) = -2/z^2 at a probe point
    CheckOptions at;
    at.point = std::vector<double>{0.2, -0.3, 2.0};
    const StructureAtPoint s = structure_at(spec, *at.point);
    double ricxx = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        ricxx += s.geo.ricci(i, j) * s.xi.value(i) * s.xi.value(j);
    claim("reeb ricci value", std::abs(ricxx + 2.0 / 4.0) < 1e-8);
  } else if (name == "group-H") {
    claim("not parallel phi", !cok.passed());
    claim("h nonzero", max_h > 1e-2);
    claim("reeb field not second-order compatible", !xi_cls.mixed);
    // nabla_xi h = 0 everywhere, yet the second Lie derivative is large.
    double max_nxh = 0.0, max_lie2 = 0.0;
    for (const auto& p : check_points(spec, sub)) {
      const StructureAtPoint s = structure_at(spec, p);
      max_nxh = std::max(max_nxh, s.nabla_along_xi(s.h, s.dh).max_abs());
      const GeometryCache geo = s.geo;
      max_lie2 = std::max(max_lie2, second_lie_derivative_metric(geo, s.xi).max_abs());
    }
    claim("h parallel along reeb", max_nxh < 1e-8);
    claim("second lie derivative large", max_lie2 > 1.0);
  } else if (name == "r-cross-s2") {
    claim("parallel phi", cok.passed());
    claim("h vanishes", max_h < 1e-8);
    claim("reeb field isometric", xi_cls.classification == FieldClass::Killing);
    const EtaEinsteinFit ee = eta_einstein_fit(spec, sub);
    claim("fit a=1 b=-1",
          ee.residual < 1e-8 && std::abs(ee.a - 1.0) < 1e-8 && std::abs(ee.b + 1.0) < 1e-8);
    double r = geometry_at(spec, std::vector<double>{0.0, 1.2, 0.1}).scalar;
    claim("scalar curvature two", std::abs(r - 2.0) < 1e-8);
  }

  claim("h equivalence", (max_h < 1e-8) == (xi_cls.classification == FieldClass::Killing));
  b.set_summary("max_h", max_h);
  return b.finish(failures == 0);
}

std::vector<Report> reproduce_entries(const std::string& name_or_all, const CheckOptions& opt) {
  std::vector<Report> out;
  if (name_or_all == "all") {
    for (const auto& n : catalog_list()) out.push_back(reproduce_entry(n, opt));
  } else {
    out.push_back(reproduce_entry(name_or_all, opt));
  }
  return out;
}

}  // namespace mkv
