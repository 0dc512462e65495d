#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mkv/catalog.hpp"
#include "mkv/realline.hpp"
#include "mkv/spec_io.hpp"

namespace {

using namespace mkv;

struct CommonArgs {
  bool json = false;
  int grid = 5;
  double tol = -1.0;  // negative means "module default"
  std::string point;  // "x=0.1,y=-2"
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_flag("--json", args.json, "emit a machine-readable report document");
  cmd->add_option("--grid", args.grid, "grid points per coordinate axis")->check(CLI::PositiveNumber);
  cmd->add_option("--tol", args.tol, "override the check tolerance");
  cmd->add_option("--point", args.point, "evaluate at a single point, coord=value,...");
}

std::vector<double> parse_point(const ManifoldSpec& spec, const std::string& text) {
  std::vector<double> p(spec.coordinates.size(), 0.0);
  std::vector<bool> seen(spec.coordinates.size(), false);
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw SpecError("--point entries must look like coord=value");
    const std::string name = item.substr(0, eq);
    auto it = std::find(spec.coordinates.begin(), spec.coordinates.end(), name);
    if (it == spec.coordinates.end()) throw SpecError("--point names unknown coordinate '" + name + "'");
    const size_t idx = static_cast<size_t>(it - spec.coordinates.begin());
    try {
      p[idx] = std::stod(item.substr(eq + 1));
    } catch (const std::exception&) {
      throw SpecError("--point value for '" + name + "' is not a number");
    }
    seen[idx] = true;
  }
  for (size_t i = 0; i < seen.size(); ++i)
    if (!seen[i]) throw SpecError("--point is missing coordinate '" + spec.coordinates[i] + "'");
  return p;
}

CheckOptions make_options(const CommonArgs& args, const ManifoldSpec* spec) {
  CheckOptions opt;
  opt.grid = args.grid;
  if (args.tol >= 0.0) opt.tol = args.tol;
  if (!args.point.empty()) {
    if (!spec) throw SpecError("--point is not meaningful for this subcommand");
    opt.point = parse_point(*spec, args.point);
  }
  return opt;
}

void emit(const std::vector<Report>& reports, bool json) {
  if (json) {
    if (reports.size() == 1) {
      std::cout << reports.front().to_json() << "\n";
    } else {
      std::cout << "[\n";
      for (size_t i = 0; i < reports.size(); ++i)
        std::cout << reports[i].to_json() << (i + 1 < reports.size() ? ",\n" : "\n");
      std::cout << "]\n";
    }
  } else {
    for (const auto& r : reports) std::cout << r.to_text();
  }
}

int settle(const std::vector<Report>& gating) {
  for (const auto& r : gating)
    if (!r.passed()) return 1;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"verification toolkit for second-order Killing conditions on coordinate charts"};
  app.require_subcommand(1);

  std::string spec_path, field_name, alpha_src, factor_src, u_src, rho_src;
  std::string r_src, f_src, entry_name, out_path;
  double c_value = 1.0, x0 = 1.0, t_end = 2.0, step = 1e-3;
  std::vector<double> line_domain = {0.5, 2.0};
  CommonArgs args;

  auto* validate = app.add_subcommand("validate", "load a chart document and check its schema and structure axioms");
  validate->add_option("spec", spec_path, "chart document path")->required();
  add_common(validate, args);

  auto* curvature = app.add_subcommand("curvature", "curvature substrate self-checks on a chart");
  curvature->add_option("spec", spec_path)->required();
  add_common(curvature, args);

  auto* killing = app.add_subcommand("killing", "classify a named field and test the curvature criteria");
  killing->add_option("spec", spec_path)->required();
  killing->add_option("--field", field_name, "name of the field in the document")->required();
  add_common(killing, args);

  auto* contact = app.add_subcommand("contact", "run the almost contact structure pipeline");
  contact->add_option("spec", spec_path)->required();
  add_common(contact, args);

  auto* reeb = app.add_subcommand("reeb", "Reeb-field second-order analysis and the h = 0 equivalence");
  reeb->add_option("spec", spec_path)->required();
  add_common(reeb, args);

  auto* collinear = app.add_subcommand("collinear", "necessary conditions for a field collinear with the Reeb field");
  collinear->add_option("spec", spec_path)->required();
  collinear->add_option("--alpha", alpha_src, "collinearity coefficient expression")->required();
  collinear->add_option("--factor", factor_src, "optional factor expression for the reduced condition");
  add_common(collinear, args);

  auto* contacttrans = app.add_subcommand("contacttrans", "fit the contact transformation coefficient of a field");
  contacttrans->add_option("spec", spec_path)->required();
  contacttrans->add_option("--field", field_name)->required();
  add_common(contacttrans, args);

  auto* deform = app.add_subcommand("deform", "apply a D-homothetic deformation and verify its invariants");
  deform->add_option("spec", spec_path)->required();
  deform->add_option("--u", u_src, "deformation function expression")->required();
  deform->add_option("--c", c_value, "metric scale constant")->check(CLI::PositiveNumber);
  deform->add_option("--out", out_path, "write the deformed chart document here");
  add_common(deform, args);

  auto* line = app.add_subcommand("line", "one-dimensional model: factor fit, flow integration, closed form");
  line->add_option("--r", r_src, "field component r(x)")->required();
  line->add_option("--f", f_src, "factor expression; fitted pointwise when absent");
  line->add_option("--domain", line_domain, "interval endpoints lo hi")->expected(2);
  line->add_option("--x0", x0, "flow start point");
  line->add_option("--tend", t_end, "flow integration time");
  line->add_option("--step", step, "integrator step")->check(CLI::PositiveNumber);
  add_common(line, args);

  auto* reproduce = app.add_subcommand("reproduce", "verify the published claims for a built-in chart");
  reproduce->add_option("entry", entry_name, "built-in chart name, or 'all'")->required();
  add_common(reproduce, args);

  auto* exp_cmd = app.add_subcommand("export", "write a built-in chart as a document");
  exp_cmd->add_option("entry", entry_name)->required();
  exp_cmd->add_option("out", out_path, "output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*validate) {
      const ManifoldSpec spec = load_spec(spec_path);
      const CheckOptions opt = make_options(args, &spec);
      std::vector<Report> reports;
      if (spec.structure) {
        reports.push_back(validate_structure(spec, opt));
      } else {
        ReportBuilder b(spec.name, "document-schema", 0.0);
        b.set_summary("dimension", spec.dim);
        reports.push_back(b.finish(true));
      }
      emit(reports, args.json);
      return settle(reports);
    }
    if (*curvature) {
      const ManifoldSpec spec = load_spec(spec_path);
      const std::vector<Report> reports = {curvature_substrate_check(spec, make_options(args, &spec))};
      emit(reports, args.json);
      return settle(reports);
    }
    if (*killing) {
      const ManifoldSpec spec = load_spec(spec_path);
      const CheckOptions opt = make_options(args, &spec);
      const KillingReport kr = classify_field(spec, field_name, opt);
      std::vector<Report> reports = {kr.report};
      std::vector<Report> gating;
      if (kr.mixed && kr.f_constant && kr.classification != FieldClass::Killing) {
        reports.push_back(curvature_criteria_check(spec, spec.field(field_name), field_name, kr.f, opt));
        gating.push_back(reports.back());
      }
      if (!args.json)
        std::cout << "classification: " << field_class_name(kr.classification)
                  << (kr.mixed ? " (satisfies the second-order condition)" : "") << "\n";
      emit(reports, args.json);
      // Classification itself is data; only the criteria identities gate.
      return settle(gating);
    }
    if (*contact) {
      const ManifoldSpec spec = load_spec(spec_path);
      const CheckOptions opt = make_options(args, &spec);
      std::vector<Report> gating = {validate_structure(spec, opt), is_almost_cokahler(spec, opt),
                                    verify_structure_identities(spec, opt)};
      std::vector<Report> reports = gating;
      reports.push_back(nijenhuis_normality(spec, opt));
      reports.push_back(is_cokahler(spec, opt));
      reports.push_back(kahlerian_leaves_check(spec, opt));
      reports.push_back(eta_einstein_fit(spec, opt).report);
      reports.push_back(kappa_mu_fit(spec, opt).report);
      emit(reports, args.json);
      // Diagnostic fits and normality are data about the structure, not errors.
      return settle(gating);
    }
    if (*reeb) {
      const ManifoldSpec spec = load_spec(spec_path);
      const CheckOptions opt = make_options(args, &spec);
      const std::vector<Report> reports = {reeb_mixed_killing_check(spec, opt),
                                           two_killing_reeb_check(spec, opt)};
      emit(reports, args.json);
      return settle(reports);
    }
    if (*collinear) {
      const ManifoldSpec spec = load_spec(spec_path);
      const CheckOptions opt = make_options(args, &spec);
      std::optional<Expression> factor;
      if (!factor_src.empty()) factor = spec.parse(factor_src);
      const std::vector<Report> reports = {
          collinear_field_check(spec, spec.parse(alpha_src), opt, factor)};
      emit(reports, args.json);
      return settle(reports);
    }
    if (*contacttrans) {
      const ManifoldSpec spec = load_spec(spec_path);
      const CheckOptions opt = make_options(args, &spec);
      const ContactTransformFit fit = contact_transformation_check(spec, field_name, opt);
      emit({fit.report}, args.json);
      return settle({fit.report});
    }
    if (*deform) {
      const ManifoldSpec spec = load_spec(spec_path);
      const CheckOptions opt = make_options(args, &spec);
      DeformationParams params;
      params.u = spec.parse(u_src);
      params.c = c_value;
      const DeformationResult result = d_homothetic_deform(spec, params, opt);
      if (!out_path.empty()) save_spec(result.deformed, out_path);
      emit({result.report}, args.json);
      return settle({result.report});
    }
    if (*line) {
      RealLineProblem problem = make_realline_problem(
          r_src, f_src.empty() ? std::nullopt : std::optional<std::string>(f_src),
          {line_domain[0], line_domain[1]});
      problem.x0 = x0;
      problem.t_end = t_end;
      problem.step = step;
      CheckOptions opt;
      opt.grid = args.grid;
      if (args.tol >= 0.0) opt.tol = args.tol;
      if (!args.point.empty()) opt.point = std::vector<double>{std::stod(args.point)};
      const std::vector<Report> reports = {realline_analyze(problem, opt)};
      emit(reports, args.json);
      return settle(reports);
    }
    if (*reproduce) {
      CheckOptions opt;
      opt.grid = args.grid;
      if (args.tol >= 0.0) opt.tol = args.tol;
      const std::vector<Report> reports = reproduce_entries(entry_name, opt);
      emit(reports, args.json);
      return settle(reports);
    }
    if (*exp_cmd) {
      save_spec(catalog_entry(entry_name).spec, out_path);
      std::cout << "wrote " << out_path << "\n";
      return 0;
    }
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const SpecError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
