#include "mkv/spec_io.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace mkv {
namespace {

using json = nlohmann::json;  // std::map-backed, keys stay sorted

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw SpecError(path + ": " + what);
}

const json& need(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.contains(key)) fail(path, "missing \"" + key + "\"");
  return obj.at(key);
}

std::string need_string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

Expression parse_at(const ManifoldSpec& spec, const json& j, const std::string& path) {
  const std::string src = need_string(j, path);
  try {
    return spec.parse(src);
  } catch (const ParseError& e) {
    fail(path, e.what());
  }
}

std::vector<Expression> parse_vector(const ManifoldSpec& spec, const json& j,
                                     const std::string& path) {
  if (!j.is_array() || static_cast<int>(j.size()) != spec.dim)
    fail(path, "expected an array of " + std::to_string(spec.dim) + " expression strings");
  std::vector<Expression> out;
  for (size_t i = 0; i < j.size(); ++i)
    out.push_back(parse_at(spec, j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<std::vector<Expression>> parse_matrix(const ManifoldSpec& spec, const json& j,
                                                  const std::string& path) {
  if (!j.is_array() || static_cast<int>(j.size()) != spec.dim)
    fail(path, "expected " + std::to_string(spec.dim) + " rows");
  std::vector<std::vector<Expression>> out;
  for (size_t i = 0; i < j.size(); ++i)
    out.push_back(parse_vector(spec, j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

}  // namespace

ManifoldSpec spec_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SpecError(std::string("document is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SpecError("document root must be an object");

  ManifoldSpec spec;
  spec.name = need_string(need(doc, "name", "$"), "name");
  const json& jdim = need(doc, "dimension", "$");
  if (!jdim.is_number_integer() || jdim.get<int>() < 1) fail("dimension", "expected a positive integer");
  spec.dim = jdim.get<int>();

  const json& jc = need(doc, "coordinates", "$");
  if (!jc.is_array() || static_cast<int>(jc.size()) != spec.dim)
    fail("coordinates", "expected " + std::to_string(spec.dim) + " names");
  for (size_t i = 0; i < jc.size(); ++i)
    spec.coordinates.push_back(need_string(jc[i], "coordinates[" + std::to_string(i) + "]"));

  spec.domain.assign(static_cast<size_t>(spec.dim), {-1.0, 1.0});
  if (doc.contains("domain")) {
    const json& jd = doc.at("domain");
    if (!jd.is_object()) fail("domain", "expected an object keyed by coordinate");
    for (auto it = jd.begin(); it != jd.end(); ++it) {
      auto pos = std::find(spec.coordinates.begin(), spec.coordinates.end(), it.key());
      if (pos == spec.coordinates.end()) fail("domain." + it.key(), "unknown coordinate");
      const json& iv = it.value();
      if (!iv.is_array() || iv.size() != 2 || !iv[0].is_number() || !iv[1].is_number())
        fail("domain." + it.key(), "expected [lo, hi]");
      const double lo = iv[0].get<double>(), hi = iv[1].get<double>();
      if (!(hi > lo)) fail("domain." + it.key(), "interval is empty");
      spec.domain[static_cast<size_t>(pos - spec.coordinates.begin())] = {lo, hi};
    }
  }

  if (doc.contains("parameters")) {
    const json& jp = doc.at("parameters");
    if (!jp.is_object()) fail("parameters", "expected an object");
    for (auto it = jp.begin(); it != jp.end(); ++it) {
      if (!it.value().is_number()) fail("parameters." + it.key(), "expected a number");
      spec.parameters.emplace_back(it.key(), it.value().get<double>());
    }
    std::sort(spec.parameters.begin(), spec.parameters.end());
  }

  spec.metric = parse_matrix(spec, need(doc, "metric", "$"), "metric");
  for (int i = 0; i < spec.dim; ++i)
    for (int j = i + 1; j < spec.dim; ++j)
      if (!spec.metric[static_cast<size_t>(i)][static_cast<size_t>(j)].same_structure(
              spec.metric[static_cast<size_t>(j)][static_cast<size_t>(i)]))
        fail("metric[" + std::to_string(j) + "][" + std::to_string(i) + "]",
             "metric entries must be symmetric");

  if (doc.contains("fields")) {
    const json& jf = doc.at("fields");
    if (!jf.is_object()) fail("fields", "expected an object");
    for (auto it = jf.begin(); it != jf.end(); ++it)
      spec.fields[it.key()] = parse_vector(spec, it.value(), "fields." + it.key());
  }

  if (doc.contains("structure")) {
    const json& js = doc.at("structure");
    if (!js.is_object()) fail("structure", "expected an object");
    if (spec.dim % 2 == 0) fail("structure", "contact structure needs odd dimension");
    ContactBlock blk;
    blk.xi = parse_vector(spec, need(js, "xi", "structure"), "structure.xi");
    if (js.contains("eta")) blk.eta = parse_vector(spec, js.at("eta"), "structure.eta");
    blk.phi = parse_matrix(spec, need(js, "phi", "structure"), "structure.phi");
    spec.structure = std::move(blk);
  }

  return spec;
}

std::string spec_to_json(const ManifoldSpec& spec) {
  json doc;
  doc["name"] = spec.name;
  doc["dimension"] = spec.dim;
  doc["coordinates"] = spec.coordinates;
  json jd;
  for (int i = 0; i < spec.dim; ++i)
    jd[spec.coordinates[static_cast<size_t>(i)]] = {spec.domain[static_cast<size_t>(i)].first,
                                                    spec.domain[static_cast<size_t>(i)].second};
  doc["domain"] = std::move(jd);
  if (!spec.parameters.empty()) {
    json jp;
    for (const auto& [k, v] : spec.parameters) jp[k] = v;
    doc["parameters"] = std::move(jp);
  }
  auto render_vec = [](const std::vector<Expression>& v) {
    json out = json::array();
    for (const auto& e : v) out.push_back(e.render());
    return out;
  };
  json jm = json::array();
  for (const auto& row : spec.metric) jm.push_back(render_vec(row));
  doc["metric"] = std::move(jm);
  if (!spec.fields.empty()) {
    json jf;
    for (const auto& [k, v] : spec.fields) jf[k] = render_vec(v);
    doc["fields"] = std::move(jf);
  }
  if (spec.structure) {
    json js;
    js["xi"] = render_vec(spec.structure->xi);
    if (spec.structure->eta) js["eta"] = render_vec(*spec.structure->eta);
    json jphi = json::array();
    for (const auto& row : spec.structure->phi) jphi.push_back(render_vec(row));
    js["phi"] = std::move(jphi);
    doc["structure"] = std::move(js);
  }
  return doc.dump(2) + "\n";
}

ManifoldSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return spec_from_json(buf.str());
}

void save_spec(const ManifoldSpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw SpecError("cannot write '" + path + "'");
  out << spec_to_json(spec);
}

}  // namespace mkv
