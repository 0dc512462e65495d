#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mkv/expr.hpp"

namespace mkv {

struct SpecError : std::runtime_error {
  explicit SpecError(const std::string& what) : std::runtime_error(what) {}
};

/// Almost contact metric block attached to a chart: Reeb field ξ, optional
/// redundant 1-form η (always cross-checked against g·ξ) and the structure
/// tensor φ as an n×n matrix of expressions, columns acting on basis vectors.
struct ContactBlock {
  std::vector<Expression> xi;
  std::optional<std::vector<Expression>> eta;
  std::vector<std::vector<Expression>> phi;  // phi[i][j] = (φ e_j)^i
};

/// A coordinate chart with a metric, named vector fields and an optional
/// almost contact structure. All expressions are bound against the chart's
/// coordinates and parameters.
struct ManifoldSpec {
  std::string name;
  int dim = 0;
  std::vector<std::string> coordinates;
  std::vector<std::pair<double, double>> domain;        // per coordinate
  std::vector<std::pair<std::string, double>> parameters;  // sorted by name
  std::vector<std::vector<Expression>> metric;          // symmetric n×n
  std::map<std::string, std::vector<Expression>> fields;
  std::optional<ContactBlock> structure;

  std::vector<std::string> parameter_names() const {
    std::vector<std::string> names;
    names.reserve(parameters.size());
    for (const auto& [k, v] : parameters) names.push_back(k);
    return names;
  }
  std::vector<double> parameter_values() const {
    std::vector<double> vals;
    vals.reserve(parameters.size());
    for (const auto& [k, v] : parameters) vals.push_back(v);
    return vals;
  }

  const std::vector<Expression>& field(const std::string& name) const {
    auto it = fields.find(name);
    if (it == fields.end()) throw SpecError("unknown vector field '" + name + "'");
    return it->second;
  }

  /// Parses `src` against this chart's coordinates and parameters.
  Expression parse(std::string_view src) const {
    auto params = parameter_names();
    return parse_expression(src, coordinates, params);
  }
};

/// Deterministic sample set: a product grid (`grid_per_axis` points per
/// coordinate, shrunk 5% inward from each boundary, total capped at 1e5)
/// plus 32 pseudo-random interior points drawn with a fixed seed.
std::vector<std::vector<double>> sample_points(const ManifoldSpec& spec, int grid_per_axis = 5);

inline constexpr unsigned kSampleSeed = 24029;
inline constexpr int kRandomSamples = 32;

}  // namespace mkv
