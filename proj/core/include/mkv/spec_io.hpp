#pragma once

#include "mkv/manifold.hpp"

namespace mkv {

/// Strict-schema JSON round trip for chart documents. Saving is canonical
/// (keys sorted, shortest-round-trip numbers, expressions re-rendered from
/// their parse trees), so save(load(save(s))) is byte-identical.
ManifoldSpec spec_from_json(const std::string& text);
std::string spec_to_json(const ManifoldSpec& spec);

ManifoldSpec load_spec(const std::string& path);
void save_spec(const ManifoldSpec& spec, const std::string& path);

}  // namespace mkv
