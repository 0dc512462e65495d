#pragma once

#include "mkv/killing.hpp"

namespace mkv {

/// Published orthonormal frame for a catalog chart: components of each frame
/// vector, the nonzero Lie brackets, connection actions and h-action, all as
/// frame-basis coefficient expressions. Everything here is recomputed by the
/// engine and compared entry by entry.
struct FrameTable {
  std::vector<std::vector<Expression>> frame;  // frame[i] = coordinate components of e_i
  std::vector<std::vector<std::vector<Expression>>> bracket;     // [e_i,e_j] = sum_k c e_k
  std::vector<std::vector<std::vector<Expression>>> connection;  // nabla_{e_i} e_j
  std::vector<std::vector<Expression>> h_action;                 // h e_i = sum_k c e_k
};

struct CatalogEntry {
  ManifoldSpec spec;
  std::optional<FrameTable> table;
};

std::vector<std::string> catalog_list();
CatalogEntry catalog_entry(const std::string& name);

/// Orthonormality to 1e-10; brackets, connection and h-action to 1e-8.
Report verify_frame_table(const std::string& name, const CheckOptions& opt = {});

/// Runs the full verification pipeline on one entry (or every entry for
/// "all") and emits a claims checklist, one row per published statement.
Report reproduce_entry(const std::string& name, const CheckOptions& opt = {});
std::vector<Report> reproduce_entries(const std::string& name_or_all,
                                      const CheckOptions& opt = {});

}  // namespace mkv
