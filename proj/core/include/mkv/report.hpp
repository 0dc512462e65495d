#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mkv {

inline constexpr const char* kToolVersion = "0.1.0";

enum class Verdict { Pass, Fail, Partial };

const char* verdict_name(Verdict v);

struct PointRecord {
  std::vector<double> point;
  double residual = 0.0;
  std::map<std::string, double> fitted;  // per-point fitted parameters, if any
};

/// Structured outcome of one check over a sample set.
struct Report {
  std::string spec_name;
  std::string check;
  Verdict verdict = Verdict::Fail;
  double max_residual = 0.0;
  double tolerance = 0.0;
  std::vector<PointRecord> details;
  std::vector<std::string> warnings;
  std::map<std::string, double> summary;  // aggregate values (fitted f, trace norms, ...)

  bool passed() const { return verdict == Verdict::Pass; }

  /// JSON per the report document schema; deterministic field order and
  /// float formatting.
  std::string to_json() const;
  std::string to_text() const;
};

/// Accumulates per-point residuals and evaluation failures, then settles the
/// verdict: pass iff every surviving point is under tolerance and nothing
/// failed to evaluate; partial when failed points were skipped but the rest
/// pass.
class ReportBuilder {
 public:
  ReportBuilder(std::string spec_name, std::string check, double tolerance);

  void add_point(const std::vector<double>& p, double residual,
                 std::map<std::string, double> fitted = {});
  void note_failure(const std::vector<double>& p, const std::string& message);
  void warn(const std::string& message);
  void set_summary(const std::string& key, double value);

  double max_residual() const { return report_.max_residual; }
  int evaluated_points() const { return static_cast<int>(report_.details.size()); }

  Report finish();
  /// Finish with an explicitly forced verdict (for checks whose outcome is
  /// not a residual threshold).
  Report finish(bool pass);

 private:
  Report report_;
  int failures_ = 0;
};

/// Shared per-check options surfaced on every CLI subcommand.
struct CheckOptions {
  int grid = 5;
  std::optional<double> tol;
  std::optional<std::vector<double>> point;  // evaluate at this single point
};

}  // namespace mkv
