#include "mkv/report.hpp"

#include <algorithm>
#include <sstream>

#include <nlohmann/json.hpp>

namespace mkv {

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Partial: return "partial";
  }
  return "?";
}

ReportBuilder::ReportBuilder(std::string spec_name, std::string check, double tolerance) {
  report_.spec_name = std::move(spec_name);
  report_.check = std::move(check);
  report_.tolerance = tolerance;
}

void ReportBuilder::add_point(const std::vector<double>& p, double residual,
                              std::map<std::string, double> fitted) {
  report_.max_residual = std::max(report_.max_residual, residual);
  report_.details.push_back({p, residual, std::move(fitted)});
}

void ReportBuilder::note_failure(const std::vector<double>& p, const std::string& message) {
  ++failures_;
  std::ostringstream os;
  os << "evaluation failed at (";
  for (size_t i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p[i];
  os << "): " << message;
  report_.warnings.push_back(os.str());
}

void ReportBuilder::warn(const std::string& message) { report_.warnings.push_back(message); }

void ReportBuilder::set_summary(const std::string& key, double value) {
  report_.summary[key] = value;
}

Report ReportBuilder::finish() {
  const bool under = report_.max_residual < report_.tolerance;
  if (!under || report_.details.empty())
    report_.verdict = Verdict::Fail;
  else if (failures_ > 0) {
    report_.verdict = Verdict::Partial;
    report_.warnings.push_back("partial coverage: " + std::to_string(failures_) +
                               " sample point(s) skipped");
  } else
    report_.verdict = Verdict::Pass;
  return report_;
}

Report ReportBuilder::finish(bool pass) {
  report_.verdict = pass ? (failures_ > 0 ? Verdict::Partial : Verdict::Pass) : Verdict::Fail;
  return report_;
}

std::string Report::to_json() const {
  nlohmann::ordered_json j;
  j["tool_version"] = kToolVersion;
  j["spec_name"] = spec_name;
  j["check"] = check;
  j["verdict"] = verdict_name(verdict);
  j["max_residual"] = max_residual;
  j["tolerance"] = tolerance;
  nlohmann::ordered_json det = nlohmann::ordered_json::array();
  for (const auto& d : details) {
    nlohmann::ordered_json e;
    e["point"] = d.point;
    e["residual"] = d.residual;
    if (!d.fitted.empty()) e["fitted"] = d.fitted;
    det.push_back(std::move(e));
  }
  j["details"] = std::move(det);
  j["warnings"] = warnings;
  if (!summary.empty()) j["summary"] = summary;
  return j.dump(2);
}

std::string Report::to_text() const {
  std::ostringstream os;
  os << "[" << verdict_name(verdict) << "] " << spec_name << " :: " << check
     << "  max_residual=" << max_residual << " tol=" << tolerance;
  for (const auto& [k, v] : summary) os << "  " << k << "=" << v;
  os << "\n";
  for (const auto& w : warnings) os << "  warning: " << w << "\n";
  return os.str();
}

}  // namespace mkv
