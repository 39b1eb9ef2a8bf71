#pragma once

#include "denfuse/experiment.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace denfuse {

inline constexpr int kSummarySchemaVersion = 1;

/// Shortest decimal text that round-trips the double.
[[nodiscard]] std::string format_double(double v);

[[nodiscard]] nlohmann::json summary_json(const RunReport& report);
/// step,method,mean,std; T rows per method with a summary.
[[nodiscard]] std::string gospa_curves_csv(const RunReport& report);
/// iteration,sensor,gospa
[[nodiscard]] std::string convergence_csv(const RunReport& report);

/// Writes summary.json, gospa_curves.csv, convergence.csv and
/// scenario.lock.json into `dir` (created if missing).
void emit_reports(const RunReport& report, const std::filesystem::path& dir);

}  // namespace denfuse
