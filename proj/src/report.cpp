#include "denfuse/report.hpp"

#include "denfuse/errors.hpp"

#include <array>
#include <charconv>
#include <sstream>

namespace denfuse {

using nlohmann::json;

std::string format_double(double v) {
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

namespace {

json mean_std_json(const MeanStd& m) { return json{{"mean", m.mean}, {"std", m.std}}; }

}  // namespace

json summary_json(const RunReport& report) {
    json rows = json::array();
    for (const auto& m : report.methods) {
        json row{{"method", m.spec.name},
                 {"kind", to_string(m.spec.kind)},
                 {"runs", m.summary ? m.summary->runs : 0},
                 {"failures", m.failures}};
        if (m.summary) {
            row["mgospa"] = mean_std_json(m.summary->mgospa);
            row["localisation"] = mean_std_json(m.summary->localisation);
            row["missed"] = mean_std_json(m.summary->missed);
            row["false"] = mean_std_json(m.summary->false_);
            row["ci"] = m.summary->communication_iterations;
        } else {
            row["mgospa"] = nullptr;
            row["localisation"] = nullptr;
            row["missed"] = nullptr;
            row["false"] = nullptr;
            row["ci"] = nullptr;
        }
        rows.push_back(std::move(row));
    }
    json conv = json{{"method", report.convergence_method},
                     {"step", report.scenario.convergence_step},
                     {"reference_c_vt", report.convergence_reference ? json(*report.convergence_reference) : json()}};
    return json{{"schema", "denfuse.summary"},
                {"schema_version", kSummarySchemaVersion},
                {"scenario", report.scenario.name},
                {"provenance",
                 {{"seed", report.scenario.seed},
                  {"config_hash", report.config_hash},
                  {"code_version", report.code_version}}},
                {"std_definition", "population std across Monte Carlo runs of the per-run MGOSPA"},
                {"methods", rows},
                {"convergence", conv}};
}

std::string gospa_curves_csv(const RunReport& report) {
    std::ostringstream out;
    out << "step,method,mean,std\n";
    for (const auto& m : report.methods) {
        if (!m.summary) continue;
        for (std::size_t n = 0; n < m.summary->per_step.size(); ++n)
            out << n + 1 << ',' << m.spec.name << ',' << format_double(m.summary->per_step[n].mean) << ','
                << format_double(m.summary->per_step[n].std) << '\n';
    }
    return out.str();
}

std::string convergence_csv(const RunReport& report) {
    std::ostringstream out;
    out << "iteration,sensor,gospa\n";
    for (const auto& c : report.convergence)
        out << c.iteration << ',' << c.sensor << ',' << format_double(c.gospa) << '\n';
    return out.str();
}

void emit_reports(const RunReport& report, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    write_text(dir / "summary.json", summary_json(report).dump(2) + "\n");
    write_text(dir / "gospa_curves.csv", gospa_curves_csv(report));
    write_text(dir / "convergence.csv", convergence_csv(report));
    write_text(dir / "scenario.lock.json", report.scenario.to_json().dump(2) + "\n");
}

}  // namespace denfuse
