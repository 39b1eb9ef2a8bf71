#pragma once

#include "denfuse/scenario.hpp"
#include "denfuse/sim.hpp"

#include <filesystem>
#include <vector>

namespace denfuse {

/// Everything the trackers of one Monte Carlo run consume. The truth is
/// shared by all runs; scans, graphs and the initial belief are per run.
struct RunData {
    int run = 0;
    GroundTruth truth;
    std::vector<std::vector<SimulatedScan>> scans;       // [step][sensor]
    std::vector<std::vector<GraphSnapshot>> snapshots;  // [step][iteration]
    GaussianBelief initial_belief;

    [[nodiscard]] std::vector<Scan> tracker_scans(int step_index) const { return strip_labels(scans.at(step_index)); }
};

/// `scenario` must be resolved.
[[nodiscard]] RunData simulate_run(const Scenario& scenario, int run);
[[nodiscard]] GroundTruth simulate_scenario_truth(const Scenario& scenario);

/// Writes truth.jsonl, scans.jsonl, network.jsonl (one record per step),
/// prior.json and scenario.lock.json.
void write_bundle(const Scenario& scenario, const RunData& data, const std::filesystem::path& dir);

struct Bundle {
    Scenario scenario;
    RunData data;
};

[[nodiscard]] Bundle read_bundle(const std::filesystem::path& dir);

/// Reads a JSON-lines file; every line must be a JSON object.
[[nodiscard]] std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace denfuse
