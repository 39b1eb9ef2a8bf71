#pragma once

#include "denfuse/bundle.hpp"
#include "denfuse/metrics.hpp"
#include "denfuse/scenario.hpp"
#include "denfuse/trackers.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace denfuse {

[[nodiscard]] std::string code_version();

/// Output of one tracker over one run.
struct MethodRun {
    std::vector<std::vector<GospaBreakdown>> gospa;               // [step][sensor]
    std::vector<std::vector<std::vector<MeasVector>>> estimates;  // [step][sensor][object]
    std::int64_t communication = 0;
};

struct ConvergenceRecord {
    int iteration = 0;
    int sensor = 0;
    double gospa = 0.0;
};

/// Optional per-iteration taps; they run on worker threads.
struct ExperimentHooks {
    std::function<void(const std::string& method, int run, int step, const IterationView&)> deng_iteration;
};

/// Runs one method on one run's data. When `trace` is set, per-iteration
/// GOSPA of every sensor at `trace_step` is appended to it (DeNG-VT only).
[[nodiscard]] MethodRun run_method(const MethodSpec& method, const Scenario& scenario, const RunData& data,
                                   const ExperimentHooks& hooks = {},
                                   std::vector<ConvergenceRecord>* trace = nullptr);

struct MethodResult {
    MethodSpec spec;
    MethodRecord record;  // successful runs only
    std::optional<MethodSummary> summary;
    std::vector<std::string> failures;  // "run <r>: <message>"
};

struct RunReport {
    Scenario scenario;
    std::string config_hash;
    std::string code_version;
    std::vector<MethodResult> methods;

    /// Per-iteration GOSPA at the designated step of run 0.
    std::string convergence_method;
    std::vector<ConvergenceRecord> convergence;
    std::optional<double> convergence_reference;  // C-VT GOSPA at that step
};

struct ExperimentOptions {
    int threads = 0;  // 0: hardware concurrency
    ExperimentHooks hooks;
};

/// Resolves the scenario, simulates every Monte Carlo run, runs all methods
/// on identical data and aggregates. Deterministic for a fixed seed.
[[nodiscard]] RunReport run_experiment(const Scenario& scenario, const ExperimentOptions& options = {});

/// Runs every method of a resolved scenario on one run's data (for example a
/// replayed bundle). Per-method outputs are returned through `runs` if set.
[[nodiscard]] RunReport run_on_data(const Scenario& scenario, const RunData& data,
                                    std::vector<MethodRun>* runs = nullptr);

/// Restricts to `methods` (all when empty), runs, and emits into output_dir.
RunReport run_experiment(const Scenario& scenario, const std::vector<std::string>& methods,
                         const std::filesystem::path& output_dir);

}  // namespace denfuse
