#include "denfuse/experiment.hpp"

#include "denfuse/errors.hpp"
#include "denfuse/report.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#ifndef DENFUSE_VERSION
#define DENFUSE_VERSION "dev"
#endif

namespace denfuse {

std::string code_version() { return DENFUSE_VERSION; }

namespace {

std::vector<std::vector<MeasVector>> sensor_positions(const TrackerState& state, int num_sensors) {
    std::vector<std::vector<MeasVector>> out;
    out.reserve(num_sensors);
    if (state.sensors.size() == 1 && num_sensors > 1) {
        // Centralised: every sensor reports the fused estimate.
        out.assign(num_sensors, state.belief(0).positions());
        return out;
    }
    for (int s = 0; s < num_sensors; ++s) out.push_back(state.belief(s).positions());
    return out;
}

}  // namespace

MethodRun run_method(const MethodSpec& method, const Scenario& scenario, const RunData& data,
                     const ExperimentHooks& hooks, std::vector<ConvergenceRecord>* trace) {
    const TrackingModel model = scenario.tracking_model();
    const int n_sensors = model.num_sensors();
    const TrackerConfig& cfg = method.config;
    TrackerState state =
        TrackerState::initial(data.initial_belief, method.kind == MethodKind::c_vt ? 1 : n_sensors);

    MethodRun out;
    for (int n = 0; n < scenario.num_steps; ++n) {
        const std::vector<Scan> scans = data.tracker_scans(n);
        const auto& snaps = data.snapshots.at(n);
        const auto truth = data.truth.positions(n);
        const int step = n + 1;
        switch (method.kind) {
            case MethodKind::c_vt: state = c_vt_time_step(state, scans, model, cfg); break;
            case MethodKind::i_vt: state = i_vt_time_step(state, scans, model, cfg); break;
            case MethodKind::dec_vt: state = dec_vt_time_step(state, scans, model, snaps, cfg); break;
            case MethodKind::deaa_vt: state = deaa_vt_time_step(state, scans, model, snaps, cfg); break;
            case MethodKind::deng_vt: {
                const bool tracing = trace != nullptr && step == scenario.convergence_step;
                IterationObserver observer;
                if (tracing || hooks.deng_iteration) {
                    observer = [&](const IterationView& view) {
                        if (hooks.deng_iteration) hooks.deng_iteration(method.name, data.run, step, view);
                        if (!tracing) return;
                        for (int s = 0; s < n_sensors; ++s)
                            trace->push_back({view.iteration, s,
                                              gospa(moments_from_nat(view.lambdas[s]).positions(), truth,
                                                    scenario.gospa)
                                                  .total});
                    };
                }
                state = deng_vt_time_step(state, scans, model, snaps, cfg, observer);
                break;
            }
        }
        auto positions = sensor_positions(state, n_sensors);
        std::vector<GospaBreakdown> scores;
        scores.reserve(n_sensors);
        for (const auto& p : positions) scores.push_back(gospa(p, truth, scenario.gospa));
        out.gospa.push_back(std::move(scores));
        out.estimates.push_back(std::move(positions));
    }
    out.communication = state.communication_iterations;
    return out;
}

RunReport run_experiment(const Scenario& input, const ExperimentOptions& options) {
    const Scenario scenario = resolve(input);
    const std::size_t n_methods = scenario.methods.size();
    const int runs = scenario.monte_carlo_runs;

    // Convergence trace: the DeNG-VT entry with the most iterations.
    std::optional<std::size_t> traced;
    for (std::size_t m = 0; m < n_methods; ++m)
        if (scenario.methods[m].kind == MethodKind::deng_vt &&
            (!traced || scenario.methods[m].config.max_iterations > scenario.methods[*traced].config.max_iterations))
            traced = m;

    struct Cell {
        std::optional<MethodRun> result;
        std::string failure;
    };
    std::vector<std::vector<Cell>> cells(runs, std::vector<Cell>(n_methods));
    std::vector<ConvergenceRecord> trace;
    std::exception_ptr hard_error;
    std::mutex error_mutex;
    std::atomic<int> next_run{0};

    auto worker = [&] {
        for (int r = next_run++; r < runs; r = next_run++) {
            try {
                const RunData data = simulate_run(scenario, r);
                for (std::size_t m = 0; m < n_methods; ++m) {
                    std::vector<ConvergenceRecord>* t = (r == 0 && traced && *traced == m) ? &trace : nullptr;
                    try {
                        cells[r][m].result = run_method(scenario.methods[m], scenario, data, options.hooks, t);
                    } catch (const TrackerDiverged& e) {
                        cells[r][m].failure = e.what();
                    } catch (const NumericalError& e) {
                        cells[r][m].failure = e.what();
                    }
                }
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!hard_error) hard_error = std::current_exception();
                return;
            }
        }
    };

    int threads = options.threads > 0 ? options.threads : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::clamp(threads, 1, std::max(1, runs));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (hard_error) std::rethrow_exception(hard_error);

    RunReport report;
    report.scenario = scenario;
    report.config_hash = config_hash(scenario);
    report.code_version = code_version();
    for (std::size_t m = 0; m < n_methods; ++m) {
        MethodResult res;
        res.spec = scenario.methods[m];
        res.record.method = res.spec.name;
        for (int r = 0; r < runs; ++r) {
            auto& cell = cells[r][m];
            if (cell.result) {
                res.record.gospa.push_back(std::move(cell.result->gospa));
                res.record.communication.push_back(cell.result->communication);
            } else {
                res.failures.push_back("run " + std::to_string(r) + ": " + cell.failure);
            }
        }
        if (!res.record.gospa.empty()) res.summary = aggregate(res.record);
        report.methods.push_back(std::move(res));
    }

    if (traced) {
        report.convergence_method = scenario.methods[*traced].name;
        report.convergence = std::move(trace);
        for (const auto& res : report.methods)
            if (res.spec.kind == MethodKind::c_vt && !res.record.gospa.empty() && res.failures.empty()) {
                report.convergence_reference = res.record.gospa[0][scenario.convergence_step - 1][0].total;
                break;
            }
    }
    return report;
}

RunReport run_on_data(const Scenario& scenario, const RunData& data, std::vector<MethodRun>* runs) {
    RunReport report;
    report.scenario = scenario;
    report.scenario.monte_carlo_runs = 1;
    report.config_hash = config_hash(report.scenario);
    report.code_version = code_version();
    std::optional<std::size_t> traced;
    for (std::size_t m = 0; m < scenario.methods.size(); ++m)
        if (scenario.methods[m].kind == MethodKind::deng_vt &&
            (!traced || scenario.methods[m].config.max_iterations > scenario.methods[*traced].config.max_iterations))
            traced = m;

    for (std::size_t m = 0; m < scenario.methods.size(); ++m) {
        MethodResult res;
        res.spec = scenario.methods[m];
        res.record.method = res.spec.name;
        std::vector<ConvergenceRecord>* t = (traced && *traced == m) ? &report.convergence : nullptr;
        try {
            MethodRun run = run_method(res.spec, scenario, data, {}, t);
            res.record.gospa.push_back(run.gospa);
            res.record.communication.push_back(run.communication);
            res.summary = aggregate(res.record);
            if (res.spec.kind == MethodKind::c_vt && !report.convergence_reference)
                report.convergence_reference = run.gospa[scenario.convergence_step - 1][0].total;
            if (runs) runs->push_back(std::move(run));
        } catch (const TrackerDiverged& e) {
            res.failures.push_back(std::string("run 0: ") + e.what());
            if (runs) runs->emplace_back();
        } catch (const NumericalError& e) {
            res.failures.push_back(std::string("run 0: ") + e.what());
            if (runs) runs->emplace_back();
        }
        report.methods.push_back(std::move(res));
    }
    if (traced) report.convergence_method = scenario.methods[*traced].name;
    return report;
}

RunReport run_experiment(const Scenario& scenario, const std::vector<std::string>& methods,
                         const std::filesystem::path& output_dir) {
    const Scenario selected = methods.empty() ? scenario : select_methods(scenario, methods);
    RunReport report = run_experiment(selected);
    emit_reports(report, output_dir);
    return report;
}

}  // namespace denfuse
