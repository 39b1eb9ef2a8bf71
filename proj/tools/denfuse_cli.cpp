// denfuse: simulate scenario bundles, run trackers on them, benchmark
// end to end, and score estimate files with GOSPA.

#include "denfuse/bundle.hpp"
#include "denfuse/errors.hpp"
#include "denfuse/experiment.hpp"
#include "denfuse/metrics.hpp"
#include "denfuse/report.hpp"
#include "denfuse/scenario.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> iterations;
    std::optional<double> alpha;
    std::optional<std::string> variant;
    std::vector<std::string> methods;
};

denfuse::Scenario apply(denfuse::Scenario s, const Overrides& o) {
    if (o.seed) s.seed = *o.seed;
    for (auto& m : s.methods) {
        if (m.kind != denfuse::MethodKind::deng_vt) continue;
        if (o.iterations) m.config.max_iterations = *o.iterations;
        if (o.alpha) m.config.alpha = *o.alpha;
        if (o.variant) m.config.variant = denfuse::variant_from_string(*o.variant);
    }
    if (!o.methods.empty()) s = denfuse::select_methods(std::move(s), o.methods);
    s.validate();
    return s;
}

void add_tracker_flags(CLI::App* app, Overrides& o) {
    app->add_option("--methods", o.methods, "Comma-separated method names from the scenario")
        ->delimiter(',')
        ->envname("DENFUSE_METHODS");
    app->add_option("--iterations", o.iterations, "DNGD iterations for DeNG-VT methods");
    app->add_option("--alpha", o.alpha, "DeNG-VT step size");
    app->add_option("--variant", o.variant, "Natural-gradient variant")->check(CLI::IsMember({"canonical", "verbatim"}));
}

void print_summary(const denfuse::RunReport& report) {
    std::cout << "method,mgospa,std,localisation,missed,false,ci,failures\n";
    for (const auto& m : report.methods) {
        std::cout << m.spec.name;
        if (m.summary) {
            const auto& s = *m.summary;
            std::cout << ',' << s.mgospa.mean << ',' << s.mgospa.std << ',' << s.localisation.mean << ','
                      << s.missed.mean << ',' << s.false_.mean << ',' << s.communication_iterations;
        } else {
            std::cout << ",,,,,,";
        }
        std::cout << ',' << m.failures.size() << '\n';
    }
}

std::vector<std::vector<std::vector<denfuse::MeasVector>>> read_estimates(const fs::path& path) {
    std::vector<std::vector<std::vector<denfuse::MeasVector>>> out;
    for (const auto& rec : denfuse::read_jsonl(path)) {
        const int step = rec.at("step").get<int>();
        if (step != static_cast<int>(out.size()) + 1) throw denfuse::IoError(path.string() + ": steps out of order");
        std::vector<std::vector<denfuse::MeasVector>> sensors;
        for (const auto& sensor : rec.at("sensors")) {
            std::vector<denfuse::MeasVector> pts;
            for (const auto& p : sensor) pts.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
            sensors.push_back(std::move(pts));
        }
        out.push_back(std::move(sensors));
    }
    return out;
}

std::vector<std::vector<denfuse::MeasVector>> read_truth_positions(const fs::path& path) {
    std::vector<std::vector<denfuse::MeasVector>> out;
    for (const auto& rec : denfuse::read_jsonl(path)) {
        std::vector<denfuse::MeasVector> pts;
        for (const auto& x : rec.at("states")) pts.emplace_back(x.at(0).get<double>(), x.at(2).get<double>());
        out.push_back(std::move(pts));
    }
    return out;
}

std::string estimates_jsonl(const denfuse::MethodRun& run) {
    std::ostringstream out;
    for (std::size_t n = 0; n < run.estimates.size(); ++n) {
        json sensors = json::array();
        for (const auto& pts : run.estimates[n]) {
            json arr = json::array();
            for (const auto& p : pts) arr.push_back(json::array({p(0), p(1)}));
            sensors.push_back(arr);
        }
        out << json{{"step", n + 1}, {"sensors", sensors}}.dump() << '\n';
    }
    return out.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decentralised variational multi-object tracking workbench"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string out_dir = "out";
    std::string bundle_dir;
    int run_index = 0;
    int threads = 0;
    Overrides overrides;

    auto* simulate = app.add_subcommand("simulate", "Simulate one Monte Carlo run and write a scenario bundle");
    simulate->add_option("--scenario", scenario_path, "Scenario JSON")->required()->envname("DENFUSE_SCENARIO");
    simulate->add_option("--seed", overrides.seed, "Master seed")->envname("DENFUSE_SEED");
    simulate->add_option("--out", out_dir, "Bundle directory")->envname("DENFUSE_OUT");
    simulate->add_option("--run", run_index, "Monte Carlo run index")->check(CLI::NonNegativeNumber);

    auto* track = app.add_subcommand("track", "Run trackers on a scenario bundle");
    track->add_option("--bundle", bundle_dir, "Bundle directory")->required()->envname("DENFUSE_BUNDLE");
    track->add_option("--scenario", scenario_path, "Scenario JSON supplying the method list")
        ->envname("DENFUSE_SCENARIO");
    track->add_option("--out", out_dir, "Output directory")->envname("DENFUSE_OUT");
    add_tracker_flags(track, overrides);

    auto* bench = app.add_subcommand("bench", "End-to-end Monte Carlo experiment");
    bench->add_option("--scenario", scenario_path, "Scenario JSON")->required()->envname("DENFUSE_SCENARIO");
    bench->add_option("--seed", overrides.seed, "Master seed")->envname("DENFUSE_SEED");
    bench->add_option("--out", out_dir, "Report directory")->envname("DENFUSE_OUT");
    bench->add_option("--threads", threads, "Worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
    add_tracker_flags(bench, overrides);

    std::string truth_path;
    std::string estimates_path;
    std::string gospa_out;
    denfuse::GospaParams gp;
    auto* score = app.add_subcommand("gospa", "Score an estimates file against truth.jsonl");
    score->add_option("--truth", truth_path, "truth.jsonl from a bundle")->required();
    score->add_option("--estimates", estimates_path, "Estimates JSON-lines file")->required();
    score->add_option("--p", gp.p, "GOSPA order");
    score->add_option("--alpha", gp.alpha, "GOSPA alpha");
    score->add_option("--cutoff", gp.cutoff, "GOSPA cut-off distance");
    score->add_option("--out", gospa_out, "CSV output path (stdout when omitted)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*simulate) {
            const auto scenario = denfuse::resolve(apply(denfuse::load_scenario(scenario_path), overrides));
            if (run_index >= scenario.monte_carlo_runs) throw denfuse::ConfigError("--run exceeds monte_carlo_runs");
            const auto data = denfuse::simulate_run(scenario, run_index);
            denfuse::write_bundle(scenario, data, out_dir);
            std::cout << "bundle written to " << out_dir << '\n';
        } else if (*track) {
            auto bundle = denfuse::read_bundle(bundle_dir);
            denfuse::Scenario scenario = bundle.scenario;
            if (!scenario_path.empty()) scenario.methods = denfuse::load_scenario(scenario_path).methods;
            scenario = apply(std::move(scenario), overrides);
            std::vector<denfuse::MethodRun> runs;
            const auto report = denfuse::run_on_data(scenario, bundle.data, &runs);
            denfuse::emit_reports(report, out_dir);
            for (std::size_t m = 0; m < runs.size(); ++m)
                if (report.methods[m].failures.empty())
                    denfuse::write_text(fs::path(out_dir) / ("estimates_" + scenario.methods[m].name + ".jsonl"),
                                        estimates_jsonl(runs[m]));
            print_summary(report);
        } else if (*bench) {
            const auto scenario = apply(denfuse::load_scenario(scenario_path), overrides);
            denfuse::ExperimentOptions opts;
            opts.threads = threads;
            const auto report = denfuse::run_experiment(scenario, opts);
            denfuse::emit_reports(report, out_dir);
            print_summary(report);
        } else if (*score) {
            gp.validate();
            const auto truth = read_truth_positions(truth_path);
            const auto estimates = read_estimates(estimates_path);
            if (truth.size() != estimates.size())
                throw denfuse::IoError("truth and estimates cover different numbers of steps");
            std::ostringstream csv;
            csv << "step,sensor,total,localisation,missed,false\n";
            for (std::size_t n = 0; n < truth.size(); ++n)
                for (std::size_t s = 0; s < estimates[n].size(); ++s) {
                    const auto g = denfuse::gospa(estimates[n][s], truth[n], gp);
                    csv << n + 1 << ',' << s << ',' << denfuse::format_double(g.total) << ','
                        << denfuse::format_double(g.localisation) << ',' << denfuse::format_double(g.missed) << ','
                        << denfuse::format_double(g.false_) << '\n';
                }
            if (gospa_out.empty())
                std::cout << csv.str();
            else
                denfuse::write_text(gospa_out, csv.str());
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
