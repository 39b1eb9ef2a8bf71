#include "denfuse/bundle.hpp"

#include "denfuse/errors.hpp"
#include "denfuse/rng.hpp"

#include <fstream>
#include <random>
#include <sstream>

namespace denfuse {

using nlohmann::json;

GroundTruth simulate_scenario_truth(const Scenario& scenario) {
    const TrackingModel model = scenario.tracking_model();
    return simulate_truth(scenario.init.initial_states, model.dynamics, scenario.num_steps,
                          derive_seed(scenario.seed, Stream::truth, {1}));
}

RunData simulate_run(const Scenario& scenario, int run) {
    if (scenario.init.initial_states.empty() || scenario.network.sensor_positions.empty())
        throw ConfigError("simulate_run needs a resolved scenario");
    const TrackingModel model = scenario.tracking_model();
    const auto r = static_cast<std::uint64_t>(run);

    RunData data;
    data.run = run;
    data.truth = simulate_scenario_truth(scenario);

    data.scans.reserve(scenario.num_steps);
    for (int n = 0; n < scenario.num_steps; ++n)
        data.scans.push_back(simulate_scan(data.truth.states[n], model.sensors, scenario.region,
                                           derive_seed(scenario.seed, Stream::scans, {r, static_cast<std::uint64_t>(n)}),
                                           n + 1));

    const int per_step = scenario.snapshots_per_step();
    const std::uint64_t net_seed = derive_seed(scenario.seed, Stream::network, {r});
    if (per_step == 1) {
        for (auto& g : generate_network(scenario.network.sensor_positions, scenario.network.policy, scenario.num_steps,
                                        net_seed))
            data.snapshots.push_back({std::move(g)});
    } else {
        for (int n = 1; n <= scenario.num_steps; ++n) {
            std::vector<GraphSnapshot> step;
            step.reserve(per_step);
            for (int i = 0; i < per_step; ++i)
                step.push_back(sample_snapshot(scenario.network.sensor_positions, scenario.network.policy, n,
                                               derive_seed(net_seed, {static_cast<std::uint64_t>(n),
                                                                      static_cast<std::uint64_t>(i)})));
            data.snapshots.push_back(std::move(step));
        }
    }

    Rng rng(derive_seed(scenario.seed, Stream::init, {r}));
    std::normal_distribution<double> normal;
    const InitPolicy& ip = scenario.init;
    for (const auto& x0 : ip.initial_states) {
        ObjectGaussian o;
        o.mean = x0;
        o.mean(0) += ip.position_noise_std * normal(rng);
        o.mean(1) += ip.velocity_noise_std * normal(rng);
        o.mean(2) += ip.position_noise_std * normal(rng);
        o.mean(3) += ip.velocity_noise_std * normal(rng);
        o.cov = StateVector(ip.position_variance, ip.velocity_variance, ip.position_variance, ip.velocity_variance)
                    .asDiagonal();
        data.initial_belief.objects.push_back(o);
    }
    return data;
}

namespace {

json vec_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

template <int N>
Eigen::Matrix<double, N, 1> read_vec(const json& j, const std::string& ctx) {
    if (!j.is_array() || j.size() != N) throw IoError(ctx + ": expected " + std::to_string(N) + " numbers");
    Eigen::Matrix<double, N, 1> v;
    for (int i = 0; i < N; ++i) v(i) = j[i].get<double>();
    return v;
}

void write_lines(const std::filesystem::path& path, const std::vector<json>& records) {
    std::ostringstream out;
    for (const auto& r : records) out << r.dump() << '\n';
    write_text(path, out.str());
}

json snapshot_json(const GraphSnapshot& g) {
    json edges = json::array();
    for (int i = 0; i < g.num_nodes(); ++i)
        for (int j = i + 1; j < g.num_nodes(); ++j)
            if (g.adjacency(i, j)) edges.push_back(json::array({i, j}));
    return json{{"edges", edges}};
}

GraphSnapshot read_snapshot(const json& j, int nodes, int step) {
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> adj =
        Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(nodes, nodes, false);
    for (const auto& e : j.at("edges")) {
        const int a = e.at(0).get<int>();
        const int b = e.at(1).get<int>();
        if (a < 0 || b < 0 || a >= nodes || b >= nodes || a == b) throw IoError("network.jsonl: invalid edge");
        adj(a, b) = adj(b, a) = true;
    }
    return GraphSnapshot::from_adjacency(step, adj);
}

}  // namespace

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<json> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::parse_error& e) {
            throw IoError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (!out.back().is_object()) throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected an object");
    }
    return out;
}

void write_bundle(const Scenario& scenario, const RunData& data, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<json> truth, scans, network;
    for (int n = 0; n < data.truth.steps(); ++n) {
        json states = json::array();
        for (const auto& x : data.truth.states[n]) states.push_back(vec_json(x));
        truth.push_back(json{{"step", n + 1}, {"states", states}});

        json sensors = json::array();
        for (const auto& s : data.scans[n]) {
            json meas = json::array();
            for (const auto& y : s.scan.measurements) meas.push_back(vec_json(y));
            sensors.push_back(json{{"sensor", s.scan.sensor_id}, {"measurements", meas}, {"origins", s.truth_origins}});
        }
        scans.push_back(json{{"step", n + 1}, {"scans", sensors}});

        json snaps = json::array();
        for (const auto& g : data.snapshots[n]) snaps.push_back(snapshot_json(g));
        network.push_back(json{{"step", n + 1}, {"snapshots", snaps}});
    }
    write_lines(dir / "truth.jsonl", truth);
    write_lines(dir / "scans.jsonl", scans);
    write_lines(dir / "network.jsonl", network);

    json objects = json::array();
    for (const auto& o : data.initial_belief.objects) {
        json cov = json::array();
        for (int r = 0; r < kStateDim; ++r) cov.push_back(vec_json(o.cov.row(r).transpose()));
        objects.push_back(json{{"mean", vec_json(o.mean)}, {"cov", cov}});
    }
    write_text(dir / "prior.json", json{{"run", data.run}, {"objects", objects}}.dump(2) + "\n");
    write_text(dir / "scenario.lock.json", scenario.to_json().dump(2) + "\n");
}

Bundle read_bundle(const std::filesystem::path& dir) {
    Bundle b;
    b.scenario = load_scenario(dir / "scenario.lock.json");
    const Scenario& sc = b.scenario;

    const auto truth = read_jsonl(dir / "truth.jsonl");
    const auto scans = read_jsonl(dir / "scans.jsonl");
    const auto network = read_jsonl(dir / "network.jsonl");
    if (static_cast<int>(truth.size()) != sc.num_steps || scans.size() != truth.size() ||
        network.size() != truth.size())
        throw IoError(dir.string() + ": bundle files must hold one record per time step");

    try {
        for (int n = 0; n < sc.num_steps; ++n) {
            if (truth[n].at("step").get<int>() != n + 1) throw IoError("truth.jsonl: steps out of order");
            std::vector<StateVector> states;
            for (const auto& x : truth[n].at("states")) states.push_back(read_vec<kStateDim>(x, "truth.jsonl"));
            b.data.truth.states.push_back(std::move(states));

            std::vector<SimulatedScan> step_scans;
            for (const auto& s : scans[n].at("scans")) {
                SimulatedScan scan;
                scan.scan.sensor_id = s.at("sensor").get<int>();
                scan.scan.time_step = n + 1;
                for (const auto& y : s.at("measurements")) scan.scan.measurements.push_back(read_vec<kMeasDim>(y, "scans.jsonl"));
                scan.truth_origins = s.at("origins").get<std::vector<int>>();
                if (scan.truth_origins.size() != scan.scan.measurements.size())
                    throw IoError("scans.jsonl: origins and measurements differ in length");
                step_scans.push_back(std::move(scan));
            }
            if (static_cast<int>(step_scans.size()) != sc.num_sensors) throw IoError("scans.jsonl: wrong sensor count");
            b.data.scans.push_back(std::move(step_scans));

            std::vector<GraphSnapshot> snaps;
            for (const auto& g : network[n].at("snapshots")) snaps.push_back(read_snapshot(g, sc.num_sensors, n + 1));
            if (snaps.empty()) throw IoError("network.jsonl: step without snapshots");
            b.data.snapshots.push_back(std::move(snaps));
        }

        std::ifstream in(dir / "prior.json");
        if (!in) throw IoError("cannot open " + (dir / "prior.json").string());
        const json prior = json::parse(in);
        b.data.run = prior.at("run").get<int>();
        for (const auto& o : prior.at("objects")) {
            ObjectGaussian g;
            g.mean = read_vec<kStateDim>(o.at("mean"), "prior.json");
            for (int r = 0; r < kStateDim; ++r) g.cov.row(r) = read_vec<kStateDim>(o.at("cov").at(r), "prior.json").transpose();
            b.data.initial_belief.objects.push_back(g);
        }
    } catch (const json::exception& e) {
        throw IoError(dir.string() + ": malformed bundle: " + e.what());
    }
    if (b.data.initial_belief.num_objects() != sc.num_objects) throw IoError("prior.json: wrong object count");
    return b;
}

}  // namespace denfuse
