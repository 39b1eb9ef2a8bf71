#include "denfuse/sim.hpp"

#include "denfuse/errors.hpp"
#include "denfuse/rng.hpp"

#include <queue>
#include <random>

namespace denfuse {

std::vector<MeasVector> GroundTruth::positions(int step_index) const {
    const ObsMatrix h = position_observation();
    std::vector<MeasVector> out;
    out.reserve(states.at(step_index).size());
    for (const auto& x : states[step_index]) out.push_back(h * x);
    return out;
}

Scan strip_labels(const SimulatedScan& s) { return s.scan; }

std::vector<Scan> strip_labels(std::span<const SimulatedScan> s) {
    std::vector<Scan> out;
    out.reserve(s.size());
    for (const auto& x : s) out.push_back(x.scan);
    return out;
}

GraphSnapshot GraphSnapshot::from_adjacency(int time_step,
                                            const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& adj) {
    if (adj.rows() != adj.cols()) throw ConfigError("adjacency must be square");
    GraphSnapshot g;
    g.time_step = time_step;
    g.adjacency = adj;
    const int n = static_cast<int>(adj.rows());
    g.degrees.assign(n, 0);
    for (int i = 0; i < n; ++i) {
        if (adj(i, i)) throw ConfigError("adjacency diagonal must be false");
        for (int j = 0; j < n; ++j) {
            if (adj(i, j) != adj(j, i)) throw ConfigError("adjacency must be symmetric");
            if (adj(i, j)) ++g.degrees[i];
        }
    }
    return g;
}

GraphSnapshot GraphSnapshot::complete(int num_nodes, int time_step) {
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> adj =
        Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(num_nodes, num_nodes, true);
    adj.diagonal().setConstant(false);
    return from_adjacency(time_step, adj);
}

GraphSnapshot GraphSnapshot::path(int num_nodes, int time_step) {
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> adj =
        Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(num_nodes, num_nodes, false);
    for (int i = 0; i + 1 < num_nodes; ++i) adj(i, i + 1) = adj(i + 1, i) = true;
    return from_adjacency(time_step, adj);
}

bool is_connected(const GraphSnapshot& g) {
    const int n = g.num_nodes();
    if (n <= 1) return true;
    std::vector<bool> seen(n, false);
    std::queue<int> frontier;
    frontier.push(0);
    seen[0] = true;
    int reached = 1;
    while (!frontier.empty()) {
        const int u = frontier.front();
        frontier.pop();
        for (int v = 0; v < n; ++v) {
            if (g.adjacency(u, v) && !seen[v]) {
                seen[v] = true;
                ++reached;
                frontier.push(v);
            }
        }
    }
    return reached == n;
}

GroundTruth simulate_truth(std::span<const StateVector> initial_states, const DynamicsModel& dyn, int steps,
                           std::uint64_t seed) {
    if (steps < 1) throw ConfigError("simulate_truth needs at least one step");
    GroundTruth truth;
    truth.states.reserve(steps);

    Eigen::LLT<StateMatrix> llt(dyn.process_noise);
    // Q may be singular (e.g. zero); fall back to the eigen square root.
    StateMatrix noise_factor;
    if (llt.info() == Eigen::Success) {
        noise_factor = llt.matrixL();
    } else {
        Eigen::SelfAdjointEigenSolver<StateMatrix> eig(dyn.process_noise);
        noise_factor = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    }

    std::vector<StateVector> current(initial_states.begin(), initial_states.end());
    const int k_count = static_cast<int>(current.size());
    for (int n = 0; n < steps; ++n) {
        for (int k = 0; k < k_count; ++k) {
            Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(k)}));
            std::normal_distribution<double> normal;
            StateVector w;
            for (int d = 0; d < kStateDim; ++d) w(d) = normal(rng);
            current[k] = dyn.transition * current[k] + noise_factor * w;
        }
        truth.states.push_back(current);
    }
    return truth;
}

std::vector<SimulatedScan> simulate_scan(std::span<const StateVector> truth_step, std::span<const SensorModel> sensors,
                                         const Region& region, std::uint64_t seed, int time_step) {
    std::vector<SimulatedScan> out;
    out.reserve(sensors.size());
    for (std::size_t s = 0; s < sensors.size(); ++s) {
        const SensorModel& sensor = sensors[s];
        if (static_cast<std::size_t>(sensor.num_objects()) != truth_step.size())
            throw ConfigError("sensor object count does not match truth");
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(s)}));

        SimulatedScan scan;
        scan.scan.sensor_id = static_cast<int>(s);
        scan.scan.time_step = time_step;

        const double total = sensor.rates.sum();
        if (total > 0.0) {
            std::poisson_distribution<int> count_dist(total);
            const int count = count_dist(rng);
            std::discrete_distribution<int> origin_dist(sensor.rates.data(), sensor.rates.data() + sensor.rates.size());
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            std::normal_distribution<double> normal;
            scan.scan.measurements.reserve(count);
            scan.truth_origins.reserve(count);
            for (int j = 0; j < count; ++j) {
                const int origin = origin_dist(rng);
                MeasVector y;
                if (origin == 0) {
                    y(0) = region.lower(0) + unit(rng) * (region.upper(0) - region.lower(0));
                    y(1) = region.lower(1) + unit(rng) * (region.upper(1) - region.lower(1));
                } else {
                    const MeasMatrix l = sensor.noise[origin - 1].llt().matrixL();
                    MeasVector z(normal(rng), normal(rng));
                    y = sensor.observation * truth_step[origin - 1] + l * z;
                }
                scan.scan.measurements.push_back(y);
                scan.truth_origins.push_back(origin);
            }
        }
        out.push_back(std::move(scan));
    }
    return out;
}

namespace {

Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> radius_graph(std::span<const Eigen::Vector2d> positions,
                                                                 double radius) {
    const int n = static_cast<int>(positions.size());
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> adj =
        Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, n, false);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if ((positions[i] - positions[j]).norm() <= radius) adj(i, j) = adj(j, i) = true;
    return adj;
}

}  // namespace

GraphSnapshot sample_snapshot(std::span<const Eigen::Vector2d> positions, const NetworkPolicy& policy, int time_step,
                              std::uint64_t seed) {
    const int n = static_cast<int>(positions.size());
    if (n < 1) throw ConfigError("network needs at least one node");
    const auto base = radius_graph(positions, policy.radius);
    Rng rng(seed);
    std::bernoulli_distribution drop(policy.dropout);
    for (int attempt = 0; attempt <= policy.max_retries; ++attempt) {
        auto adj = base;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (adj(i, j) && drop(rng)) adj(i, j) = adj(j, i) = false;
        auto g = GraphSnapshot::from_adjacency(time_step, adj);
        if (is_connected(g)) return g;
    }
    throw SimulationError("no connected graph at time step " + std::to_string(time_step) + " within " +
                          std::to_string(policy.max_retries) + " retries");
}

std::vector<GraphSnapshot> generate_network(std::span<const Eigen::Vector2d> positions, const NetworkPolicy& policy,
                                            int steps, std::uint64_t seed) {
    std::vector<GraphSnapshot> out;
    out.reserve(steps);
    for (int n = 1; n <= steps; ++n)
        out.push_back(sample_snapshot(positions, policy, n, derive_seed(seed, {static_cast<std::uint64_t>(n)})));
    return out;
}

std::vector<StateVector> random_initial_states(int num_objects, const Region& spawn, double speed,
                                               std::uint64_t seed) {
    Rng rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> vel(-speed, speed);
    std::vector<StateVector> out;
    out.reserve(num_objects);
    for (int k = 0; k < num_objects; ++k) {
        StateVector x;
        x(0) = spawn.lower(0) + unit(rng) * (spawn.upper(0) - spawn.lower(0));
        x(1) = vel(rng);
        x(2) = spawn.lower(1) + unit(rng) * (spawn.upper(1) - spawn.lower(1));
        x(3) = vel(rng);
        out.push_back(x);
    }
    return out;
}

std::vector<Eigen::Vector2d> random_sensor_layout(int num_sensors, const Region& area, double radius,
                                                  std::uint64_t seed, int max_retries) {
    Rng rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int attempt = 0; attempt <= max_retries; ++attempt) {
        std::vector<Eigen::Vector2d> pos;
        pos.reserve(num_sensors);
        for (int s = 0; s < num_sensors; ++s)
            pos.emplace_back(area.lower(0) + unit(rng) * (area.upper(0) - area.lower(0)),
                             area.lower(1) + unit(rng) * (area.upper(1) - area.lower(1)));
        if (is_connected(GraphSnapshot::from_adjacency(0, radius_graph(pos, radius)))) return pos;
    }
    throw SimulationError("could not place " + std::to_string(num_sensors) + " sensors with a connected radius graph");
}

}  // namespace denfuse
