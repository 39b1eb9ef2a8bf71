#pragma once

#include "denfuse/model.hpp"
#include "denfuse/types.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

namespace denfuse {

/// Ground-truth states; states[n][k] is object k at time step n + 1.
struct GroundTruth {
    std::vector<std::vector<StateVector>> states;

    [[nodiscard]] int steps() const { return static_cast<int>(states.size()); }
    [[nodiscard]] int num_objects() const { return states.empty() ? 0 : static_cast<int>(states.front().size()); }
    [[nodiscard]] std::vector<MeasVector> positions(int step_index) const;
};

/// Tracker-facing measurement batch of one sensor at one time step.
struct Scan {
    int sensor_id = 0;
    int time_step = 0;
    std::vector<MeasVector> measurements;
};

/// Simulator output: the scan together with the hidden origin labels.
struct SimulatedScan {
    Scan scan;
    std::vector<int> truth_origins;
};

/// Drops the origin labels before anything reaches a tracker.
[[nodiscard]] Scan strip_labels(const SimulatedScan& s);
[[nodiscard]] std::vector<Scan> strip_labels(std::span<const SimulatedScan> s);

struct Region {
    Eigen::Vector2d lower = Eigen::Vector2d::Zero();
    Eigen::Vector2d upper = Eigen::Vector2d::Ones();

    [[nodiscard]] double volume() const { return (upper - lower).prod(); }
    [[nodiscard]] bool contains(const Eigen::Vector2d& p) const {
        return (p.array() >= lower.array()).all() && (p.array() <= upper.array()).all();
    }
};

struct GraphSnapshot {
    int time_step = 0;
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> adjacency;
    std::vector<int> degrees;

    [[nodiscard]] int num_nodes() const { return static_cast<int>(adjacency.rows()); }
    [[nodiscard]] static GraphSnapshot from_adjacency(int time_step,
                                                      const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& adj);
    [[nodiscard]] static GraphSnapshot complete(int num_nodes, int time_step = 0);
    [[nodiscard]] static GraphSnapshot path(int num_nodes, int time_step = 0);
};

/// Breadth-first connectivity test.
[[nodiscard]] bool is_connected(const GraphSnapshot& g);

/// Random geometric graph over fixed positions with i.i.d. edge dropout,
/// resampled until connected.
struct NetworkPolicy {
    double radius = 1.0;
    double dropout = 0.2;
    int max_retries = 100;
};

[[nodiscard]] GroundTruth simulate_truth(std::span<const StateVector> initial_states, const DynamicsModel& dyn,
                                         int steps, std::uint64_t seed);

/// One scan per sensor at `time_step`. Sensor s draws from derive_seed(seed, {s}).
[[nodiscard]] std::vector<SimulatedScan> simulate_scan(std::span<const StateVector> truth_step,
                                                       std::span<const SensorModel> sensors, const Region& region,
                                                       std::uint64_t seed, int time_step = 0);

/// One connected snapshot per time step 1..steps.
[[nodiscard]] std::vector<GraphSnapshot> generate_network(std::span<const Eigen::Vector2d> positions,
                                                          const NetworkPolicy& policy, int steps,
                                                          std::uint64_t seed);

/// Single snapshot; the per-step and per-iteration generators both use it.
[[nodiscard]] GraphSnapshot sample_snapshot(std::span<const Eigen::Vector2d> positions, const NetworkPolicy& policy,
                                            int time_step, std::uint64_t seed);

/// K objects uniform in a box with velocities uniform in [-speed, speed]^2.
[[nodiscard]] std::vector<StateVector> random_initial_states(int num_objects, const Region& spawn, double speed,
                                                             std::uint64_t seed);

/// Sensor positions uniform in `area`, redrawn until the radius graph (no
/// dropout) is connected.
[[nodiscard]] std::vector<Eigen::Vector2d> random_sensor_layout(int num_sensors, const Region& area, double radius,
                                                                std::uint64_t seed, int max_retries = 1000);

}  // namespace denfuse
