#pragma once

#include "denfuse/graph.hpp"
#include "denfuse/model.hpp"
#include "denfuse/sim.hpp"
#include "denfuse/vi_core.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace denfuse {

struct TrackerConfig {
    double alpha = 1.0;
    int max_iterations = 100;  // DNGD iterations per time step
    GradientVariant variant = GradientVariant::canonical;
    int consensus_rounds = 50;  // DeC-VT / DeAA-VT
    int vi_iterations = 20;     // CAVI-based trackers
    int max_halvings = 20;      // step damping budget on PD violations

    void validate() const;
};

/// Models shared by every tracker: dynamics plus one sensor model per node.
struct TrackingModel {
    DynamicsModel dynamics;
    std::vector<SensorModel> sensors;

    [[nodiscard]] int num_sensors() const { return static_cast<int>(sensors.size()); }
};

struct SensorState {
    NaturalParams lambda;   // current posterior iterate
    NaturalParams eta;      // this step's predicted prior
    NaturalParams tracker;  // gradient-tracking estimate; empty unless DeNG-VT
};

struct TrackerState {
    std::vector<SensorState> sensors;
    std::int64_t communication_iterations = 0;
    int time_step = 0;

    /// Every sensor starts from the same belief.
    [[nodiscard]] static TrackerState initial(const GaussianBelief& belief, int num_sensors);
    [[nodiscard]] GaussianBelief belief(int sensor) const { return moments_from_nat(sensors.at(sensor).lambda); }
};

/// Snapshot of one DNGD iteration for diagnostics; local_gradients[s] is the
/// natural gradient of sensor s's local bound at lambdas[s].
struct IterationView {
    int iteration = 0;
    std::span<const NaturalParams> lambdas;
    std::span<const NaturalParams> trackers;
    std::span<const NaturalParams> local_gradients;
};
using IterationObserver = std::function<void(const IterationView&)>;

struct DengOutcome {
    std::vector<NaturalParams> lambdas;
    std::vector<NaturalParams> trackers;
    int damped_steps = 0;
};

/// Gradient-tracking DNGD from per-sensor priors; no prediction. Iteration i
/// mixes with snapshots[min(i, size - 1)].
[[nodiscard]] DengOutcome deng_vt_update(std::span<const NaturalParams> etas, std::span<const Scan> scans,
                                         std::span<const SensorModel> sensors,
                                         std::span<const GraphSnapshot> snapshots, const TrackerConfig& cfg,
                                         const IterationObserver& observer = {});

/// CAVI from lambda = eta: alternate association posteriors and the state
/// update for `iterations` rounds. observer(i, lambda) sees every iterate.
[[nodiscard]] NaturalParams cavi_update(const NaturalParams& eta, std::span<const Scan> scans,
                                        std::span<const SensorModel> sensors, int iterations,
                                        const std::function<void(int, const NaturalParams&)>& observer = {});

[[nodiscard]] TrackerState deng_vt_time_step(const TrackerState& state, std::span<const Scan> scans,
                                             const TrackingModel& model, std::span<const GraphSnapshot> snapshots,
                                             const TrackerConfig& cfg, const IterationObserver& observer = {});

/// Centralised tracker; `state` holds a single entry.
[[nodiscard]] TrackerState c_vt_time_step(const TrackerState& state, std::span<const Scan> scans,
                                          const TrackingModel& model, const TrackerConfig& cfg,
                                          const std::function<void(int, const NaturalParams&)>& observer = {});

[[nodiscard]] TrackerState i_vt_time_step(const TrackerState& state, std::span<const Scan> scans,
                                          const TrackingModel& model, const TrackerConfig& cfg);

/// Consensus CAVI on scaled local sufficient statistics.
[[nodiscard]] TrackerState dec_vt_time_step(const TrackerState& state, std::span<const Scan> scans,
                                            const TrackingModel& model, std::span<const GraphSnapshot> snapshots,
                                            const TrackerConfig& cfg);

/// Local CAVI followed by arithmetic-average fusion of per-object moments.
[[nodiscard]] TrackerState deaa_vt_time_step(const TrackerState& state, std::span<const Scan> scans,
                                             const TrackingModel& model, std::span<const GraphSnapshot> snapshots,
                                             const TrackerConfig& cfg);

/// Average consensus on (mu, Sigma + mu mu^T) per object, moment-matched back.
[[nodiscard]] std::vector<GaussianBelief> aa_fuse(std::span<const GaussianBelief> beliefs,
                                                  std::span<const GraphSnapshot> snapshots, int rounds);

/// Normalised product prod_s p(X; eta_s)^(1/N): the natural-parameter mean.
[[nodiscard]] NaturalParams effective_prior(std::span<const NaturalParams> etas);
[[nodiscard]] GaussianBelief effective_prior_check(std::span<const NaturalParams> etas);

}  // namespace denfuse
