#include "denfuse/trackers.hpp"

#include "denfuse/errors.hpp"

#include <algorithm>
#include <cmath>

namespace denfuse {

void TrackerConfig::validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be positive");
    if (max_iterations < 0 || consensus_rounds < 0 || vi_iterations < 0 || max_halvings < 0)
        throw ConfigError("iteration counts must be nonnegative");
}

TrackerState TrackerState::initial(const GaussianBelief& belief, int num_sensors) {
    if (num_sensors < 1) throw ConfigError("tracker needs at least one sensor");
    TrackerState st;
    const NaturalParams lambda = nat_from_moments(belief);
    st.sensors.assign(num_sensors, SensorState{lambda, lambda, {}});
    return st;
}

namespace {

void check_inputs(std::size_t expected, std::size_t scans, std::size_t sensors) {
    if (scans != expected || sensors != expected)
        throw ConfigError("expected " + std::to_string(expected) + " scans and sensor models, got " +
                          std::to_string(scans) + " and " + std::to_string(sensors));
}

/// Prediction for every sensor entry; lambda is reset to the prior.
TrackerState predicted(const TrackerState& state, const DynamicsModel& dyn) {
    TrackerState out;
    out.communication_iterations = state.communication_iterations;
    out.time_step = state.time_step + 1;
    out.sensors.reserve(state.sensors.size());
    for (const auto& s : state.sensors) {
        const NaturalParams eta = nat_from_moments(predict_belief(moments_from_nat(s.lambda), dyn));
        out.sensors.push_back(SensorState{eta, eta, {}});
    }
    return out;
}

Eigen::MatrixXd stack(std::span<const NaturalParams> params) {
    Eigen::MatrixXd out(params.size(), kBlockSize * params.front().num_objects());
    for (std::size_t s = 0; s < params.size(); ++s) flatten_into(params[s], out.row(s));
    return out;
}

const GraphSnapshot& snapshot_for(std::span<const GraphSnapshot> snapshots, int index) {
    return snapshots[std::min<std::size_t>(index, snapshots.size() - 1)];
}

}  // namespace

DengOutcome deng_vt_update(std::span<const NaturalParams> etas, std::span<const Scan> scans,
                           std::span<const SensorModel> sensors, std::span<const GraphSnapshot> snapshots,
                           const TrackerConfig& cfg, const IterationObserver& observer) {
    cfg.validate();
    const std::size_t n = etas.size();
    if (n == 0) throw ConfigError("DeNG-VT needs at least one sensor");
    check_inputs(n, scans.size(), sensors.size());
    if (cfg.max_iterations > 0 && snapshots.empty()) throw ConfigError("DeNG-VT needs graph snapshots");
    const int num_sensors = static_cast<int>(n);

    auto local_gradient = [&](std::size_t s, const NaturalParams& lambda) {
        return natural_gradient_local(lambda, etas[s], scans[s], sensors[s], num_sensors, cfg.variant);
    };

    DengOutcome out;
    out.lambdas.assign(etas.begin(), etas.end());
    std::vector<NaturalParams> grads;
    grads.reserve(n);
    for (std::size_t s = 0; s < n; ++s) grads.push_back(local_gradient(s, out.lambdas[s]));
    out.trackers = grads;
    if (observer) observer(IterationView{0, out.lambdas, out.trackers, grads});

    MixingCache cache;
    std::vector<NaturalParams> next_lambdas(n);
    std::vector<NaturalParams> next_grads(n);
    std::vector<NaturalParams> next_trackers(n);
    for (int i = 0; i < cfg.max_iterations; ++i) {
        const MixingMatrix& w = cache.get(snapshot_for(snapshots, i));
        if (w.num_nodes() != num_sensors) throw ConfigError("snapshot size does not match sensor count");
        const Eigen::MatrixXd mixed_lambda = mix(stack(out.lambdas), w);
        const Eigen::MatrixXd mixed_tracker = mix(stack(out.trackers), w);

        for (std::size_t s = 0; s < n; ++s) {
            NaturalParams candidate = unflatten(mixed_lambda.row(s).transpose());
            const NaturalParams& step = out.trackers[s];
            for (int k = 0; k < candidate.num_objects(); ++k) {
                const NaturalBlock base = candidate.blocks[k];
                double scale = cfg.alpha;
                int halvings = 0;
                for (;;) {
                    NaturalBlock& b = candidate.blocks[k];
                    b.linear = base.linear + scale * step.blocks[k].linear;
                    b.quadratic = base.quadratic + scale * step.blocks[k].quadratic;
                    if (is_valid_block(b)) break;
                    if (halvings == cfg.max_halvings) throw TrackerDiverged(static_cast<int>(s), k, i + 1);
                    scale *= 0.5;
                    ++halvings;
                }
                if (halvings > 0) ++out.damped_steps;
            }
            next_grads[s] = local_gradient(s, candidate);
            next_trackers[s] = unflatten(mixed_tracker.row(s).transpose()) + next_grads[s] - grads[s];
            next_lambdas[s] = std::move(candidate);
        }
        std::swap(out.lambdas, next_lambdas);
        std::swap(out.trackers, next_trackers);
        std::swap(grads, next_grads);
        if (observer) observer(IterationView{i + 1, out.lambdas, out.trackers, grads});
    }
    return out;
}

NaturalParams cavi_update(const NaturalParams& eta, std::span<const Scan> scans, std::span<const SensorModel> sensors,
                          int iterations, const std::function<void(int, const NaturalParams&)>& observer) {
    if (scans.size() != sensors.size()) throw ConfigError("scan and sensor counts must agree");
    NaturalParams lambda = eta;
    if (observer) observer(0, lambda);
    std::vector<AssociationPosterior> assoc(scans.size());
    for (int it = 0; it < iterations; ++it) {
        const GaussianBelief belief = moments_from_nat(lambda);
        for (std::size_t s = 0; s < scans.size(); ++s) assoc[s] = association_posterior(belief, scans[s], sensors[s]);
        lambda = cavi_state_update(eta, scans, sensors, assoc);
        if (observer) observer(it + 1, lambda);
    }
    return lambda;
}

TrackerState deng_vt_time_step(const TrackerState& state, std::span<const Scan> scans, const TrackingModel& model,
                               std::span<const GraphSnapshot> snapshots, const TrackerConfig& cfg,
                               const IterationObserver& observer) {
    check_inputs(state.sensors.size(), scans.size(), model.sensors.size());
    TrackerState out = predicted(state, model.dynamics);
    std::vector<NaturalParams> etas;
    etas.reserve(out.sensors.size());
    for (const auto& s : out.sensors) etas.push_back(s.eta);
    DengOutcome result = deng_vt_update(etas, scans, model.sensors, snapshots, cfg, observer);
    for (std::size_t s = 0; s < out.sensors.size(); ++s) {
        out.sensors[s].lambda = std::move(result.lambdas[s]);
        out.sensors[s].tracker = std::move(result.trackers[s]);
    }
    out.communication_iterations += cfg.max_iterations;
    return out;
}

TrackerState c_vt_time_step(const TrackerState& state, std::span<const Scan> scans, const TrackingModel& model,
                            const TrackerConfig& cfg, const std::function<void(int, const NaturalParams&)>& observer) {
    if (state.sensors.size() != 1) throw ConfigError("C-VT state must hold exactly one entry");
    check_inputs(model.sensors.size(), scans.size(), model.sensors.size());
    TrackerState out = predicted(state, model.dynamics);
    out.sensors[0].lambda = cavi_update(out.sensors[0].eta, scans, model.sensors, cfg.vi_iterations, observer);
    return out;
}

TrackerState i_vt_time_step(const TrackerState& state, std::span<const Scan> scans, const TrackingModel& model,
                            const TrackerConfig& cfg) {
    check_inputs(state.sensors.size(), scans.size(), model.sensors.size());
    TrackerState out = predicted(state, model.dynamics);
    for (std::size_t s = 0; s < out.sensors.size(); ++s)
        out.sensors[s].lambda =
            cavi_update(out.sensors[s].eta, scans.subspan(s, 1), std::span(model.sensors).subspan(s, 1),
                        cfg.vi_iterations);
    return out;
}

TrackerState dec_vt_time_step(const TrackerState& state, std::span<const Scan> scans, const TrackingModel& model,
                              std::span<const GraphSnapshot> snapshots, const TrackerConfig& cfg) {
    cfg.validate();
    check_inputs(state.sensors.size(), scans.size(), model.sensors.size());
    TrackerState out = predicted(state, model.dynamics);
    const std::size_t n = out.sensors.size();
    if (cfg.consensus_rounds > 0 && snapshots.empty()) throw ConfigError("DeC-VT needs graph snapshots");

    std::vector<NaturalParams> stats(n);
    for (int it = 0; it < cfg.vi_iterations; ++it) {
        for (std::size_t s = 0; s < n; ++s) {
            const auto& ss = out.sensors[s];
            stats[s] = data_statistics(association_posterior(ss.lambda, scans[s], model.sensors[s]), scans[s],
                                       model.sensors[s]);
        }
        if (cfg.consensus_rounds == 0) {
            for (std::size_t s = 0; s < n; ++s) out.sensors[s].lambda = out.sensors[s].eta + stats[s];
            continue;
        }
        // The network sum of the statistics is N times their average.
        Eigen::MatrixXd payload = stack(stats) * static_cast<double>(n);
        const ConsensusResult agreed = average_consensus(payload, snapshots, cfg.consensus_rounds);
        for (std::size_t s = 0; s < n; ++s)
            out.sensors[s].lambda = out.sensors[s].eta + unflatten(agreed.values.row(s).transpose());
    }
    out.communication_iterations += static_cast<std::int64_t>(cfg.vi_iterations) * cfg.consensus_rounds;
    return out;
}

namespace {

/// Payload layout matches flatten(): mean, then upper triangle of E[x x^T].
void moments_row(const GaussianBelief& b, Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row) {
    Eigen::Index i = 0;
    for (const auto& o : b.objects) {
        const StateMatrix second = o.cov + o.mean * o.mean.transpose();
        for (int a = 0; a < kStateDim; ++a) row(i++) = o.mean(a);
        for (int r = 0; r < kStateDim; ++r)
            for (int c = r; c < kStateDim; ++c) row(i++) = second(r, c);
    }
}

GaussianBelief belief_from_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
    const NaturalParams packed = unflatten(row.transpose());
    GaussianBelief out;
    out.objects.reserve(packed.blocks.size());
    for (const auto& b : packed.blocks) {
        ObjectGaussian o;
        o.mean = b.linear;
        o.cov = symmetrised(b.quadratic - b.linear * b.linear.transpose());
        out.objects.push_back(o);
    }
    return out;
}

}  // namespace

std::vector<GaussianBelief> aa_fuse(std::span<const GaussianBelief> beliefs, std::span<const GraphSnapshot> snapshots,
                                    int rounds) {
    if (beliefs.empty()) return {};
    Eigen::MatrixXd payload(beliefs.size(), kBlockSize * beliefs.front().num_objects());
    for (std::size_t s = 0; s < beliefs.size(); ++s) moments_row(beliefs[s], payload.row(s));
    const ConsensusResult agreed = average_consensus(payload, snapshots, rounds);
    std::vector<GaussianBelief> out;
    out.reserve(beliefs.size());
    for (Eigen::Index s = 0; s < agreed.values.rows(); ++s) out.push_back(belief_from_row(agreed.values.row(s)));
    return out;
}

TrackerState deaa_vt_time_step(const TrackerState& state, std::span<const Scan> scans, const TrackingModel& model,
                               std::span<const GraphSnapshot> snapshots, const TrackerConfig& cfg) {
    cfg.validate();
    TrackerState out = i_vt_time_step(state, scans, model, cfg);
    if (cfg.consensus_rounds == 0) return out;
    if (snapshots.empty()) throw ConfigError("DeAA-VT needs graph snapshots");
    std::vector<GaussianBelief> local;
    local.reserve(out.sensors.size());
    for (const auto& s : out.sensors) local.push_back(moments_from_nat(s.lambda));
    const auto fused = aa_fuse(local, snapshots, cfg.consensus_rounds);
    for (std::size_t s = 0; s < out.sensors.size(); ++s) out.sensors[s].lambda = nat_from_moments(fused[s]);
    out.communication_iterations += cfg.consensus_rounds;
    return out;
}

NaturalParams effective_prior(std::span<const NaturalParams> etas) {
    if (etas.empty()) throw ConfigError("effective prior needs at least one sensor");
    NaturalParams sum = etas.front();
    for (std::size_t s = 1; s < etas.size(); ++s) sum += etas[s];
    return (1.0 / static_cast<double>(etas.size())) * std::move(sum);
}

GaussianBelief effective_prior_check(std::span<const NaturalParams> etas) {
    return moments_from_nat(effective_prior(etas));
}

}  // namespace denfuse
