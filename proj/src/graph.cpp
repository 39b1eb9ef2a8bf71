#include "denfuse/graph.hpp"

#include "denfuse/errors.hpp"

#include <algorithm>

namespace denfuse {

MixingMatrix metropolis_weights(const GraphSnapshot& g) {
    const int n = g.num_nodes();
    MixingMatrix w;
    w.time_step = g.time_step;
    w.weights = Eigen::MatrixXd::Zero(n, n);
    for (int s = 0; s < n; ++s) {
        for (int j = 0; j < n; ++j) {
            if (j != s && g.adjacency(s, j))
                w.weights(s, j) = 1.0 / (1.0 + std::max(g.degrees[s], g.degrees[j]));
        }
    }
    for (int s = 0; s < n; ++s) w.weights(s, s) = 1.0 - w.weights.row(s).sum();
    return w;
}

Eigen::MatrixXd mix(const Eigen::MatrixXd& values, const MixingMatrix& w) {
    if (values.rows() != w.num_nodes())
        throw ConfigError("mix: got " + std::to_string(values.rows()) + " payloads for " +
                          std::to_string(w.num_nodes()) + " sensors");
    // Self term first, then neighbours by index: rows with identical inputs
    // and weights run the same operations and stay bit-identical.
    const int n = w.num_nodes();
    Eigen::MatrixXd out(values.rows(), values.cols());
    for (int s = 0; s < n; ++s) {
        out.row(s) = w.weights(s, s) * values.row(s);
        for (int j = 0; j < n; ++j) {
            const double wsj = w.weights(s, j);
            if (j != s && wsj != 0.0) out.row(s) += wsj * values.row(j);
        }
    }
    return out;
}

std::vector<Eigen::VectorXd> mix(std::span<const Eigen::VectorXd> values, const MixingMatrix& w) {
    if (values.empty()) return {};
    const Eigen::Index len = values.front().size();
    Eigen::MatrixXd stacked(values.size(), len);
    for (std::size_t s = 0; s < values.size(); ++s) {
        if (values[s].size() != len) throw ConfigError("mix: payload lengths differ");
        stacked.row(s) = values[s].transpose();
    }
    const Eigen::MatrixXd mixed = mix(stacked, w);
    std::vector<Eigen::VectorXd> out;
    out.reserve(values.size());
    for (Eigen::Index s = 0; s < mixed.rows(); ++s) out.emplace_back(mixed.row(s).transpose());
    return out;
}

double max_disagreement(const Eigen::MatrixXd& values) {
    if (values.rows() == 0) return 0.0;
    const Eigen::RowVectorXd mean = values.colwise().mean();
    return (values.rowwise() - mean).rowwise().norm().maxCoeff();
}

ConsensusResult average_consensus(const Eigen::MatrixXd& values, std::span<const GraphSnapshot> snapshots,
                                  int rounds) {
    if (rounds < 0) throw ConfigError("consensus rounds must be nonnegative");
    ConsensusResult out;
    out.values = values;
    out.disagreement.reserve(rounds + 1);
    out.disagreement.push_back(max_disagreement(out.values));
    if (rounds > 0 && snapshots.empty()) throw ConfigError("consensus needs at least one snapshot");
    MixingCache cache;
    for (int r = 0; r < rounds; ++r) {
        const auto& g = snapshots[std::min<std::size_t>(r, snapshots.size() - 1)];
        out.values = mix(out.values, cache.get(g));
        out.disagreement.push_back(max_disagreement(out.values));
    }
    return out;
}

const MixingMatrix& MixingCache::get(const GraphSnapshot& g) {
    if (!cached_ || adjacency_.rows() != g.adjacency.rows() || adjacency_ != g.adjacency) {
        cached_ = metropolis_weights(g);
        adjacency_ = g.adjacency;
    }
    return *cached_;
}

}  // namespace denfuse
