#pragma once

#include "denfuse/sim.hpp"

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

namespace denfuse {

/// Symmetric doubly stochastic consensus weights for one snapshot.
struct MixingMatrix {
    Eigen::MatrixXd weights;
    int time_step = 0;

    [[nodiscard]] int num_nodes() const { return static_cast<int>(weights.rows()); }
};

/// w_sj = 1 / (1 + max(d_s, d_j)) on edges, w_ss = 1 - sum of the row.
[[nodiscard]] MixingMatrix metropolis_weights(const GraphSnapshot& g);

/// One synchronous consensus round. Row s of `values` is sensor s's payload;
/// the result is W * values.
[[nodiscard]] Eigen::MatrixXd mix(const Eigen::MatrixXd& values, const MixingMatrix& w);
[[nodiscard]] std::vector<Eigen::VectorXd> mix(std::span<const Eigen::VectorXd> values, const MixingMatrix& w);

/// Largest Euclidean distance of any row from the network mean row.
[[nodiscard]] double max_disagreement(const Eigen::MatrixXd& values);

struct ConsensusResult {
    Eigen::MatrixXd values;
    /// disagreement[r] is measured after r rounds; size rounds + 1.
    std::vector<double> disagreement;
};

/// Runs `rounds` mixing rounds; round r uses snapshots[min(r, size - 1)].
[[nodiscard]] ConsensusResult average_consensus(const Eigen::MatrixXd& values, std::span<const GraphSnapshot> snapshots,
                                                int rounds);

/// Rebuilds Metropolis weights only when the adjacency changes.
class MixingCache {
public:
    const MixingMatrix& get(const GraphSnapshot& g);

private:
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> adjacency_;
    std::optional<MixingMatrix> cached_;
};

}  // namespace denfuse
