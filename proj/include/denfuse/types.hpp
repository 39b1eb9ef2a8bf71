#pragma once

#include <Eigen/Dense>

namespace denfuse {

/// Per-object kinematic state [x, vx, y, vy].
inline constexpr int kStateDim = 4;
/// Position-only measurement [x, y].
inline constexpr int kMeasDim = 2;

using StateVector = Eigen::Matrix<double, kStateDim, 1>;
using StateMatrix = Eigen::Matrix<double, kStateDim, kStateDim>;
using MeasVector = Eigen::Matrix<double, kMeasDim, 1>;
using MeasMatrix = Eigen::Matrix<double, kMeasDim, kMeasDim>;
using ObsMatrix = Eigen::Matrix<double, kMeasDim, kStateDim>;

/// Number of scalars in one flattened object block: the linear part then the
/// upper triangle (row-major) of the symmetric quadratic part.
inline constexpr int kBlockSize = kStateDim + kStateDim * (kStateDim + 1) / 2;

template <typename Derived>
[[nodiscard]] auto symmetrised(const Eigen::MatrixBase<Derived>& a) {
    return (0.5 * (a + a.transpose())).eval();
}

/// H extracting the two positions from [x, vx, y, vy].
[[nodiscard]] inline ObsMatrix position_observation() {
    ObsMatrix h = ObsMatrix::Zero();
    h(0, 0) = 1.0;
    h(1, 2) = 1.0;
    return h;
}

}  // namespace denfuse
