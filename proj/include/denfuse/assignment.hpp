#pragma once

#include <Eigen/Dense>
#include <vector>

namespace denfuse {

/// Minimum-cost rectangular assignment (Hungarian method with potentials).
/// Every row is matched when rows <= cols, every column otherwise. Returns
/// the matched column for each row, or -1.
[[nodiscard]] std::vector<int> solve_assignment(const Eigen::MatrixXd& cost);

}  // namespace denfuse
