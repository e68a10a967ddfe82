#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace qlayout {

/// Minimum-cost one-to-one assignment on a rectangular cost matrix
/// (rows x cols). Every row is assigned when rows <= cols, otherwise every
/// column is. Returns, per row, the assigned column or -1.
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost);

}  // namespace qlayout
