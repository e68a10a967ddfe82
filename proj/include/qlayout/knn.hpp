#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "qlayout/geometry.hpp"

namespace qlayout {

/// Exact k-nearest-neighbour queries over a fixed point set, backed by a
/// uniform voxel grid. Results are ordered by (squared distance, index), so
/// they match a brute-force scan exactly.
class KnnGrid {
 public:
  explicit KnnGrid(std::span<const Vec3> points, int target_per_cell = 8);

  std::vector<std::size_t> query(const Vec3& p, int k) const;

 private:
  std::span<const Vec3> points_;
  Vec3 origin_;
  double cell_ = 1.0;
  Eigen::Vector3i dims_;
  std::vector<std::size_t> cell_start_;
  std::vector<std::size_t> cell_items_;

  Eigen::Vector3i cell_of(const Vec3& p) const;
  std::size_t flat(int x, int y, int z) const;
};

/// O(n) scan reference for the same ordering.
std::vector<std::size_t> knn_brute_force(std::span<const Vec3> points, const Vec3& p, int k);

}  // namespace qlayout
