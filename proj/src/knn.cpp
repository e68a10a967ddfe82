#include "qlayout/knn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace qlayout {

namespace {

using Candidate = std::pair<double, std::size_t>;

void keep_k_smallest(std::vector<Candidate>& c, int k) {
  const auto kk = std::min<std::size_t>(static_cast<std::size_t>(k), c.size());
  std::partial_sort(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(kk), c.end());
  c.resize(kk);
}

}  // namespace

std::vector<std::size_t> knn_brute_force(std::span<const Vec3> points, const Vec3& p, int k) {
  std::vector<Candidate> all;
  all.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) all.emplace_back((points[i] - p).squaredNorm(), i);
  keep_k_smallest(all, k);
  std::vector<std::size_t> out;
  for (const auto& c : all) out.push_back(c.second);
  return out;
}

KnnGrid::KnnGrid(std::span<const Vec3> points, int target_per_cell) : points_(points) {
  Vec3 lo = Vec3::Constant(0.0), hi = Vec3::Constant(0.0);
  if (!points.empty()) {
    lo = hi = points[0];
    for (const auto& p : points) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
  }
  const Vec3 extent = (hi - lo).cwiseMax(1e-9);
  // Cell edge chosen so that a cell of the bounding volume holds ~target points.
  // Flat clouds are handled by sizing on the two largest extents.
  Vec3 sorted = extent;
  std::sort(sorted.data(), sorted.data() + 3);
  const double n = std::max<double>(1.0, static_cast<double>(points.size()) / target_per_cell);
  double cell = std::sqrt(sorted[1] * sorted[2] / n);
  if (sorted[0] > cell) cell = std::cbrt(extent.prod() / n);
  cell_ = std::max(cell, 1e-9);
  origin_ = lo;
  for (int a = 0; a < 3; ++a)
    dims_[a] = std::max(1, static_cast<int>(std::floor(extent[a] / cell_)) + 1);

  const std::size_t ncell = static_cast<std::size_t>(dims_.x()) * dims_.y() * dims_.z();
  std::vector<std::size_t> counts(ncell + 1, 0);
  std::vector<std::size_t> owner(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto c = cell_of(points[i]);
    owner[i] = flat(c.x(), c.y(), c.z());
    ++counts[owner[i] + 1];
  }
  for (std::size_t i = 1; i <= ncell; ++i) counts[i] += counts[i - 1];
  cell_start_ = counts;
  cell_items_.resize(points.size());
  std::vector<std::size_t> fill(counts.begin(), counts.end() - 1);
  for (std::size_t i = 0; i < points.size(); ++i) cell_items_[fill[owner[i]]++] = i;
}

Eigen::Vector3i KnnGrid::cell_of(const Vec3& p) const {
  Eigen::Vector3i c;
  for (int a = 0; a < 3; ++a) {
    const int v = static_cast<int>(std::floor((p[a] - origin_[a]) / cell_));
    c[a] = std::clamp(v, 0, dims_[a] - 1);
  }
  return c;
}

std::size_t KnnGrid::flat(int x, int y, int z) const {
  return (static_cast<std::size_t>(z) * dims_.y() + y) * dims_.x() + x;
}

std::vector<std::size_t> KnnGrid::query(const Vec3& p, int k) const {
  std::vector<Candidate> cand;
  const auto c = cell_of(p);
  const int max_ring = dims_.maxCoeff();
  for (int r = 0; r <= max_ring; ++r) {
    for (int z = c.z() - r; z <= c.z() + r; ++z) {
      if (z < 0 || z >= dims_.z()) continue;
      for (int y = c.y() - r; y <= c.y() + r; ++y) {
        if (y < 0 || y >= dims_.y()) continue;
        for (int x = c.x() - r; x <= c.x() + r; ++x) {
          if (x < 0 || x >= dims_.x()) continue;
          const bool shell = std::abs(x - c.x()) == r || std::abs(y - c.y()) == r ||
                             std::abs(z - c.z()) == r;
          if (!shell) continue;
          const std::size_t f = flat(x, y, z);
          for (std::size_t it = cell_start_[f]; it < cell_start_[f + 1]; ++it) {
            const std::size_t i = cell_items_[it];
            cand.emplace_back((points_[i] - p).squaredNorm(), i);
          }
        }
      }
    }
    if (cand.size() >= static_cast<std::size_t>(k)) {
      keep_k_smallest(cand, k);
      // Anything not yet visited lies outside the (2r+1)^3 block around c.
      double bound = std::numeric_limits<double>::infinity();
      for (int a = 0; a < 3; ++a) {
        const double lo = origin_[a] + (c[a] - r) * cell_;
        const double hi = origin_[a] + (c[a] + r + 1) * cell_;
        if (c[a] - r > 0) bound = std::min(bound, p[a] - lo);
        if (c[a] + r + 1 < dims_[a]) bound = std::min(bound, hi - p[a]);
      }
      if (bound == std::numeric_limits<double>::infinity()) break;
      if (bound > 0.0 && cand.back().first < bound * bound) break;
    }
  }
  keep_k_smallest(cand, k);
  std::vector<std::size_t> out;
  out.reserve(cand.size());
  for (const auto& cc : cand) out.push_back(cc.second);
  return out;
}

}  // namespace qlayout
