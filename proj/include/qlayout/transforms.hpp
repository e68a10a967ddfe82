#pragma once

#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "qlayout/geometry.hpp"

namespace qlayout {

/// Rigid-plus-scale scene transformation. Applied as: flip x, flip y, rotate
/// about +z, then scale uniformly.
struct Transform {
  double rotation_angle = 0.0;
  bool flip_x = false;
  bool flip_y = false;
  double scale = 1.0;

  static Transform identity() { return {}; }

  Vec3 apply_point(const Vec3& p) const;
  Vec3 apply_direction(const Vec3& n) const;

  /// Maps points produced by apply_point back to the original frame.
  Vec3 invert_point(const Vec3& p) const;
  Vec3 invert_direction(const Vec3& n) const;
};

struct TransformConfig {
  std::vector<double> coarse_angles{0.0, std::numbers::pi / 2, std::numbers::pi,
                                    3 * std::numbers::pi / 2};
  double jitter_degrees = 5.0;
  double flip_prob = 0.5;
  double scale_min = 0.85;
  double scale_max = 1.15;
  std::size_t fps_target = 40000;

  void validate() const;

  /// A configuration that always yields the identity transform and skips
  /// downsampling.
  static TransformConfig disabled();
};

/// Greedy farthest point sampling. The first index is drawn uniformly from the
/// seeded stream; later picks maximise the distance to the chosen set, with
/// ties going to the lowest input index.
std::vector<std::size_t> farthest_point_indices(std::span<const Vec3> points, std::size_t m,
                                                std::uint64_t seed);

PointCloud farthest_point_sampling(const PointCloud& cloud, std::size_t m, std::uint64_t seed);

Transform sample_transform(const TransformConfig& config, std::uint64_t seed);

PointCloud apply_transform_cloud(const Transform& t, const PointCloud& cloud);

Quad apply_transform_quad(const Transform& t, const Quad& q);
std::vector<Quad> apply_transform_quads(const Transform& t, std::span<const Quad> quads);

/// Exact inverse: applying `inverse_transform_quads(t, ...)` after
/// `apply_transform_quads(t, ...)` restores the input.
std::vector<Quad> inverse_transform_quads(const Transform& t, std::span<const Quad> quads);

/// Child seeds for the student and teacher FPS paths of one batch seed.
struct PathSeeds {
  std::uint64_t student;
  std::uint64_t teacher;
};
PathSeeds derive_path_seeds(std::uint64_t batch_seed);

}  // namespace qlayout
