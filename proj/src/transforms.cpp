#include "qlayout/transforms.hpp"

#include <cmath>
#include <limits>

#include "qlayout/rng.hpp"

namespace qlayout {

Vec3 Transform::apply_direction(const Vec3& n) const {
  Vec3 v = n;
  if (flip_x) v.x() = -v.x();
  if (flip_y) v.y() = -v.y();
  const double c = std::cos(rotation_angle), s = std::sin(rotation_angle);
  return {c * v.x() - s * v.y(), s * v.x() + c * v.y(), v.z()};
}

Vec3 Transform::apply_point(const Vec3& p) const { return scale * apply_direction(p); }

Vec3 Transform::invert_direction(const Vec3& n) const {
  const double c = std::cos(rotation_angle), s = std::sin(rotation_angle);
  Vec3 v{c * n.x() + s * n.y(), -s * n.x() + c * n.y(), n.z()};
  if (flip_y) v.y() = -v.y();
  if (flip_x) v.x() = -v.x();
  return v;
}

Vec3 Transform::invert_point(const Vec3& p) const { return invert_direction(p / scale); }

void TransformConfig::validate() const {
  if (coarse_angles.empty()) throw Error("transform: coarse_angles must not be empty");
  if (!(jitter_degrees >= 0.0)) throw Error("transform: jitter_degrees must be >= 0");
  if (!(flip_prob >= 0.0 && flip_prob <= 1.0)) throw Error("transform: flip_prob must be in [0,1]");
  if (!(scale_min > 0.0 && scale_max >= scale_min))
    throw Error("transform: scale range must be a positive interval");
  if (fps_target == 0) throw Error("transform: fps_target must be positive");
}

TransformConfig TransformConfig::disabled() {
  TransformConfig c;
  c.coarse_angles = {0.0};
  c.jitter_degrees = 0.0;
  c.flip_prob = 0.0;
  c.scale_min = c.scale_max = 1.0;
  c.fps_target = std::numeric_limits<std::size_t>::max();
  return c;
}

std::vector<std::size_t> farthest_point_indices(std::span<const Vec3> points, std::size_t m,
                                                std::uint64_t seed) {
  if (m == 0) throw Error("farthest_point_sampling: empty output requested");
  if (m > points.size()) throw Error("farthest_point_sampling: sample larger than population");

  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> first(0, points.size() - 1);
  std::vector<std::size_t> chosen;
  chosen.reserve(m);
  chosen.push_back(first(rng));

  // Chosen points carry -1 and are never picked again.
  std::vector<double> min_d2(points.size(), std::numeric_limits<double>::infinity());
  min_d2[chosen.back()] = -1.0;
  while (chosen.size() < m) {
    const Vec3& last = points[chosen.back()];
    double best = -1.0;
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double d2 = (points[i] - last).squaredNorm();
      if (min_d2[i] >= 0.0 && d2 < min_d2[i]) min_d2[i] = d2;
      if (min_d2[i] > best) {
        best = min_d2[i];
        best_i = i;
      }
    }
    chosen.push_back(best_i);
    min_d2[best_i] = -1.0;
  }
  return chosen;
}

PointCloud farthest_point_sampling(const PointCloud& cloud, std::size_t m, std::uint64_t seed) {
  return cloud.select(farthest_point_indices(cloud.points, m, seed));
}

Transform sample_transform(const TransformConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, config.coarse_angles.size() - 1);
  const double coarse = config.coarse_angles[pick(rng)];
  const double jitter = config.jitter_degrees * std::numbers::pi / 180.0;
  const double fine = jitter > 0.0 ? uniform(rng, -jitter, jitter) : 0.0;
  Transform t;
  t.rotation_angle = coarse + fine;
  std::bernoulli_distribution flip(config.flip_prob);
  t.flip_x = flip(rng);
  t.flip_y = flip(rng);
  t.scale = config.scale_max > config.scale_min ? uniform(rng, config.scale_min, config.scale_max)
                                                : config.scale_min;
  return t;
}

PointCloud apply_transform_cloud(const Transform& t, const PointCloud& cloud) {
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const auto& p : cloud.points) out.points.push_back(t.apply_point(p));
  out.normals.reserve(cloud.normals.size());
  for (const auto& n : cloud.normals) out.normals.push_back(t.apply_direction(n));
  return out;
}

Quad apply_transform_quad(const Transform& t, const Quad& q) {
  return {t.apply_point(q.center), t.apply_direction(q.normal), t.scale * q.half_size, q.quadness};
}

std::vector<Quad> apply_transform_quads(const Transform& t, std::span<const Quad> quads) {
  std::vector<Quad> out;
  out.reserve(quads.size());
  for (const auto& q : quads) out.push_back(apply_transform_quad(t, q));
  return out;
}

std::vector<Quad> inverse_transform_quads(const Transform& t, std::span<const Quad> quads) {
  std::vector<Quad> out;
  out.reserve(quads.size());
  for (const auto& q : quads)
    out.push_back({t.invert_point(q.center), t.invert_direction(q.normal), q.half_size / t.scale,
                   q.quadness});
  return out;
}

PathSeeds derive_path_seeds(std::uint64_t batch_seed) {
  return {mix_seed(batch_seed, 1), mix_seed(batch_seed, 2)};
}

}  // namespace qlayout
