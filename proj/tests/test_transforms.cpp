#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "qlayout/knn.hpp"
#include "qlayout/rng.hpp"
#include "qlayout/synth.hpp"
#include "qlayout/transforms.hpp"

using namespace qlayout;

namespace {

std::vector<Vec3> random_points(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  std::vector<Vec3> pts;
  for (std::size_t i = 0; i < n; ++i) pts.emplace_back(uniform(rng, -2, 2), uniform(rng, -2, 2), uniform(rng, 0, 1));
  return pts;
}

double min_pairwise(const std::vector<Vec3>& pts, const std::vector<std::size_t>& idx) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = i + 1; j < idx.size(); ++j)
      best = std::min(best, (pts[idx[i]] - pts[idx[j]]).norm());
  return best;
}

}  // namespace

TEST(Knn, GridMatchesBruteForce) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    auto pts = random_points(100 + s, 700);
    // Duplicates exercise the index tie-break.
    for (int i = 0; i < 30; ++i) pts.push_back(pts[static_cast<std::size_t>(i) * 7]);
    const KnnGrid grid(pts, 4);
    Rng rng(s);
    for (int q = 0; q < 60; ++q) {
      const Vec3 p = q % 3 == 0 ? pts[static_cast<std::size_t>(q)]
                                : Vec3(uniform(rng, -3, 3), uniform(rng, -3, 3), uniform(rng, -1, 2));
      for (int k : {1, 5, 16, 40})
        EXPECT_EQ(grid.query(p, k), knn_brute_force(pts, p, k));
    }
  }
}

TEST(Knn, KLargerThanCloudReturnsAll) {
  const auto pts = random_points(3, 10);
  const KnnGrid grid(pts);
  EXPECT_EQ(grid.query(Vec3::Zero(), 50).size(), 10u);
}

TEST(Fps, CollinearTieGoesToLowestIndex) {
  const std::vector<Vec3> pts = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)};
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto idx = farthest_point_indices(pts, 2, seed);
    if (idx[0] != 1) continue;
    EXPECT_EQ(idx, (std::vector<std::size_t>{1, 0}));
    return;
  }
  FAIL() << "no seed picked index 1 first";
}

TEST(Fps, FullSampleIsPermutation) {
  const auto pts = random_points(4, 123);
  auto idx = farthest_point_indices(pts, pts.size(), 9);
  std::sort(idx.begin(), idx.end());
  for (std::size_t i = 0; i < idx.size(); ++i) EXPECT_EQ(idx[i], i);
}

TEST(Fps, DuplicatesNeverChosenTwice) {
  std::vector<Vec3> pts(10, Vec3(1, 1, 1));
  pts.push_back(Vec3(2, 2, 2));
  const auto idx = farthest_point_indices(pts, pts.size(), 1);
  EXPECT_EQ(std::set<std::size_t>(idx.begin(), idx.end()).size(), pts.size());
}

TEST(Fps, DeterministicPerSeed) {
  const auto pts = random_points(5, 300);
  EXPECT_EQ(farthest_point_indices(pts, 50, 77), farthest_point_indices(pts, 50, 77));
}

TEST(Fps, Errors) {
  const auto pts = random_points(6, 5);
  EXPECT_THROW(farthest_point_indices(pts, 0, 1), Error);
  EXPECT_THROW(farthest_point_indices(pts, 6, 1), Error);
}

TEST(Fps, SpreadBeatsRandomSubsets) {
  const auto pts = random_points(7, 200);
  const std::size_t m = 20;
  const double fps = min_pairwise(pts, farthest_point_indices(pts, m, 3));
  Rng rng(8);
  std::vector<std::size_t> all(pts.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  for (int r = 0; r < 100; ++r) {
    std::shuffle(all.begin(), all.end(), rng);
    const std::vector<std::size_t> subset(all.begin(), all.begin() + m);
    EXPECT_GE(fps, min_pairwise(pts, subset));
  }
}

TEST(Fps, CloudSamplingCarriesNormals) {
  PointCloud cloud;
  cloud.points = random_points(9, 50);
  for (std::size_t i = 0; i < cloud.size(); ++i) cloud.normals.push_back(Vec3(1, 0, 0) * static_cast<double>(i));
  const auto idx = farthest_point_indices(cloud.points, 10, 4);
  const PointCloud s = farthest_point_sampling(cloud, 10, 4);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    EXPECT_EQ(s.points[i], cloud.points[idx[i]]);
    EXPECT_EQ(s.normals[i], cloud.normals[idx[i]]);
  }
}

TEST(SampleTransform, DegenerateConfigIsIdentity) {
  TransformConfig cfg;
  cfg.coarse_angles = {0.0};
  cfg.jitter_degrees = 0.0;
  cfg.flip_prob = 0.0;
  cfg.scale_min = cfg.scale_max = 1.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Transform t = sample_transform(cfg, s);
    EXPECT_EQ(t.rotation_angle, 0.0);
    EXPECT_FALSE(t.flip_x);
    EXPECT_FALSE(t.flip_y);
    EXPECT_EQ(t.scale, 1.0);
  }
  const Transform d = sample_transform(TransformConfig::disabled(), 5);
  EXPECT_EQ(d.rotation_angle, 0.0);
  EXPECT_EQ(d.scale, 1.0);
}

TEST(SampleTransform, DeterministicAndBounded) {
  const TransformConfig cfg;
  for (std::uint64_t s = 0; s < 200; ++s) {
    const Transform a = sample_transform(cfg, s), b = sample_transform(cfg, s);
    EXPECT_EQ(a.rotation_angle, b.rotation_angle);
    EXPECT_EQ(a.flip_x, b.flip_x);
    EXPECT_EQ(a.scale, b.scale);
    EXPECT_GE(a.scale, 0.85);
    EXPECT_LE(a.scale, 1.15);
    double best = 1e9;
    for (double c : cfg.coarse_angles) best = std::min(best, std::abs(a.rotation_angle - c));
    EXPECT_LE(best, 5.0 * std::numbers::pi / 180.0 + 1e-12);
  }
}

TEST(SampleTransform, FlipFrequencyMatchesProbability) {
  const TransformConfig cfg;
  int fx = 0, fy = 0;
  const int n = 10000;
  for (int s = 0; s < n; ++s) {
    const Transform t = sample_transform(cfg, static_cast<std::uint64_t>(s));
    fx += t.flip_x;
    fy += t.flip_y;
  }
  EXPECT_NEAR(fx / static_cast<double>(n), 0.5, 0.02);
  EXPECT_NEAR(fy / static_cast<double>(n), 0.5, 0.02);
}

TEST(TransformConfig, Validation) {
  TransformConfig cfg;
  cfg.flip_prob = 1.5;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.scale_min = 2.0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.coarse_angles.clear();
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(ApplyTransform, PointArithmetic) {
  Transform t;
  t.rotation_angle = std::numbers::pi / 2;
  const Vec3 p = t.apply_point(Vec3(1, 0, 0));
  EXPECT_NEAR((p - Vec3(0, 1, 0)).norm(), 0.0, 1e-9);
  Transform f;
  f.flip_x = true;
  EXPECT_EQ(f.apply_point(Vec3(1, 2, 3)), Vec3(-1, 2, 3));
}

TEST(ApplyTransform, IdentityLeavesCloudUnchanged) {
  PointCloud cloud;
  cloud.points = random_points(10, 20);
  cloud.normals.assign(20, Vec3::UnitZ());
  const PointCloud out = apply_transform_cloud(Transform::identity(), cloud);
  EXPECT_EQ(out.points, cloud.points);
  EXPECT_EQ(out.normals, cloud.normals);
}

TEST(ApplyTransform, QuadRules) {
  const Quad q = Quad::ground_truth(Vec3(1, 0, 0), Vec3::UnitX(), Vec2(1.5, 1.25));
  Transform r;
  r.rotation_angle = std::numbers::pi / 2;
  Quad out = apply_transform_quad(r, q);
  EXPECT_NEAR((out.normal - Vec3(0, 1, 0)).norm(), 0.0, 1e-12);
  EXPECT_NEAR((out.center - Vec3(0, 1, 0)).norm(), 0.0, 1e-12);
  EXPECT_EQ(out.half_size, q.half_size);

  Transform s;
  s.scale = 2.0;
  out = apply_transform_quad(s, q);
  EXPECT_EQ(out.center, 2.0 * q.center);
  EXPECT_EQ(out.half_size, 2.0 * q.half_size);
  EXPECT_EQ(out.normal, q.normal);

  Transform f;
  f.flip_x = true;
  out = apply_transform_quad(f, q);
  EXPECT_EQ(out.center, Vec3(-1, 0, 0));
  EXPECT_EQ(out.normal, Vec3(-1, 0, 0));
  EXPECT_EQ(out.quadness, q.quadness);
}

TEST(ApplyTransform, RoundTrip) {
  Rng rng(21);
  for (int i = 0; i < 200; ++i) {
    Transform t;
    t.rotation_angle = uniform(rng, -7, 7);
    t.flip_x = i % 2;
    t.flip_y = (i / 2) % 2;
    t.scale = uniform(rng, 0.5, 2.0);
    const Vec3 n = Vec3(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1)).normalized();
    const std::vector<Quad> qs = {
        Quad{Vec3(uniform(rng, -3, 3), uniform(rng, -3, 3), 1), n, Vec2(1, 2), 0.4}};
    const auto back = inverse_transform_quads(t, apply_transform_quads(t, qs));
    EXPECT_NEAR((back[0].center - qs[0].center).norm(), 0.0, 1e-9);
    EXPECT_NEAR((back[0].normal - qs[0].normal).norm(), 0.0, 1e-9);
    EXPECT_NEAR((back[0].half_size - qs[0].half_size).norm(), 0.0, 1e-9);
    const Vec3 p(uniform(rng, -3, 3), uniform(rng, -3, 3), uniform(rng, -3, 3));
    EXPECT_NEAR((t.invert_point(t.apply_point(p)) - p).norm(), 0.0, 1e-9);
  }
}

TEST(ApplyTransform, SceneLabelsAreEquivariant) {
  SceneSpec spec;
  spec.footprint = l_footprint(5, 4, 2, 1.5);
  spec.point_density = 50;
  const Scene scene = generate_scene(spec, 3);
  Transform t;
  t.rotation_angle = 1.1;
  t.flip_y = true;
  t.scale = 1.1;
  const PointCloud moved = apply_transform_cloud(t, scene.cloud);
  const auto moved_quads = apply_transform_quads(t, scene.quads);
  // Every transformed wall point lies exactly on its transformed wall quad.
  for (std::size_t i = 0; i < moved.size(); ++i) {
    const int label = scene.point_quad[i];
    if (label < 0) continue;
    EXPECT_NEAR(point_quad_metrics(moved.oriented(i), moved_quads[static_cast<std::size_t>(label)]).total,
                0.0, 1e-9);
  }
}

TEST(PathSeeds, DistinctAndDeterministic) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const PathSeeds a = derive_path_seeds(s), b = derive_path_seeds(s);
    EXPECT_NE(a.student, a.teacher);
    EXPECT_EQ(a.student, b.student);
    EXPECT_EQ(a.teacher, b.teacher);
  }
}
