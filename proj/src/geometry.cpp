#include "qlayout/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "qlayout/knn.hpp"

namespace qlayout {

namespace {

constexpr double kHorizontalEps = 1e-6;

bool finite(const Vec3& v) { return v.allFinite(); }

}  // namespace

Quad Quad::ground_truth(const Vec3& center, const Vec3& normal, const Vec2& half_size) {
  Quad q{center, normal.normalized(), half_size, 1.0};
  validate(q);
  return q;
}

Quad Quad::from_full_size(const Vec3& center, const Vec3& normal, const Vec2& full_size,
                          double quadness) {
  Quad q{center, normal.normalized(), 0.5 * full_size, quadness};
  validate(q);
  return q;
}

void validate(const Quad& q) {
  if (!finite(q.center)) throw Error("quad center is not finite");
  if (!finite(q.normal) || std::abs(q.normal.norm() - 1.0) > kUnitTolerance)
    throw Error("quad normal is not unit length");
  if (!q.half_size.allFinite() || q.half_size.x() < 0.0 || q.half_size.y() < 0.0)
    throw Error("quad half_size must be finite and nonnegative");
  if (!(q.quadness >= 0.0 && q.quadness <= 1.0)) throw Error("quadness must lie in [0,1]");
}

bool is_valid(const Quad& q) {
  try {
    validate(q);
    return true;
  } catch (const Error&) {
    return false;
  }
}

PointCloud PointCloud::select(const std::vector<std::size_t>& indices) const {
  PointCloud out;
  out.points.reserve(indices.size());
  const bool with_normals = has_normals();
  if (with_normals) out.normals.reserve(indices.size());
  for (std::size_t i : indices) {
    out.points.push_back(points.at(i));
    if (with_normals) out.normals.push_back(normals[i]);
  }
  return out;
}

QuadAxes quad_axes(const Quad& q) {
  const Vec3 z = Vec3::UnitZ();
  const Vec3 cross = q.normal.cross(z);
  const double len = cross.norm();
  if (len < kHorizontalEps) {
    const Vec3 x = Vec3::UnitX();
    return {x, q.normal.cross(x).normalized()};
  }
  return {cross / len, z};
}

std::array<Vec3, 4> quad_corners(const Quad& q) {
  const auto [x, z] = quad_axes(q);
  const Vec3 dx = q.half_size.x() * x;
  const Vec3 dz = q.half_size.y() * z;
  return {q.center + dx - dz, q.center + dx + dz, q.center - dx + dz, q.center - dx - dz};
}

QuadDistanceTerms quad_distance_terms(const Quad& q1, const Quad& q2) {
  // Identical normals are exactly aligned even when n.n rounds below 1.
  const double normal =
      q1.normal == q2.normal ? 0.0 : std::abs(1.0 - q1.normal.dot(q2.normal));
  return {(q1.center - q2.center).norm(), normal, (q1.half_size - q2.half_size).squaredNorm()};
}

double quad_distance(const Quad& q1, const Quad& q2) {
  return quad_distance_terms(q1, q2).total();
}

MetricBreakdown point_quad_metrics(const OrientedPoint& p, const Quad& q) {
  const Vec3 offset = p.position - q.center;
  const auto [x, z] = quad_axes(q);

  MetricBreakdown m;
  m.perpendicular = std::abs(offset.dot(q.normal));

  double cosine = p.normal.dot(q.normal);
  if (cosine < 0.0) cosine = -cosine;
  m.orientation = std::abs(1.0 - cosine);

  const double wp = std::abs(offset.dot(x));
  const double hp = std::abs(offset.dot(z));
  m.out_of_quad = std::max(wp - q.half_size.x(), 0.0) + std::max(hp - q.half_size.y(), 0.0);

  m.total = m.perpendicular + m.orientation + m.out_of_quad;
  return m;
}

PointCloud estimate_normals(const PointCloud& cloud, int k) {
  if (k < 3) throw Error("estimate_normals: k must be at least 3");
  if (cloud.size() < static_cast<std::size_t>(k)) throw Error("insufficient points");

  const KnnGrid grid(cloud.points);
  PointCloud out;
  out.points = cloud.points;
  out.normals.resize(cloud.size());

  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto neighbours = grid.query(cloud.points[i], k);
    Vec3 mean = Vec3::Zero();
    for (std::size_t j : neighbours) mean += cloud.points[j];
    mean /= static_cast<double>(neighbours.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (std::size_t j : neighbours) {
      const Vec3 d = cloud.points[j] - mean;
      cov.noalias() += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
    out.normals[i] = solver.eigenvectors().col(0).normalized();
  }
  return out;
}

double angle_between_deg(const Vec3& a, const Vec3& b) {
  const double c = std::clamp(a.normalized().dot(b.normalized()), -1.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

}  // namespace qlayout
