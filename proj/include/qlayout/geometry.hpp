#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace qlayout {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;

/// Raised for every contract violation inside the library. The message names
/// the violated condition ("insufficient points", "no candidates", ...).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kUnitTolerance = 1e-6;

/// A rectangular layout element.
///
/// `half_size` holds half-extents (w, h): w along the horizontal in-plane axis
/// and h along the vertical in-plane axis (see quad_axes). Ground-truth quads
/// always carry quadness 1.
struct Quad {
  Vec3 center = Vec3::Zero();
  Vec3 normal = Vec3::UnitX();
  Vec2 half_size = Vec2::Zero();
  double quadness = 1.0;

  static Quad ground_truth(const Vec3& center, const Vec3& normal, const Vec2& half_size);

  /// Builds a quad from full extents (width, height) as found in annotation files.
  static Quad from_full_size(const Vec3& center, const Vec3& normal, const Vec2& full_size,
                             double quadness);
  Vec2 full_size() const { return 2.0 * half_size; }
};

/// Throws Error when `q` violates the quad invariants.
void validate(const Quad& q);
bool is_valid(const Quad& q);

struct OrientedPoint {
  Vec3 position = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
};

/// Points with an optional parallel array of unit normals. An empty `normals`
/// vector means "no normals".
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_normals() const { return !normals.empty() && normals.size() == points.size(); }
  OrientedPoint oriented(std::size_t i) const { return {points[i], normals[i]}; }

  /// Sub-cloud of the given indices, in the given order.
  PointCloud select(const std::vector<std::size_t>& indices) const;
};

struct QuadAxes {
  Vec3 x_axis;  // horizontal in-plane axis
  Vec3 z_axis;  // vertical in-plane axis, (0,0,1) for any non-horizontal quad
};

/// In-plane frame of a quad. For (near-)horizontal quads, where n x z vanishes,
/// x falls back to (1,0,0) and the second axis becomes n x (1,0,0).
QuadAxes quad_axes(const Quad& q);

/// Corners ordered counter-clockwise as seen from the side the normal points to.
std::array<Vec3, 4> quad_corners(const Quad& q);

/// d(q1,q2) = |c1-c2|_2 + |1 - n1.n2| + |s1-s2|_2^2. Quadness does not enter.
double quad_distance(const Quad& q1, const Quad& q2);

struct QuadDistanceTerms {
  double center = 0.0;
  double normal = 0.0;
  double size = 0.0;
  double total() const { return center + normal + size; }
};
QuadDistanceTerms quad_distance_terms(const Quad& q1, const Quad& q2);

struct MetricBreakdown {
  double perpendicular = 0.0;
  double orientation = 0.0;
  double out_of_quad = 0.0;
  double total = 0.0;
};

/// Hybrid point-to-quad metric. The point normal is sign-aligned with the quad
/// normal before the orientation term is evaluated.
MetricBreakdown point_quad_metrics(const OrientedPoint& p, const Quad& q);

/// PCA normals from the k nearest neighbours of every point (the point itself
/// included). Normal signs are arbitrary.
PointCloud estimate_normals(const PointCloud& cloud, int k);

double angle_between_deg(const Vec3& a, const Vec3& b);

}  // namespace qlayout
