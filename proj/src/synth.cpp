#include "qlayout/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "qlayout/rng.hpp"

namespace qlayout {

namespace {

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  auto orient = [](const Vec2& a, const Vec2& b, const Vec2& c) { return cross2(b - a, c - a); };
  const double d1 = orient(q1, q2, p1), d2 = orient(q1, q2, p2);
  const double d3 = orient(p1, p2, q1), d4 = orient(p1, p2, q2);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
    return true;
  auto on_segment = [](const Vec2& a, const Vec2& b, const Vec2& p) {
    return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) &&
           std::min(a.y(), b.y()) <= p.y() && p.y() <= std::max(a.y(), b.y());
  };
  return (d1 == 0 && on_segment(q1, q2, p1)) || (d2 == 0 && on_segment(q1, q2, p2)) ||
         (d3 == 0 && on_segment(p1, p2, q1)) || (d4 == 0 && on_segment(p1, p2, q2));
}

bool inside_polygon(const std::vector<Vec2>& poly, const Vec2& p) {
  bool in = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y()) &&
        p.x() < (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x())
      in = !in;
  }
  return in;
}

Vec3 random_unit(Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  for (;;) {
    Vec3 v{g(rng), g(rng), g(rng)};
    const double n = v.norm();
    if (n > 1e-12) return v / n;
  }
}

std::size_t count_for(double density, double area) {
  return static_cast<std::size_t>(std::llround(density * area));
}

struct Hole {
  double u0 = 0, u1 = 0, v0 = 0, v1 = 0;
  bool contains(double u, double v) const { return u >= u0 && u < u1 && v >= v0 && v < v1; }
};

// Samples a rectangle [-w,w] x [-h,h] in the quad frame, skipping a hole.
void sample_face(const Quad& q, std::size_t count, const Hole& hole, double sigma, int label,
                 Rng& rng, Scene& scene) {
  const auto [x_axis, z_axis] = quad_axes(q);
  std::normal_distribution<double> noise(0.0, sigma > 0.0 ? sigma : 1.0);
  std::size_t made = 0;
  while (made < count) {
    const double u = uniform(rng, -q.half_size.x(), q.half_size.x());
    const double v = uniform(rng, -q.half_size.y(), q.half_size.y());
    if (hole.contains(u, v)) continue;
    Vec3 p = q.center + u * x_axis + v * z_axis;
    if (sigma > 0.0) p += Vec3(noise(rng), noise(rng), noise(rng));
    scene.cloud.points.push_back(p);
    scene.cloud.normals.push_back(q.normal);
    scene.point_quad.push_back(label);
    ++made;
  }
}

}  // namespace

double polygon_area(const std::vector<Vec2>& polygon) {
  double a = 0.0;
  for (std::size_t i = 0; i < polygon.size(); ++i)
    a += cross2(polygon[i], polygon[(i + 1) % polygon.size()]);
  return 0.5 * a;
}

void SceneSpec::validate() const {
  const std::size_t n = footprint.size();
  if (n < 3) throw Error("degenerate polygon: fewer than 3 vertices");
  for (const auto& v : footprint)
    if (!v.allFinite()) throw Error("degenerate polygon: non-finite vertex");
  for (std::size_t i = 0; i < n; ++i)
    if ((footprint[(i + 1) % n] - footprint[i]).norm() < 1e-9)
      throw Error("degenerate polygon: zero-length edge");
  if (!(polygon_area(footprint) > 1e-9)) throw Error("degenerate polygon: not counter-clockwise");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_intersect(footprint[i], footprint[(i + 1) % n], footprint[j],
                             footprint[(j + 1) % n]))
        throw Error("degenerate polygon: self-intersecting");
    }
  if (!(wall_height > 0.0)) throw Error("scene: wall_height must be positive");
  if (!(point_density > 0.0)) throw Error("scene: point_density must be positive");
  if (!(noise_sigma >= 0.0)) throw Error("scene: noise_sigma must be >= 0");
  if (!(clutter_fraction >= 0.0 && clutter_fraction < 1.0))
    throw Error("scene: clutter_fraction must lie in [0,1)");
  if (!(dropout_fraction >= 0.0 && dropout_fraction < 1.0))
    throw Error("scene: dropout_fraction must lie in [0,1)");
}

void PerturbSpec::validate() const {
  if (!(center_noise >= 0.0)) throw Error("perturb: center_noise must be >= 0");
  if (!(normal_tilt_deg >= 0.0)) throw Error("perturb: normal_tilt_deg must be >= 0");
  if (!(size_scale_min > 0.0 && size_scale_max >= size_scale_min))
    throw Error("perturb: size scale range must be a positive interval");
}

Scene generate_scene(const SceneSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  Scene scene;
  const auto& poly = spec.footprint;
  const double h = spec.wall_height;

  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 a = poly[i], b = poly[(i + 1) % poly.size()];
    const Vec2 d = b - a;
    const double len = d.norm();
    const Vec2 inward = Vec2(-d.y(), d.x()) / len;
    const Vec2 mid = 0.5 * (a + b);
    scene.quads.push_back(Quad::ground_truth({mid.x(), mid.y(), 0.5 * h},
                                             {inward.x(), inward.y(), 0.0},
                                             {0.5 * len, 0.5 * h}));
  }
  if (spec.include_floor_ceiling) {
    Vec2 lo = poly[0], hi = poly[0];
    for (const auto& v : poly) {
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
    const Vec2 mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    scene.quads.push_back(Quad::ground_truth({mid.x(), mid.y(), 0.0}, Vec3::UnitZ(), half));
    scene.quads.push_back(Quad::ground_truth({mid.x(), mid.y(), h}, -Vec3::UnitZ(), half));
  }

  const std::size_t n_walls = poly.size();
  for (std::size_t qi = 0; qi < n_walls; ++qi) {
    const Quad& q = scene.quads[qi];
    const double area = 4.0 * q.half_size.x() * q.half_size.y();
    Hole hole;
    if (spec.dropout_fraction > 0.0) {
      const double fw = uniform(rng, spec.dropout_fraction, 1.0);
      const double fh = spec.dropout_fraction / fw;
      const double hw = fw * 2.0 * q.half_size.x(), hh = fh * 2.0 * q.half_size.y();
      hole.u0 = uniform(rng, -q.half_size.x(), q.half_size.x() - hw);
      hole.v0 = uniform(rng, -q.half_size.y(), q.half_size.y() - hh);
      hole.u1 = hole.u0 + hw;
      hole.v1 = hole.v0 + hh;
    }
    const auto count = count_for(spec.point_density, area * (1.0 - spec.dropout_fraction));
    sample_face(q, count, hole, spec.noise_sigma, static_cast<int>(qi), rng, scene);
  }

  if (spec.include_floor_ceiling) {
    const double area = polygon_area(poly);
    for (std::size_t qi = n_walls; qi < scene.quads.size(); ++qi) {
      const Quad& q = scene.quads[qi];
      const auto count = count_for(spec.point_density, area);
      std::normal_distribution<double> noise(0.0, spec.noise_sigma > 0.0 ? spec.noise_sigma : 1.0);
      std::size_t made = 0;
      while (made < count) {
        const Vec2 p{uniform(rng, q.center.x() - q.half_size.x(), q.center.x() + q.half_size.x()),
                     uniform(rng, q.center.y() - q.half_size.y(), q.center.y() + q.half_size.y())};
        if (!inside_polygon(poly, p)) continue;
        Vec3 pt{p.x(), p.y(), q.center.z()};
        if (spec.noise_sigma > 0.0) pt += Vec3(noise(rng), noise(rng), noise(rng));
        scene.cloud.points.push_back(pt);
        scene.cloud.normals.push_back(q.normal);
        scene.point_quad.push_back(static_cast<int>(qi));
        ++made;
      }
    }
  }

  if (spec.clutter_fraction > 0.0) {
    const double surface = static_cast<double>(scene.cloud.size());
    const auto count = static_cast<std::size_t>(
        std::llround(spec.clutter_fraction / (1.0 - spec.clutter_fraction) * surface));
    Vec2 lo = poly[0], hi = poly[0];
    for (const auto& v : poly) {
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
    std::size_t made = 0;
    while (made < count) {
      const Vec2 p{uniform(rng, lo.x(), hi.x()), uniform(rng, lo.y(), hi.y())};
      if (!inside_polygon(poly, p)) continue;
      scene.cloud.points.emplace_back(p.x(), p.y(), uniform(rng, 0.0, h));
      scene.cloud.normals.push_back(random_unit(rng));
      scene.point_quad.push_back(-1);
      ++made;
    }
  }
  return scene;
}

Quad perturb_quad(const Quad& q, const PerturbSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  Quad out = q;
  if (spec.center_noise > 0.0)
    for (int a = 0; a < 3; ++a) out.center[a] += uniform(rng, -spec.center_noise, spec.center_noise);
  if (spec.normal_tilt_deg > 0.0) {
    const double angle = uniform(rng, 0.0, spec.normal_tilt_deg) * std::numbers::pi / 180.0;
    const double phi = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const Vec3 axis{std::cos(phi), std::sin(phi), 0.0};
    out.normal = (Eigen::AngleAxisd(angle, axis) * q.normal).normalized();
  }
  if (spec.size_scale_max > spec.size_scale_min || spec.size_scale_min != 1.0) {
    for (int a = 0; a < 2; ++a) {
      const double f = spec.size_scale_max > spec.size_scale_min
                           ? uniform(rng, spec.size_scale_min, spec.size_scale_max)
                           : spec.size_scale_min;
      out.half_size[a] *= f;
    }
  }
  return out;
}

std::vector<Vec2> rectangle_footprint(double width, double depth) {
  return {{0, 0}, {width, 0}, {width, depth}, {0, depth}};
}

std::vector<Vec2> l_footprint(double width, double depth, double notch_w, double notch_d) {
  return {{0, 0},
          {width, 0},
          {width, depth - notch_d},
          {width - notch_w, depth - notch_d},
          {width - notch_w, depth},
          {0, depth}};
}

std::vector<Vec2> notched_footprint(double width, double depth, double notch_x0, double notch_x1,
                                    double notch_d) {
  return {{0, 0},
          {width, 0},
          {width, depth},
          {notch_x1, depth},
          {notch_x1, depth - notch_d},
          {notch_x0, depth - notch_d},
          {notch_x0, depth},
          {0, depth}};
}

std::vector<Vec2> random_footprint(std::uint64_t seed) {
  Rng rng(seed);
  const double w = uniform(rng, 3.0, 7.0);
  const double d = uniform(rng, 3.0, 6.0);
  std::uniform_int_distribution<int> kind(0, 2);
  switch (kind(rng)) {
    case 0:
      return rectangle_footprint(w, d);
    case 1:
      return l_footprint(w, d, uniform(rng, 0.3, 0.6) * w, uniform(rng, 0.3, 0.6) * d);
    default: {
      const double x0 = uniform(rng, 0.2, 0.4) * w;
      const double x1 = uniform(rng, 0.6, 0.8) * w;
      return notched_footprint(w, d, x0, x1, uniform(rng, 0.25, 0.5) * d);
    }
  }
}

}  // namespace qlayout
