#pragma once

#include <cstdint>
#include <vector>

#include "qlayout/geometry.hpp"

namespace qlayout {

/// Room description for the synthetic generator. The footprint is a simple
/// counter-clockwise polygon on the floor plane z = 0.
struct SceneSpec {
  std::vector<Vec2> footprint;
  double wall_height = 2.5;
  double point_density = 500.0;  // points per square metre
  double noise_sigma = 0.0;
  double clutter_fraction = 0.0;
  double dropout_fraction = 0.0;
  bool include_floor_ceiling = false;

  void validate() const;
};

struct PerturbSpec {
  double center_noise = 0.15;
  double normal_tilt_deg = 10.0;
  double size_scale_min = 0.8;
  double size_scale_max = 1.2;

  void validate() const;
};

struct Scene {
  PointCloud cloud;
  std::vector<Quad> quads;
  /// Index of the quad each point was sampled from; -1 for clutter.
  std::vector<int> point_quad;
};

Scene generate_scene(const SceneSpec& spec, std::uint64_t seed);

Quad perturb_quad(const Quad& q, const PerturbSpec& spec, std::uint64_t seed);

std::vector<Vec2> rectangle_footprint(double width, double depth);

/// L-shaped footprint: a width x depth box with the (notch_w x notch_d) corner
/// at (+x,+y) removed.
std::vector<Vec2> l_footprint(double width, double depth, double notch_w, double notch_d);

/// Box with a rectangular notch cut into the middle of its far (+y) wall.
std::vector<Vec2> notched_footprint(double width, double depth, double notch_x0, double notch_x1,
                                    double notch_d);

/// Random rectilinear footprint with 4, 6 or 8 walls.
std::vector<Vec2> random_footprint(std::uint64_t seed);

double polygon_area(const std::vector<Vec2>& polygon);

}  // namespace qlayout
