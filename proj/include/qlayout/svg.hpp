#pragma once

#include <string>
#include <vector>

#include "qlayout/geometry.hpp"

namespace qlayout {

struct PlotOptions {
  int width_px = 800;
  std::size_t max_points = 5000;
  std::string title;
  std::string description;  // embedded as <desc>, e.g. the config used
};

/// Top-down (x, y) orthographic plot: subsampled points, predicted quads as
/// solid segments and ground-truth quads dashed.
std::string render_layout_svg(const PointCloud& cloud, const std::vector<Quad>& predicted,
                              const std::vector<Quad>& ground_truth, const PlotOptions& options);

}  // namespace qlayout
