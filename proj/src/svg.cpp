#include "qlayout/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace qlayout {

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string render_layout_svg(const PointCloud& cloud, const std::vector<Quad>& predicted,
                              const std::vector<Quad>& ground_truth, const PlotOptions& options) {
  Eigen::Vector2d lo(0, 0), hi(1, 1);
  bool any = false;
  auto grow = [&](const Vec3& p) {
    const Eigen::Vector2d q = p.head<2>();
    if (!any) {
      lo = hi = q;
      any = true;
    }
    lo = lo.cwiseMin(q);
    hi = hi.cwiseMax(q);
  };
  for (const auto& p : cloud.points) grow(p);
  for (const auto* set : {&predicted, &ground_truth})
    for (const auto& q : *set)
      for (const auto& c : quad_corners(q)) grow(c);

  const double margin = 20.0;
  const double span = std::max({hi.x() - lo.x(), hi.y() - lo.y(), 1e-6});
  const double scale = (options.width_px - 2 * margin) / span;
  const int height = static_cast<int>(std::ceil((hi.y() - lo.y()) * scale + 2 * margin));
  // SVG y grows downward; flip so +y points up in the figure.
  auto sx = [&](double x) { return margin + (x - lo.x()) * scale; };
  auto sy = [&](double y) { return height - margin - (y - lo.y()) * scale; };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << options.width_px << "\" height=\""
    << height << "\" viewBox=\"0 0 " << options.width_px << ' ' << height << "\">\n";
  if (!options.title.empty()) s << "<title>" << escape(options.title) << "</title>\n";
  if (!options.description.empty()) s << "<desc>" << escape(options.description) << "</desc>\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n<g fill=\"#888\">\n";

  const std::size_t n = cloud.size();
  const std::size_t stride = n > options.max_points ? (n + options.max_points - 1) / options.max_points : 1;
  for (std::size_t i = 0; i < n; i += stride)
    s << "<circle cx=\"" << fmt(sx(cloud.points[i].x())) << "\" cy=\"" << fmt(sy(cloud.points[i].y()))
      << "\" r=\"1\"/>\n";
  s << "</g>\n";

  auto draw = [&](const std::vector<Quad>& quads, const char* colour, const char* extra) {
    s << "<g stroke=\"" << colour << "\" stroke-width=\"3\" fill=\"none\"" << extra << ">\n";
    for (const auto& q : quads) {
      const auto c = quad_corners(q);
      s << "<polygon points=\"";
      for (int k = 0; k < 4; ++k) s << (k ? " " : "") << fmt(sx(c[k].x())) << ',' << fmt(sy(c[k].y()));
      s << "\"/>\n";
    }
    s << "</g>\n";
  };
  draw(ground_truth, "#2a7d2a", " stroke-dasharray=\"8 5\"");
  draw(predicted, "#c0392b", "");
  s << "</svg>\n";
  return s.str();
}

}  // namespace qlayout
