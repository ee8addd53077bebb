#pragma once

#include <roadpainter/decoder.hpp>
#include <roadpainter/scene.hpp>

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

namespace roadpainter {

namespace detail {

inline constexpr double kSvgScale = 8.0;  // px per meter

// BEV (x forward, y left) -> SVG (x right, y down)
inline std::string svg_xy(const Point3& p) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f,%.2f", (p.x() - kXMin) * kSvgScale, (kYMax - p.y()) * kSvgScale);
  return buf;
}

inline std::string svg_points(const Polyline& line) {
  std::string s;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (i) s += ' ';
    s += svg_xy(line[i]);
  }
  return s;
}

}  // namespace detail

// One drawing element per GT lane, predicted lane, GT edge and SD stroke, plus
// the bounds frame. Predictions below `min_score` are skipped.
inline std::string render_svg(const Scene& scene, const std::vector<CenterlinePrediction>& preds, double min_score = 0.0) {
  const double w = (kXMax - kXMin) * detail::kSvgScale;
  const double h = (kYMax - kYMin) * detail::kSvgScale;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
     << ' ' << h << "\">\n";
  os << "<defs><marker id=\"arrow\" viewBox=\"0 0 10 10\" refX=\"10\" refY=\"5\" markerWidth=\"6\" markerHeight=\"6\" "
        "orient=\"auto-start-reverse\"><path d=\"M 0 0 L 10 5 L 0 10 z\" fill=\"#444\"/></marker></defs>\n";
  os << "<rect class=\"frame\" x=\"0\" y=\"0\" width=\"" << w << "\" height=\"" << h
     << "\" fill=\"white\" stroke=\"black\" stroke-width=\"1\"/>\n";
  for (const auto& sd : scene.sd_instances) {
    os << "<polyline class=\"sd\" data-type=\"" << sd.semantic_type << "\" points=\"" << detail::svg_points(sd.polyline)
       << "\" fill=\"none\" stroke=\"#d8d8d8\" stroke-width=\"40\" stroke-linecap=\"round\"/>\n";
  }
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const bool real = scene.is_real[i];
    os << "<polyline class=\"gt " << (real ? "real" : "virtual") << "\" points=\""
       << detail::svg_points(scene.centerlines[i]) << "\" fill=\"none\" stroke=\"" << (real ? "#1f6fd1" : "#2a9d4b")
       << "\" stroke-width=\"2\"/>\n";
  }
  for (std::size_t i = 0; i < scene.adjacency.size(); ++i) {
    for (std::size_t j = 0; j < scene.adjacency[i].size(); ++j) {
      if (scene.adjacency[i][j] != 1) continue;
      // arrow from the middle of lane i's last segment to lane j's second point
      const Polyline& a = scene.centerlines[i];
      const Polyline& b = scene.centerlines[j];
      const Point3 from = 0.5 * (a[a.size() - 2] + a.back());
      const Point3 to = b[1];
      os << "<line class=\"edge\" x1=\"" << (from.x() - kXMin) * detail::kSvgScale << "\" y1=\""
         << (kYMax - from.y()) * detail::kSvgScale << "\" x2=\"" << (to.x() - kXMin) * detail::kSvgScale << "\" y2=\""
         << (kYMax - to.y()) * detail::kSvgScale << "\" stroke=\"#444\" stroke-width=\"1\" marker-end=\"url(#arrow)\"/>\n";
    }
  }
  for (const auto& p : preds) {
    if (p.score < min_score) continue;
    os << "<polyline class=\"pred " << (p.is_real ? "real" : "virtual") << "\" points=\"" << detail::svg_points(p.points)
       << "\" fill=\"none\" stroke=\"" << (p.is_real ? "#e4572e" : "#a14ad9")
       << "\" stroke-width=\"1.5\" stroke-dasharray=\"6 4\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace roadpainter
