#pragma once

#include <roadpainter/geometry.hpp>
#include <roadpainter/points_mask.hpp>
#include <roadpainter/raster.hpp>
#include <roadpainter/tensor.hpp>

#include <optional>

namespace roadpainter {

// Supercover raster of the centerline with a 1-cell dilation.
inline CellMask gt_instance_mask(const GridSpec& spec, const Polyline& line) {
  return dilate(spec, rasterize_polyline(spec, line), 1);
}

inline Vector cell_mask_to_vector(const CellMask& m) {
  Vector v(static_cast<Eigen::Index>(m.size()));
  for (std::size_t i = 0; i < m.size(); ++i) v[static_cast<Eigen::Index>(i)] = m[i] ? 1.0 : 0.0;
  return v;
}

struct MaskPointTargets {
  ReadoutAxis axis = ReadoutAxis::kColumns;
  Vector coords;     // target fractional row (columns axis) / column (rows axis); 0 where absent
  Vector existence;  // 1 where the line crosses the column (row) center, else 0
  double direction = 1.0;
};

namespace detail {

// First crossing (in point order) of the polyline with coordinate `axis_value`
// along dimension `dim`; returns the other planar coordinate.
inline std::optional<double> first_crossing(const Polyline& line, int dim, double axis_value) {
  const int other = 1 - dim;
  for (std::size_t i = 1; i < line.size(); ++i) {
    const double a = line[i - 1][dim];
    const double b = line[i][dim];
    if (axis_value < std::min(a, b) || axis_value > std::max(a, b)) continue;
    if (a == b) return line[i - 1][other];
    const double t = (axis_value - a) / (b - a);
    return line[i - 1][other] + t * (line[i][other] - line[i - 1][other]);
  }
  return std::nullopt;
}

}  // namespace detail

// Columns axis: for each column whose center x falls inside the polyline's x
// extent, the row coordinate of the polyline at that x. Rows axis mirrors it.
// Direction is 1 when the start point has the smaller column (row) index.
inline MaskPointTargets mask_point_targets(const Polyline& line, const GridSpec& spec, ReadoutAxis axis) {
  const bool columns = axis == ReadoutAxis::kColumns;
  const int lines = columns ? spec.cols : spec.rows;
  const int dim = columns ? 0 : 1;
  MaskPointTargets t;
  t.axis = axis;
  t.coords = Vector::Zero(lines);
  t.existence = Vector::Zero(lines);
  for (int j = 0; j < lines; ++j) {
    const Point2 center = columns ? spec.cell_center(0, j) : spec.cell_center(j, 0);
    const auto hit = detail::first_crossing(line, dim, center[dim]);
    if (!hit) continue;
    t.existence[j] = 1.0;
    t.coords[j] = columns ? spec.row_of_y(*hit) : spec.col_of_x(*hit);
  }
  const double start = columns ? spec.col_of_x(line.front().x()) : spec.row_of_y(line.front().y());
  const double end = columns ? spec.col_of_x(line.back().x()) : spec.row_of_y(line.back().y());
  t.direction = start < end ? 1.0 : 0.0;
  return t;
}

}  // namespace roadpainter
