#pragma once

#include <roadpainter/geometry.hpp>
#include <roadpainter/tensor.hpp>

#include <cstdint>
#include <vector>

namespace roadpainter {

// H*W occupancy flags, index row*W + col.
using CellMask = std::vector<std::uint8_t>;

namespace detail {

inline void mark(const GridSpec& spec, CellMask& out, long row, long col) {
  if (row < 0 || col < 0 || row >= spec.rows || col >= spec.cols) return;
  out[static_cast<std::size_t>(row * spec.cols + col)] = 1;
}

}  // namespace detail

// Supercover traversal: every cell whose closed square the segment touches.
// Corner crossings mark both side cells.
inline void rasterize_segment(const GridSpec& spec, const Point2& a, const Point2& b, CellMask& out) {
  // cell space: cell (r, c) covers [c, c+1) x [r, r+1)
  const double u0 = (a.x() - spec.x_min) / spec.resolution;
  const double v0 = (a.y() - spec.y_min) / spec.resolution;
  const double u1 = (b.x() - spec.x_min) / spec.resolution;
  const double v1 = (b.y() - spec.y_min) / spec.resolution;
  long ix = static_cast<long>(std::floor(u0));
  long iy = static_cast<long>(std::floor(v0));
  const double du = u1 - u0;
  const double dv = v1 - v0;
  const long step_x = du > 0 ? 1 : (du < 0 ? -1 : 0);
  const long step_y = dv > 0 ? 1 : (dv < 0 ? -1 : 0);
  constexpr double inf = std::numeric_limits<double>::infinity();
  double t_max_x = step_x == 0 ? inf : ((step_x > 0 ? ix + 1 : ix) - u0) / du;
  double t_max_y = step_y == 0 ? inf : ((step_y > 0 ? iy + 1 : iy) - v0) / dv;
  const double t_delta_x = step_x == 0 ? inf : step_x / du;
  const double t_delta_y = step_y == 0 ? inf : step_y / dv;

  // starting exactly on a boundary while moving backwards also touches the
  // neighbor behind it
  if (step_x < 0 && u0 == std::floor(u0)) t_max_x = 0.0;
  if (step_y < 0 && v0 == std::floor(v0)) t_max_y = 0.0;

  detail::mark(spec, out, iy, ix);
  constexpr double kTie = 1e-12;
  while (std::min(t_max_x, t_max_y) <= 1.0) {
    if (std::abs(t_max_x - t_max_y) <= kTie) {
      detail::mark(spec, out, iy, ix + step_x);
      detail::mark(spec, out, iy + step_y, ix);
      ix += step_x;
      iy += step_y;
      t_max_x += t_delta_x;
      t_max_y += t_delta_y;
    } else if (t_max_x < t_max_y) {
      ix += step_x;
      t_max_x += t_delta_x;
    } else {
      iy += step_y;
      t_max_y += t_delta_y;
    }
    detail::mark(spec, out, iy, ix);
  }
}

inline CellMask rasterize_polyline(const GridSpec& spec, const Polyline& line) {
  CellMask out(static_cast<std::size_t>(spec.cells()), 0);
  for (std::size_t i = 1; i < line.size(); ++i) {
    rasterize_segment(spec, line[i - 1].head<2>(), line[i].head<2>(), out);
  }
  return out;
}

// 3x3 square dilation, repeated `radius` times.
inline CellMask dilate(const GridSpec& spec, const CellMask& in, int radius = 1) {
  CellMask cur = in;
  for (int it = 0; it < radius; ++it) {
    CellMask next = cur;
    for (int r = 0; r < spec.rows; ++r) {
      for (int c = 0; c < spec.cols; ++c) {
        if (!cur[static_cast<std::size_t>(r * spec.cols + c)]) continue;
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) detail::mark(spec, next, r + dr, c + dc);
        }
      }
    }
    cur = std::move(next);
  }
  return cur;
}

}  // namespace roadpainter
