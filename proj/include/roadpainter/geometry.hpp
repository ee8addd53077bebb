#pragma once

#include <roadpainter/core.hpp>

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

namespace roadpainter {

using Point3 = Eigen::Vector3d;
using Point2 = Eigen::Vector2d;

// Ordered 3D point sequence in BEV metric space (meters). Order is semantic:
// the first point is the start of the centerline.
class Polyline {
 public:
  Polyline() = default;

  explicit Polyline(std::vector<Point3> points) : points_(std::move(points)) { validate(); }

  Polyline(std::initializer_list<Point3> points) : points_(points) { validate(); }

  static Polyline from_xy(std::span<const Point2> xy, double z = 0.0) {
    std::vector<Point3> pts;
    pts.reserve(xy.size());
    for (const auto& p : xy) pts.emplace_back(p.x(), p.y(), z);
    return Polyline(std::move(pts));
  }

  const std::vector<Point3>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  const Point3& operator[](std::size_t i) const { return points_[i]; }
  const Point3& front() const { return points_.front(); }
  const Point3& back() const { return points_.back(); }
  bool empty() const { return points_.empty(); }

  Polyline reversed() const {
    std::vector<Point3> r(points_.rbegin(), points_.rend());
    return Polyline(std::move(r));
  }

  friend bool operator==(const Polyline& a, const Polyline& b) { return a.points_ == b.points_; }

 private:
  void validate() const {
    if (points_.size() < 2) throw std::invalid_argument("polyline needs at least 2 points");
    for (const auto& p : points_) {
      if (!p.allFinite()) throw std::invalid_argument("polyline has non-finite coordinate");
    }
  }

  std::vector<Point3> points_;
};

// Ordered 2D points with a per-point validity flag (sampled mask points).
struct PointSet2 {
  std::vector<Point2> points;
  std::vector<bool> valid;

  std::size_t size() const { return points.size(); }

  std::size_t valid_count() const {
    return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), true));
  }

  std::vector<Point2> valid_points() const {
    std::vector<Point2> out;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (valid[i]) out.push_back(points[i]);
    }
    return out;
  }
};

inline double arc_length(const Polyline& p) {
  double total = 0.0;
  for (std::size_t i = 1; i < p.size(); ++i) total += (p[i] - p[i - 1]).norm();
  return total;
}

// Arc-length-uniform resampling by linear interpolation. Endpoints are copied
// exactly; a zero-length input collapses every output point onto its start.
inline Polyline resample_polyline(const Polyline& p, int k) {
  if (k < 2) throw std::invalid_argument("resample_polyline: k must be >= 2");
  const auto& pts = p.points();
  std::vector<double> cum(pts.size(), 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i) cum[i] = cum[i - 1] + (pts[i] - pts[i - 1]).norm();
  const double total = cum.back();

  std::vector<Point3> out(static_cast<std::size_t>(k));
  if (total <= 0.0) {
    std::fill(out.begin(), out.end(), pts.front());
    return Polyline(std::move(out));
  }
  std::size_t seg = 1;
  for (int i = 0; i < k; ++i) {
    const double s = total * static_cast<double>(i) / static_cast<double>(k - 1);
    while (seg < pts.size() - 1 && cum[seg] < s) ++seg;
    const double len = cum[seg] - cum[seg - 1];
    const double t = len > 0.0 ? std::clamp((s - cum[seg - 1]) / len, 0.0, 1.0) : 0.0;
    out[static_cast<std::size_t>(i)] = pts[seg - 1] + t * (pts[seg] - pts[seg - 1]);
  }
  out.front() = pts.front();
  out.back() = pts.back();
  return Polyline(std::move(out));
}

inline std::vector<Point2> resample_points2(std::span<const Point2> pts, int k) {
  const auto line = resample_polyline(Polyline::from_xy(pts), k);
  std::vector<Point2> out;
  out.reserve(line.size());
  for (const auto& p : line.points()) out.emplace_back(p.x(), p.y());
  return out;
}

// Discrete Frechet distance (DP over the vertex coupling lattice).
inline double discrete_frechet(const Polyline& a, const Polyline& b) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  std::vector<double> prev(m), cur(m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double d = (a[i] - b[j]).norm();
      if (i == 0 && j == 0) {
        cur[j] = d;
      } else if (i == 0) {
        cur[j] = std::max(cur[j - 1], d);
      } else if (j == 0) {
        cur[j] = std::max(prev[j], d);
      } else {
        cur[j] = std::max(std::min({prev[j], prev[j - 1], cur[j - 1]}), d);
      }
    }
    std::swap(prev, cur);
  }
  return prev[m - 1];
}

// Single start-to-end pass. A point is dropped when both its nearest valid
// predecessor and successor (whichever exist) lie farther than `threshold`.
// Predecessors reflect removals already made in this pass.
inline PointSet2 filter_outliers(const PointSet2& pts, double threshold) {
  if (!(threshold > 0.0)) throw std::invalid_argument("filter_outliers: threshold must be > 0");
  if (pts.valid.size() != pts.points.size()) {
    throw DimensionError("filter_outliers: validity length mismatch");
  }
  PointSet2 out = pts;
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(pts.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    if (!out.valid[i]) continue;
    double best = std::numeric_limits<double>::infinity();
    bool has_neighbor = false;
    for (std::ptrdiff_t j = i - 1; j >= 0; --j) {
      if (out.valid[j]) {
        best = std::min(best, (out.points[i] - out.points[j]).norm());
        has_neighbor = true;
        break;
      }
    }
    for (std::ptrdiff_t j = i + 1; j < n; ++j) {
      if (out.valid[j]) {
        best = std::min(best, (out.points[i] - out.points[j]).norm());
        has_neighbor = true;
        break;
      }
    }
    if (has_neighbor && best > threshold) out.valid[i] = false;
  }
  return out;
}

}  // namespace roadpainter
