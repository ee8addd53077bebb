#pragma once

#include <roadpainter/geometry.hpp>
#include <roadpainter/sdmap.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

namespace roadpainter {

inline constexpr int kScenePoints = 201;
inline constexpr int kSceneFormatVersion = 1;
inline constexpr int kSdSemanticTypes = 3;  // 1 main road, 2 cross road, 3 junction

// Ground truth for one frame. Centerlines carry kScenePoints points each.
struct Scene {
  std::vector<Polyline> centerlines;
  std::vector<bool> is_real;
  std::vector<std::vector<int>> adjacency;  // N x N, 0/1, (i, j): i flows into j
  std::vector<SdMapInstance> sd_instances;
  std::uint64_t seed = 0;

  std::size_t size() const { return centerlines.size(); }

  std::vector<Polyline> lines_of(bool real) const {
    std::vector<Polyline> out;
    for (std::size_t i = 0; i < centerlines.size(); ++i) {
      if (is_real[i] == real) out.push_back(centerlines[i]);
    }
    return out;
  }

  std::vector<int> indices_of(bool real) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < centerlines.size(); ++i) {
      if (is_real[i] == real) out.push_back(static_cast<int>(i));
    }
    return out;
  }
};

struct SceneParams {
  int lanes_min = 2;
  int lanes_max = 3;
  int intersections = 0;  // 0 or 1
  bool opposite_lanes = true;
  double lane_width = 3.5;
  double min_radius = 80.0;  // curved roads
  double max_radius = 250.0;
  double junction_half_gap = 10.0;
  int road_shape = -1;  // -1 random, 0 straight, 1 arc, 2 clothoid-like

  void check() const {
    if (lanes_min < 1 || lanes_max < lanes_min) throw ConfigError("scene params: need 1 <= lanes_min <= lanes_max");
    if (lanes_max > 4) throw ConfigError("scene params: at most 4 lanes per direction fit the BEV range");
    if (intersections < 0 || intersections > 1) throw ConfigError("scene params: intersections must be 0 or 1");
    if (!(lane_width > 0.5 && lane_width < 6.0)) throw ConfigError("scene params: lane width out of range");
    if (!(min_radius > 10.0 && max_radius >= min_radius)) throw ConfigError("scene params: bad radius range");
    if (road_shape < -1 || road_shape > 2) throw ConfigError("scene params: road_shape must be -1..2");
    if (!(junction_half_gap >= 4.0 && junction_half_gap <= 20.0)) throw ConfigError("scene params: bad junction gap");
  }
};

inline bool point_in_bounds(const Point3& p, double margin = 0.0) {
  return p.x() >= kXMin + margin && p.x() <= kXMax - margin && p.y() >= kYMin + margin && p.y() <= kYMax - margin;
}

// Empty when the scene satisfies every invariant.
inline std::vector<std::string> validate_scene(const Scene& s) {
  std::vector<std::string> errors;
  const std::size_t n = s.centerlines.size();
  if (s.is_real.size() != n) errors.push_back("is_real length != centerline count");
  if (s.adjacency.size() != n) errors.push_back("adjacency row count != centerline count");
  for (std::size_t i = 0; i < n; ++i) {
    const auto& line = s.centerlines[i];
    if (line.size() != static_cast<std::size_t>(kScenePoints)) {
      errors.push_back("centerline " + std::to_string(i) + " does not have 201 points");
    }
    for (const auto& p : line.points()) {
      if (!point_in_bounds(p)) {
        errors.push_back("centerline " + std::to_string(i) + " leaves the BEV bounds");
        break;
      }
    }
    if (i < s.adjacency.size()) {
      if (s.adjacency[i].size() != n) {
        errors.push_back("adjacency row " + std::to_string(i) + " has wrong length");
        continue;
      }
      for (std::size_t j = 0; j < n; ++j) {
        const int a = s.adjacency[i][j];
        if (a != 0 && a != 1) errors.push_back("adjacency entry is not binary");
        if (a == 1 && (line.back() - s.centerlines[j].front()).norm() >= 0.5) {
          errors.push_back("edge " + std::to_string(i) + "->" + std::to_string(j) + " has an endpoint gap >= 0.5 m");
        }
      }
    }
  }
  for (const auto& sd : s.sd_instances) {
    if (sd.semantic_type < 1 || sd.semantic_type > kSdSemanticTypes) errors.push_back("SD semantic type out of range");
  }
  return errors;
}

namespace detail {

inline Point2 heading_vec(double theta) { return {std::cos(theta), std::sin(theta)}; }

struct RefCurve {
  std::vector<Point2> pts;
  std::vector<double> heading;
};

// Integrates heading(s) from `start` with 0.25 m steps for `length` meters.
template <typename HeadingFn>
RefCurve integrate_curve(Point2 start, double length, HeadingFn heading) {
  RefCurve c;
  constexpr double ds = 0.25;
  const int steps = static_cast<int>(std::ceil(length / ds));
  Point2 p = start;
  for (int i = 0; i <= steps; ++i) {
    const double s = i * ds;
    const double th = heading(s);
    c.pts.push_back(p);
    c.heading.push_back(th);
    // midpoint rule
    p += ds * heading_vec(heading(s + 0.5 * ds));
  }
  return c;
}

// Longest contiguous run strictly inside the bounds (with margin).
inline std::vector<Point2> clip_to_bounds(const std::vector<Point2>& pts, double margin) {
  std::vector<Point2> best, cur;
  for (const auto& p : pts) {
    if (point_in_bounds(Point3(p.x(), p.y(), 0.0), margin)) {
      cur.push_back(p);
    } else {
      if (cur.size() > best.size()) best = cur;
      cur.clear();
    }
  }
  if (cur.size() > best.size()) best = cur;
  return best;
}

inline std::vector<Point2> offset_curve(const RefCurve& c, double lateral) {
  std::vector<Point2> out;
  out.reserve(c.pts.size());
  for (std::size_t i = 0; i < c.pts.size(); ++i) {
    const Point2 normal(-std::sin(c.heading[i]), std::cos(c.heading[i]));
    out.push_back(c.pts[i] + lateral * normal);
  }
  return out;
}

inline std::vector<Point2> bezier_connector(const Point2& p0, const Point2& t0, const Point2& p3, const Point2& t3) {
  const double len = (p3 - p0).norm();
  const Point2 p1 = p0 + t0.normalized() * len / 3.0;
  const Point2 p2 = p3 - t3.normalized() * len / 3.0;
  std::vector<Point2> out;
  constexpr int kSamples = 60;
  for (int i = 0; i <= kSamples; ++i) {
    const double t = static_cast<double>(i) / kSamples;
    const double u = 1.0 - t;
    out.push_back(u * u * u * p0 + 3 * u * u * t * p1 + 3 * u * t * t * p2 + t * t * t * p3);
  }
  out.front() = p0;
  out.back() = p3;
  return out;
}

inline double polyline_length2(const std::vector<Point2>& pts) {
  double len = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) len += (pts[i] - pts[i - 1]).norm();
  return len;
}

inline Polyline to_scene_line(const std::vector<Point2>& pts, double z = 0.0) {
  return resample_polyline(Polyline::from_xy(pts, z), kScenePoints);
}

// Index-wise mean of the lanes (each resampled to `n` points), then a
// 5-tap moving average with fixed endpoints.
inline Polyline aggregate_road(const std::vector<Polyline>& lanes, int n = 50) {
  std::vector<Point3> mean(static_cast<std::size_t>(n), Point3::Zero());
  for (const auto& lane : lanes) {
    const auto r = resample_polyline(lane, n);
    for (int i = 0; i < n; ++i) mean[static_cast<std::size_t>(i)] += r[static_cast<std::size_t>(i)] / static_cast<double>(lanes.size());
  }
  std::vector<Point3> smooth = mean;
  for (int i = 2; i + 2 < n; ++i) {
    Point3 acc = Point3::Zero();
    for (int d = -2; d <= 2; ++d) acc += mean[static_cast<std::size_t>(i + d)];
    smooth[static_cast<std::size_t>(i)] = acc / 5.0;
  }
  return Polyline(std::move(smooth));
}

struct SceneBuilder {
  Scene scene;

  int add(const std::vector<Point2>& pts, bool real) {
    scene.centerlines.push_back(to_scene_line(pts));
    scene.is_real.push_back(real);
    return static_cast<int>(scene.centerlines.size()) - 1;
  }

  void finish_adjacency(double tol = 0.05) {
    const std::size_t n = scene.centerlines.size();
    scene.adjacency.assign(n, std::vector<int>(n, 0));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j && (scene.centerlines[i].back() - scene.centerlines[j].front()).norm() < tol) scene.adjacency[i][j] = 1;
      }
    }
  }
};

}  // namespace detail

// Deterministic synthetic scene: a main road (straight, arc or clothoid-like
// when there is no junction) with parallel lanes split into two consecutive
// segments, or a four-way junction with virtual connectors.
inline Scene synth_scene(std::uint64_t seed, const SceneParams& params = {}) {
  params.check();
  Rng rng(seed);
  detail::SceneBuilder b;
  b.scene.seed = seed;
  const int lanes = rng.uniform_int(params.lanes_min, params.lanes_max);
  const int opposite = params.opposite_lanes ? rng.uniform_int(1, lanes) : 0;
  const double w = params.lane_width;

  // forward lanes occupy the right side (negative lateral offsets)
  auto lane_offset = [&](int i, bool forward) { return forward ? -(i + 0.5) * w : (i + 0.5) * w; };

  if (params.intersections == 0) {
    const int drawn = rng.uniform_int(0, 2);
    const int shape = params.road_shape >= 0 ? params.road_shape : drawn;
    const double radius = rng.uniform(params.min_radius, params.max_radius);
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    const double theta0 = rng.uniform(-0.08, 0.08);
    const double y0 = rng.uniform(-4.0, 4.0);
    const double length = 110.0;
    const Point2 start(-55.0, y0);
    auto heading = [&](double s) {
      switch (shape) {
        case 1: return theta0 + sign * s / radius;
        case 2: return theta0 + sign * s * s / (2.0 * radius * length);
        default: return theta0;
      }
    };
    // centre the curvature on the box: shift so the curve passes near the origin
    detail::RefCurve ref = detail::integrate_curve(start, length, heading);
    const Point2 mid = ref.pts[ref.pts.size() / 2];
    for (auto& p : ref.pts) p -= Point2(0.0, mid.y() - y0);

    const double split = rng.uniform(0.4, 0.6);
    std::vector<Polyline> forward_lanes, backward_lanes;
    for (int pass = 0; pass < 2; ++pass) {
      const bool forward = pass == 0;
      const int count = forward ? lanes : opposite;
      for (int i = 0; i < count; ++i) {
        auto pts = detail::clip_to_bounds(detail::offset_curve(ref, lane_offset(i, forward)), 0.5);
        if (detail::polyline_length2(pts) < 20.0) continue;
        if (!forward) std::reverse(pts.begin(), pts.end());
        const auto cut = static_cast<std::size_t>(split * static_cast<double>(pts.size() - 1));
        std::vector<Point2> first(pts.begin(), pts.begin() + static_cast<std::ptrdiff_t>(cut) + 1);
        std::vector<Point2> second(pts.begin() + static_cast<std::ptrdiff_t>(cut), pts.end());
        b.add(first, true);
        b.add(second, true);
        (forward ? forward_lanes : backward_lanes).push_back(detail::to_scene_line(pts));
      }
    }
    std::vector<Polyline> road = forward_lanes;
    for (const auto& l : backward_lanes) road.push_back(l.reversed());
    if (!road.empty()) b.scene.sd_instances.push_back({detail::aggregate_road(road), 1});
  } else {
    const double gap = params.junction_half_gap;
    const int cross_lanes = rng.uniform_int(params.lanes_min, std::min(params.lanes_max, 3));
    const int cross_opposite = params.opposite_lanes ? rng.uniform_int(1, cross_lanes) : 0;
    const double y_center = rng.uniform(-2.0, 2.0);
    const double x_center = rng.uniform(-5.0, 5.0);
    const double x_edge = 49.0;
    const double y_edge = 24.0;

    struct Arm {
      int in = -1;   // lane entering the junction
      int out = -1;  // lane leaving the junction
      Point2 in_end, out_start, in_dir, out_dir;
    };
    // main road, west -> east (forward) and east -> west (opposite)
    std::vector<Arm> east, west, north, south;
    for (int i = 0; i < lanes; ++i) {
      const double y = y_center + lane_offset(i, true);
      Arm a;
      a.in_end = {x_center - gap, y};
      a.out_start = {x_center + gap, y};
      a.in_dir = a.out_dir = {1.0, 0.0};
      a.in = b.add({{-x_edge, y}, a.in_end}, true);
      a.out = b.add({a.out_start, {x_edge, y}}, true);
      east.push_back(a);
    }
    for (int i = 0; i < opposite; ++i) {
      const double y = y_center + lane_offset(i, false);
      Arm a;
      a.in_end = {x_center + gap, y};
      a.out_start = {x_center - gap, y};
      a.in_dir = a.out_dir = {-1.0, 0.0};
      a.in = b.add({{x_edge, y}, a.in_end}, true);
      a.out = b.add({a.out_start, {-x_edge, y}}, true);
      west.push_back(a);
    }
    // cross road, south -> north (forward) and north -> south
    for (int i = 0; i < cross_lanes; ++i) {
      const double x = x_center - lane_offset(i, true);
      Arm a;
      a.in_end = {x, y_center - gap};
      a.out_start = {x, y_center + gap};
      a.in_dir = a.out_dir = {0.0, 1.0};
      a.in = b.add({{x, -y_edge}, a.in_end}, true);
      a.out = b.add({a.out_start, {x, y_edge}}, true);
      north.push_back(a);
    }
    for (int i = 0; i < cross_opposite; ++i) {
      const double x = x_center - lane_offset(i, false);
      Arm a;
      a.in_end = {x, y_center + gap};
      a.out_start = {x, y_center - gap};
      a.in_dir = a.out_dir = {0.0, -1.0};
      a.in = b.add({{x, y_edge}, a.in_end}, true);
      a.out = b.add({a.out_start, {x, -y_edge}}, true);
      south.push_back(a);
    }
    auto connect = [&](const Arm& from, const Arm& to) {
      b.add(detail::bezier_connector(from.in_end, from.in_dir, to.out_start, to.out_dir), false);
    };
    // straight through
    for (const auto* group : {&east, &west, &north, &south}) {
      for (const auto& a : *group) connect(a, a);
    }
    // turns from the innermost (left) and outermost (right) lanes
    if (!east.empty() && !north.empty()) connect(east.front(), north.front());
    if (!east.empty() && !south.empty()) connect(east.back(), south.back());
    if (!north.empty() && !west.empty()) connect(north.front(), west.front());
    if (!west.empty() && !south.empty()) connect(west.front(), south.front());

    auto arm_lines = [&](const std::vector<Arm>& arms, bool incoming) {
      std::vector<Polyline> out;
      for (const auto& a : arms) out.push_back(b.scene.centerlines[static_cast<std::size_t>(incoming ? a.in : a.out)]);
      return out;
    };
    auto reversed_all = [](std::vector<Polyline> v) {
      for (auto& l : v) l = l.reversed();
      return v;
    };
    auto concat = [](std::vector<Polyline> a, const std::vector<Polyline>& c) {
      a.insert(a.end(), c.begin(), c.end());
      return a;
    };
    // SD map: one road-level polyline per approach, plus the junction itself
    b.scene.sd_instances.push_back({detail::aggregate_road(concat(arm_lines(east, true), reversed_all(arm_lines(west, false)))), 1});
    b.scene.sd_instances.push_back({detail::aggregate_road(concat(arm_lines(east, false), reversed_all(arm_lines(west, true)))), 1});
    b.scene.sd_instances.push_back({detail::aggregate_road(concat(arm_lines(north, true), reversed_all(arm_lines(south, false)))), 2});
    b.scene.sd_instances.push_back({detail::aggregate_road(concat(arm_lines(north, false), reversed_all(arm_lines(south, true)))), 2});
    b.scene.sd_instances.push_back(
        {Polyline({Point3(x_center - gap, y_center, 0.0), Point3(x_center + gap, y_center, 0.0)}), 3});
  }
  b.finish_adjacency();
  return b.scene;
}

// Single circular-arc lane of the given radius, heading along +x at its
// start, centred in the BEV range. Sweep is capped at 90 degrees and 40 m.
inline Polyline arc_centerline(double radius, bool turn_left = true) {
  const double sweep = std::min(std::numbers::pi / 2.0, 40.0 / radius);
  const double sign = turn_left ? 1.0 : -1.0;
  std::vector<Point2> pts;
  constexpr int kSamples = 400;
  for (int i = 0; i <= kSamples; ++i) {
    const double a = sweep * i / kSamples;
    pts.emplace_back(radius * std::sin(a), sign * radius * (1.0 - std::cos(a)));
  }
  Point2 lo = pts.front(), hi = pts.front();
  for (const auto& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Point2 shift = -0.5 * (lo + hi);
  for (auto& p : pts) p += shift;
  return detail::to_scene_line(pts);
}

inline Scene synth_arc_scene(std::uint64_t seed, double radius) {
  Rng rng(seed);
  detail::SceneBuilder b;
  b.scene.seed = seed;
  b.scene.centerlines.push_back(arc_centerline(radius, rng.uniform() < 0.5));
  b.scene.is_real.push_back(true);
  b.scene.sd_instances.push_back({detail::aggregate_road(b.scene.centerlines), 1});
  b.finish_adjacency();
  return b.scene;
}

// ---- JSON ----

inline nlohmann::json polyline_to_json(const Polyline& line) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : line.points()) pts.push_back({p.x(), p.y(), p.z()});
  return pts;
}

inline Polyline polyline_from_json(const nlohmann::json& j) {
  std::vector<Point3> pts;
  for (const auto& p : j) {
    if (p.size() != 3) throw std::invalid_argument("point must be [x, y, z]");
    pts.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
  }
  return Polyline(std::move(pts));
}

inline nlohmann::json scene_to_json(const Scene& s) {
  nlohmann::json j;
  j["format"] = "roadpainter.scene";
  j["version"] = kSceneFormatVersion;
  j["units"] = "meters";
  j["seed"] = s.seed;
  j["bounds"] = {{"x", {kXMin, kXMax}}, {"y", {kYMin, kYMax}}};
  j["centerlines"] = nlohmann::json::array();
  for (std::size_t i = 0; i < s.centerlines.size(); ++i) {
    j["centerlines"].push_back({{"id", i}, {"is_real", static_cast<bool>(s.is_real[i])},
                                {"points", polyline_to_json(s.centerlines[i])}});
  }
  j["adjacency"] = s.adjacency;
  j["sd_map"] = nlohmann::json::array();
  for (const auto& sd : s.sd_instances) {
    j["sd_map"].push_back({{"semantic_type", sd.semantic_type}, {"points", polyline_to_json(sd.polyline)}});
  }
  return j;
}

inline Scene scene_from_json(const nlohmann::json& j) {
  if (j.value("format", std::string()) != "roadpainter.scene") throw std::invalid_argument("not a roadpainter scene file");
  if (j.at("version").get<int>() != kSceneFormatVersion) throw std::invalid_argument("unsupported scene version");
  if (j.value("units", std::string("meters")) != "meters") throw std::invalid_argument("scene units must be meters");
  Scene s;
  s.seed = j.value("seed", std::uint64_t{0});
  for (const auto& c : j.at("centerlines")) {
    s.centerlines.push_back(polyline_from_json(c.at("points")));
    s.is_real.push_back(c.at("is_real").get<bool>());
  }
  s.adjacency = j.at("adjacency").get<std::vector<std::vector<int>>>();
  if (j.contains("sd_map")) {
    for (const auto& sd : j.at("sd_map")) {
      s.sd_instances.push_back({polyline_from_json(sd.at("points")), sd.at("semantic_type").get<int>()});
    }
  }
  return s;
}

}  // namespace roadpainter
