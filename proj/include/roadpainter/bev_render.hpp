#pragma once

#include <roadpainter/instance_mask.hpp>
#include <roadpainter/raster.hpp>
#include <roadpainter/scene.hpp>
#include <roadpainter/tensor.hpp>

#include <bit>
#include <cstdint>
#include <fstream>
#include <string>

namespace roadpainter {

// Feature channels written by the renderer; any further channels carry noise only.
enum BevChannel : int {
  kOccupancy = 0,
  kTangentSin = 1,
  kTangentCos = 2,
  kLaneHash = 3,
  kVirtualOccupancy = 4,
  kRenderedChannels = 5,
};

inline constexpr double kVirtualIntensity = 0.2;

// Deterministic per-lane value in (0, 1].
inline double lane_hash(std::size_t ordinal) {
  const double v = std::fmod(static_cast<double>(ordinal + 1) * 0.6180339887498949, 1.0);
  return v == 0.0 ? 1.0 : v;
}

// Stand-in for a learned BEV encoder: real lanes drawn into occupancy, tangent
// and hash channels, virtual lanes as weak occupancy, plus i.i.d. noise.
// Later lanes overwrite earlier ones where they overlap.
inline BevGrid render_bev_features(const Scene& scene, const GridSpec& spec, int channels, double noise_sigma,
                                   std::uint64_t noise_seed) {
  if (channels < kRenderedChannels) throw DimensionError("render_bev_features: need at least 5 channels");
  if (noise_sigma < 0.0) throw std::invalid_argument("render_bev_features: negative noise");
  BevGrid g(spec, channels);
  std::size_t ordinal = 0;
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const Polyline& line = scene.centerlines[i];
    if (!scene.is_real[i]) {
      const CellMask m = dilate(spec, rasterize_polyline(spec, line), 1);
      for (std::size_t c = 0; c < m.size(); ++c) {
        if (m[c]) g.data()(static_cast<Eigen::Index>(c), kVirtualOccupancy) = kVirtualIntensity;
      }
      continue;
    }
    const double hash = lane_hash(ordinal++);
    CellMask seg(static_cast<std::size_t>(spec.cells()), 0);
    for (std::size_t s = 1; s < line.size(); ++s) {
      const Point2 a = line[s - 1].head<2>();
      const Point2 b = line[s].head<2>();
      const Point2 d = b - a;
      if (d.norm() == 0.0) continue;
      const double theta = std::atan2(d.y(), d.x());
      rasterize_segment(spec, a, b, seg);
      for (std::size_t c = 0; c < seg.size(); ++c) {
        if (!seg[c]) continue;
        seg[c] = 0;
        const int r0 = static_cast<int>(c) / spec.cols;
        const int c0 = static_cast<int>(c) % spec.cols;
        // 3x3 dilation
        for (int r = std::max(0, r0 - 1); r <= std::min(spec.rows - 1, r0 + 1); ++r) {
          for (int cc = std::max(0, c0 - 1); cc <= std::min(spec.cols - 1, c0 + 1); ++cc) {
            auto row = g.cell(r, cc);
            row[kOccupancy] = 1.0;
            row[kTangentSin] = std::sin(theta);
            row[kTangentCos] = std::cos(theta);
            row[kLaneHash] = hash;
          }
        }
      }
    }
  }
  if (noise_sigma > 0.0) {
    Rng rng(noise_seed);
    for (Eigen::Index i = 0; i < g.data().size(); ++i) g.data().data()[i] += noise_sigma * rng.normal();
  }
  return g;
}

// Ideal instance-mask logits for a centerline: a Gaussian ridge in the
// distance to the polyline, logit = peak - d^2 / (2 sigma^2) with d, sigma in cells.
inline InstanceMask render_distance_mask(const GridSpec& spec, const Polyline& line, double sigma_cells = 1.0,
                                         double peak = 4.0) {
  Vector logits(spec.cells());
  for (int r = 0; r < spec.rows; ++r) {
    for (int c = 0; c < spec.cols; ++c) {
      const Point2 p = spec.cell_center(r, c);
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t s = 1; s < line.size(); ++s) {
        const Point2 a = line[s - 1].head<2>();
        const Point2 ab = line[s].head<2>() - a;
        const double len2 = ab.squaredNorm();
        const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
        best = std::min(best, (p - a - t * ab).squaredNorm());
      }
      const double d2 = best / (spec.resolution * spec.resolution);
      logits[r * spec.cols + c] = peak - d2 / (2.0 * sigma_cells * sigma_cells);
    }
  }
  return InstanceMask(spec.rows, spec.cols, std::move(logits));
}

// ---- binary container: int32 LE H, W, C then row-major float64 (row, col, channel) ----

static_assert(std::endian::native == std::endian::little, "BEV container io assumes a little-endian host");

inline void write_bev(const BevGrid& g, std::ostream& os) {
  const std::int32_t header[3] = {g.height(), g.width(), g.channels()};
  os.write(reinterpret_cast<const char*>(header), sizeof(header));
  os.write(reinterpret_cast<const char*>(g.data().data()), static_cast<std::streamsize>(sizeof(double) * g.data().size()));
  if (!os) throw std::runtime_error("write_bev: stream error");
}

inline BevGrid read_bev(std::istream& is, double resolution = 0.5) {
  std::int32_t header[3] = {0, 0, 0};
  is.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!is || header[0] <= 0 || header[1] <= 0 || header[2] <= 0) throw std::runtime_error("read_bev: bad header");
  GridSpec spec;
  spec.rows = header[0];
  spec.cols = header[1];
  spec.resolution = resolution;
  BevGrid g(spec, header[2]);
  is.read(reinterpret_cast<char*>(g.data().data()), static_cast<std::streamsize>(sizeof(double) * g.data().size()));
  if (!is) throw std::runtime_error("read_bev: truncated payload");
  return g;
}

inline void save_bev(const BevGrid& g, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path);
  write_bev(g, os);
}

inline BevGrid load_bev(const std::string& path, double resolution = 0.5) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_bev(is, resolution);
}

}  // namespace roadpainter
