#pragma once

#include <roadpainter/geometry.hpp>
#include <roadpainter/instance_mask.hpp>
#include <roadpainter/tensor.hpp>

#include <optional>
#include <vector>

namespace roadpainter {

enum class ReadoutAxis { kColumns, kRows };

// Encodes (query, detected points) into the mask query Q'.
struct MaskQueryEncoder {
  MlpWeights point_mlp;  // 3 -> D, shared across the K points
  MlpWeights fuse_mlp;   // K*D -> C
  MlpWeights query_mlp;  // C -> C

  static MaskQueryEncoder random(int channels, int k, int point_dim, Rng& rng) {
    return {MlpWeights::random({3, point_dim, point_dim}, rng), MlpWeights::random({k * point_dim, channels}, rng),
            MlpWeights::random({channels, channels}, rng)};
  }
};

// Position-free mask query: the query encoding alone.
inline Vector position_free_mask_query(const Vector& query, const MaskQueryEncoder& enc) {
  return mlp_forward(enc.query_mlp, query);
}

inline Vector encode_mask_query(const Vector& query, const Polyline& line, const MaskQueryEncoder& enc) {
  const int point_dim = enc.point_mlp.output_dim();
  require_dims(enc.fuse_mlp.input_dim() == static_cast<int>(line.size()) * point_dim,
               "encode_mask_query: polyline length does not match the encoder's K");
  Vector concat(enc.fuse_mlp.input_dim());
  for (std::size_t i = 0; i < line.size(); ++i) {
    concat.segment(static_cast<Eigen::Index>(i) * point_dim, point_dim) = mlp_forward(enc.point_mlp, line[i]);
  }
  return mlp_forward(enc.fuse_mlp, concat) + mlp_forward(enc.query_mlp, query);
}

// M_i = B . Q'_i per cell.
inline InstanceMask generate_mask(const BevGrid& bev, const Vector& mask_query) {
  require_dims(mask_query.size() == bev.channels(), "generate_mask: channel mismatch");
  return InstanceMask(bev.height(), bev.width(), bev.data() * mask_query);
}

// Soft-argmax per column (row index expectation, W values) or per row
// (column index expectation, H values).
inline Vector sample_mask_points(const InstanceMask& m, ReadoutAxis axis) {
  const bool columns = axis == ReadoutAxis::kColumns;
  const int lines = columns ? m.cols : m.rows;
  const int span = columns ? m.rows : m.cols;
  require_dims(span >= 2, "sample_mask_points: need at least 2 cells along the sampled axis");
  Vector out(lines);
  Vector logits(span);
  for (int j = 0; j < lines; ++j) {
    for (int r = 0; r < span; ++r) logits[r] = columns ? m.at(r, j) : m.at(j, r);
    const Vector p = softmax(logits);
    double acc = 0.0;
    for (int r = 0; r < span; ++r) acc += r * p[r];
    out[j] = acc;
  }
  return out;
}

inline Vector predict_existence(const InstanceMask& m, const MlpWeights& phi1, ReadoutAxis axis) {
  const int expected = axis == ReadoutAxis::kColumns ? m.cols : m.rows;
  require_dims(phi1.input_dim() == m.logits.size(), "predict_existence: phi1 input must be H*W");
  require_dims(phi1.output_dim() == expected, "predict_existence: phi1 output must be W (columns) or H (rows)");
  return mlp_forward(phi1, m.logits).unaryExpr([](double x) { return sigmoid(x); });
}

inline double predict_direction(const Vector& mask_query, const MlpWeights& phi2) {
  require_dims(phi2.output_dim() == 1, "predict_direction: phi2 must map to a scalar");
  return sigmoid(mlp_forward(phi2, mask_query)[0]);
}

struct MaskPointReadout {
  ReadoutAxis axis = ReadoutAxis::kColumns;
  Vector coords;     // fractional row (columns axis) or column (rows axis) per line
  Vector existence;  // per line
  double direction = 0.5;

  int valid_count(double threshold) const {
    int n = 0;
    for (Eigen::Index i = 0; i < existence.size(); ++i) n += existence[i] > threshold ? 1 : 0;
    return n;
  }
};

// phi1/phi2 per axis; the two readouts do not share weights.
struct ReadoutHeads {
  MlpWeights existence_columns;
  MlpWeights existence_rows;
  MlpWeights direction_columns;
  MlpWeights direction_rows;

  static ReadoutHeads random(const GridSpec& spec, int channels, Rng& rng) {
    return {MlpWeights::random({spec.cells(), spec.cols}, rng), MlpWeights::random({spec.cells(), spec.rows}, rng),
            MlpWeights::random({channels, channels, 1}, rng), MlpWeights::random({channels, channels, 1}, rng)};
  }
};

inline MaskPointReadout read_mask(const InstanceMask& m, const Vector& mask_query, const ReadoutHeads& heads,
                                  ReadoutAxis axis) {
  const bool columns = axis == ReadoutAxis::kColumns;
  return {axis, sample_mask_points(m, axis),
          predict_existence(m, columns ? heads.existence_columns : heads.existence_rows, axis),
          predict_direction(mask_query, columns ? heads.direction_columns : heads.direction_rows)};
}

// Larger valid count wins; ties go to the column readout.
inline const MaskPointReadout& select_point_set(const MaskPointReadout& col, const MaskPointReadout& row,
                                                double validity_threshold = 0.5) {
  if (!(validity_threshold > 0.0 && validity_threshold < 1.0)) {
    throw std::invalid_argument("select_point_set: threshold must be in (0,1)");
  }
  return row.valid_count(validity_threshold) > col.valid_count(validity_threshold) ? row : col;
}

struct FusionParams {
  double validity_threshold = 0.5;
  double outlier_threshold = 1.5;  // meters
};

// Valid mask points in metric (x, y), ordered by the decoded direction.
inline PointSet2 readout_points(const MaskPointReadout& readout, const GridSpec& spec, double validity_threshold) {
  PointSet2 pts;
  for (Eigen::Index i = 0; i < readout.coords.size(); ++i) {
    if (!(readout.existence[i] > validity_threshold)) continue;
    const double line = static_cast<double>(i);
    pts.points.push_back(readout.axis == ReadoutAxis::kColumns ? spec.cell_center(readout.coords[i], line)
                                                               : spec.cell_center(line, readout.coords[i]));
  }
  if (readout.direction < 0.5) std::reverse(pts.points.begin(), pts.points.end());
  pts.valid.assign(pts.points.size(), true);
  return pts;
}

// Mask-side contribution to fusion: filtered, resampled to k points.
// Empty when fewer than two points survive.
inline std::optional<std::vector<Point2>> mask_polyline(const MaskPointReadout& readout, const GridSpec& spec, int k,
                                                        const FusionParams& params = {}) {
  const PointSet2 kept = filter_outliers(readout_points(readout, spec, params.validity_threshold),
                                         params.outlier_threshold);
  const auto survivors = kept.valid_points();
  if (survivors.size() < 2) return std::nullopt;
  return resample_points2(survivors, k);
}

// Index-wise average of the mask polyline and the detected points; z stays
// from the detection. Falls back to `detected` for degenerate masks.
inline Polyline fuse_points(const Polyline& detected, const MaskPointReadout& readout, const GridSpec& spec, int k,
                            const FusionParams& params = {}) {
  require_dims(static_cast<int>(detected.size()) == k, "fuse_points: detected polyline must have K points");
  const auto mask_pts = mask_polyline(readout, spec, k, params);
  if (!mask_pts) return detected;
  std::vector<Point3> refined(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    const auto& d = detected[static_cast<std::size_t>(i)];
    const auto& m = (*mask_pts)[static_cast<std::size_t>(i)];
    refined[static_cast<std::size_t>(i)] = Point3(0.5 * (d.x() + m.x()), 0.5 * (d.y() + m.y()), d.z());
  }
  return Polyline(std::move(refined));
}

}  // namespace roadpainter
