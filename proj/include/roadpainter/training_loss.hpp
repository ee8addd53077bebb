#pragma once

#include <roadpainter/decoder.hpp>
#include <roadpainter/losses.hpp>
#include <roadpainter/matching.hpp>
#include <roadpainter/scene.hpp>
#include <roadpainter/targets.hpp>
#include <roadpainter/topology.hpp>

#include <json.hpp>

#include <vector>

namespace roadpainter {

// Everything the loss needs from one forward pass. Predictions are real first,
// then virtual; real predictions carry the final (fused when enabled) points.
struct PipelineOutputs {
  GridSpec grid;
  std::vector<CenterlinePrediction> predictions;
  TopologyMatrix topology;                      // N_L x N_L
  std::vector<InstanceMask> masks;              // one per prediction, or empty
  std::vector<MaskPointReadout> column_readouts;  // one per prediction, or empty
  std::vector<MaskPointReadout> row_readouts;
};

struct LossWeights {
  double top = 5.0;
  double cls = 1.5;
  double det = 0.025;
  double mask = 1.0;
  double mp = 7.0;
};

struct LossConfig {
  LossWeights lambda;
  FocalParams focal;
  bool topology = true;
  bool mask = true;
  bool mask_points = true;
};

struct LossBreakdown {
  double top = 0.0;
  double cls = 0.0;
  double det = 0.0;
  double mask = 0.0;
  double mp = 0.0;
  double total = 0.0;

  static double weighted(const LossBreakdown& b, const LossWeights& w) {
    return w.top * b.top + w.cls * b.cls + w.det * b.det + w.mask * b.mask + w.mp * b.mp;
  }
};

inline nlohmann::json loss_to_json(const LossBreakdown& b) {
  return {{"top", b.top}, {"cls", b.cls}, {"det", b.det}, {"mask", b.mask}, {"mp", b.mp}, {"total", b.total}};
}

// Matches real and virtual predictions separately; returns the GT scene index
// per prediction (-1 when unmatched).
inline std::vector<int> match_by_category(const PipelineOutputs& out, const Scene& scene, const MatchingWeights& mw) {
  std::vector<int> gt_of(out.predictions.size(), -1);
  for (const bool real : {true, false}) {
    std::vector<int> pred_idx;
    std::vector<CenterlinePrediction> preds;
    for (std::size_t i = 0; i < out.predictions.size(); ++i) {
      if (out.predictions[i].is_real == real) {
        pred_idx.push_back(static_cast<int>(i));
        preds.push_back(out.predictions[i]);
      }
    }
    const auto gt_idx = scene.indices_of(real);
    const auto a = match_instances(preds, scene.lines_of(real), mw);
    for (const auto& [p, g] : a.pairs) {
      gt_of[static_cast<std::size_t>(pred_idx[static_cast<std::size_t>(p)])] = gt_idx[static_cast<std::size_t>(g)];
    }
  }
  return gt_of;
}

// Mask-point loss for one readout: L1 on coordinates where the GT line exists,
// bce on existence, focal on direction.
inline double mask_point_loss(const MaskPointReadout& r, const MaskPointTargets& t, const FocalParams& fp) {
  require_dims(r.coords.size() == t.coords.size() && r.existence.size() == t.existence.size(),
               "mask_point_loss: readout and target lengths differ");
  double l1 = 0.0;
  int present = 0;
  for (Eigen::Index i = 0; i < t.existence.size(); ++i) {
    if (t.existence[i] > 0.5) {
      l1 += std::abs(r.coords[i] - t.coords[i]);
      ++present;
    }
  }
  if (present > 0) l1 /= present;
  return l1 + bce_loss(r.existence, t.existence) + focal_loss(r.direction, t.direction > 0.5 ? 1 : 0, fp);
}

inline LossBreakdown total_loss(const PipelineOutputs& out, const Scene& scene, const LossConfig& cfg = {}) {
  const std::size_t n = out.predictions.size();
  if (cfg.topology && (out.topology.rows() != static_cast<Eigen::Index>(n) || out.topology.cols() != static_cast<Eigen::Index>(n))) {
    throw std::invalid_argument("total_loss: topology output missing or mis-shaped");
  }
  if (cfg.mask && out.masks.size() != n) throw std::invalid_argument("total_loss: instance masks missing");
  if (cfg.mask_points && (out.column_readouts.size() != n || out.row_readouts.size() != n)) {
    throw std::invalid_argument("total_loss: mask-point readouts missing");
  }

  const auto gt_of = match_by_category(out, scene, {cfg.lambda.cls, cfg.lambda.det, cfg.focal});
  LossBreakdown b;

  Vector scores(static_cast<Eigen::Index>(n)), cls_t(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    scores[static_cast<Eigen::Index>(i)] = out.predictions[i].score;
    cls_t[static_cast<Eigen::Index>(i)] = gt_of[i] >= 0 ? 1.0 : 0.0;
  }
  b.cls = focal_mean(scores, cls_t, cfg.focal);

  if (cfg.topology && n > 0) {
    Vector probs(static_cast<Eigen::Index>(n * n)), targets(static_cast<Eigen::Index>(n * n));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const auto e = static_cast<Eigen::Index>(i * n + j);
        probs[e] = out.topology(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        const bool edge = gt_of[i] >= 0 && gt_of[j] >= 0 &&
                          scene.adjacency[static_cast<std::size_t>(gt_of[i])][static_cast<std::size_t>(gt_of[j])] == 1;
        targets[e] = edge ? 1.0 : 0.0;
      }
    }
    b.top = focal_mean(probs, targets, cfg.focal);
  }

  int matched = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (gt_of[i] < 0) continue;
    ++matched;
    const Polyline& gt = scene.centerlines[static_cast<std::size_t>(gt_of[i])];
    const Polyline& pred = out.predictions[i].points;
    b.det += mean_point_l1(pred, resample_polyline(gt, static_cast<int>(pred.size())));
    if (cfg.mask) {
      const Vector gt_mask = cell_mask_to_vector(gt_instance_mask(out.grid, gt));
      const Vector prob = out.masks[i].probabilities();
      b.mask += bce_loss(prob, gt_mask) + dice_loss(prob, gt_mask);
    }
    if (cfg.mask_points) {
      b.mp += mask_point_loss(out.column_readouts[i], mask_point_targets(gt, out.grid, ReadoutAxis::kColumns), cfg.focal);
      b.mp += mask_point_loss(out.row_readouts[i], mask_point_targets(gt, out.grid, ReadoutAxis::kRows), cfg.focal);
    }
  }
  if (matched > 0) {
    b.det /= matched;
    b.mask /= matched;
    b.mp /= matched;
  }
  b.total = LossBreakdown::weighted(b, cfg.lambda);
  return b;
}

}  // namespace roadpainter
