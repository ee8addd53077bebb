#pragma once

#include <roadpainter/geometry.hpp>
#include <roadpainter/instance_mask.hpp>
#include <roadpainter/raster.hpp>

#include <json.hpp>

#include <algorithm>
#include <numeric>
#include <optional>
#include <vector>

namespace roadpainter {

struct ScoredPolyline {
  Polyline line;
  double score = 0.0;
};

struct ScoredMask {
  InstanceMask mask;
  double score = 0.0;
};

struct MetricConfig {
  std::vector<double> frechet_thresholds{1.0, 2.0, 3.0};
  double topology_match_threshold = 1.0;
  std::vector<double> iou_thresholds{0.5, 0.75};
  int frechet_points = 11;  // both polylines are resampled to this count first
  double edge_threshold = 0.5;
};

// All-point interpolated AP for a ranked list of hit flags.
inline double average_precision(const std::vector<bool>& ranked_hits, std::size_t num_gt) {
  if (num_gt == 0) return ranked_hits.empty() ? 1.0 : 0.0;
  const std::size_t n = ranked_hits.size();
  std::vector<double> precision(n), recall(n);
  std::size_t tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (ranked_hits[i]) ++tp;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    recall[i] = static_cast<double>(tp) / static_cast<double>(num_gt);
  }
  for (std::size_t i = n; i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return ap;
}

// Indices sorted by descending score, ties by ascending index.
inline std::vector<std::size_t> score_order(const std::vector<double>& scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

// distances(i, j) between prediction i and ground truth j; each prediction in
// score order takes the nearest unmatched GT within `threshold`.
inline std::vector<int> greedy_match(const std::vector<double>& scores, const Matrix& distances, double threshold) {
  std::vector<int> gt_of(scores.size(), -1);
  std::vector<char> taken(static_cast<std::size_t>(distances.cols()), 0);
  for (const std::size_t i : score_order(scores)) {
    int best = -1;
    double best_d = threshold;
    for (Eigen::Index j = 0; j < distances.cols(); ++j) {
      const double d = distances(static_cast<Eigen::Index>(i), j);
      if (taken[static_cast<std::size_t>(j)] || d > threshold) continue;
      if (best < 0 || d < best_d) {
        best = static_cast<int>(j);
        best_d = d;
      }
    }
    if (best >= 0) {
      taken[static_cast<std::size_t>(best)] = 1;
      gt_of[i] = best;
    }
  }
  return gt_of;
}

inline Matrix frechet_matrix(const std::vector<ScoredPolyline>& preds, const std::vector<Polyline>& gts, int points) {
  std::vector<Polyline> gt_r;
  gt_r.reserve(gts.size());
  for (const auto& g : gts) gt_r.push_back(resample_polyline(g, points));
  Matrix d(static_cast<Eigen::Index>(preds.size()), static_cast<Eigen::Index>(gts.size()));
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const Polyline p = resample_polyline(preds[i].line, points);
    for (std::size_t j = 0; j < gts.size(); ++j) {
      d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = discrete_frechet(p, gt_r[j]);
    }
  }
  return d;
}

inline std::vector<double> scores_of(const std::vector<ScoredPolyline>& preds) {
  std::vector<double> s;
  s.reserve(preds.size());
  for (const auto& p : preds) s.push_back(p.score);
  return s;
}

inline double ap_from_matches(const std::vector<double>& scores, const std::vector<int>& gt_of, std::size_t num_gt) {
  std::vector<bool> hits;
  for (const std::size_t i : score_order(scores)) hits.push_back(gt_of[i] >= 0);
  return average_precision(hits, num_gt);
}

struct ThresholdAp {
  double threshold = 0.0;
  double ap = 0.0;
};

struct DetResult {
  double map = 0.0;
  std::vector<ThresholdAp> per_threshold;
};

inline DetResult det_l(const std::vector<ScoredPolyline>& preds, const std::vector<Polyline>& gts,
                       const MetricConfig& cfg = {}) {
  if (!std::is_sorted(cfg.frechet_thresholds.begin(), cfg.frechet_thresholds.end()) || cfg.frechet_thresholds.empty()) {
    throw std::invalid_argument("det_l: thresholds must be non-empty and ascending");
  }
  const Matrix d = frechet_matrix(preds, gts, cfg.frechet_points);
  const auto scores = scores_of(preds);
  DetResult out;
  for (const double tau : cfg.frechet_thresholds) {
    const double ap = ap_from_matches(scores, greedy_match(scores, d, tau), gts.size());
    out.per_threshold.push_back({tau, ap});
    out.map += ap;
  }
  out.map /= static_cast<double>(cfg.frechet_thresholds.size());
  return out;
}

// Candidate edges are ordered prediction pairs with probability above the edge
// threshold, ranked by probability; a candidate is a hit when both lanes are
// matched and the GT edge between their matches exists and is not yet claimed.
inline double top_ll(const std::vector<ScoredPolyline>& preds, const Matrix& pred_adj, const std::vector<Polyline>& gts,
                     const std::vector<std::vector<int>>& gt_adj, const MetricConfig& cfg = {}) {
  const auto n = static_cast<Eigen::Index>(preds.size());
  require_dims(pred_adj.rows() == n && pred_adj.cols() == n, "top_ll: adjacency must be N_pred x N_pred");
  require_dims(gt_adj.size() == gts.size(), "top_ll: GT adjacency must be N_gt x N_gt");
  std::size_t num_gt_edges = 0;
  for (std::size_t i = 0; i < gt_adj.size(); ++i) {
    require_dims(gt_adj[i].size() == gts.size(), "top_ll: GT adjacency must be square");
    for (std::size_t j = 0; j < gt_adj[i].size(); ++j) num_gt_edges += (i != j && gt_adj[i][j] == 1) ? 1 : 0;
  }
  const auto scores = scores_of(preds);
  const auto gt_of = greedy_match(scores, frechet_matrix(preds, gts, cfg.frechet_points), cfg.topology_match_threshold);

  struct Edge {
    double prob;
    Eigen::Index i, j;
  };
  std::vector<Edge> edges;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j && pred_adj(i, j) > cfg.edge_threshold) edges.push_back({pred_adj(i, j), i, j});
    }
  }
  std::stable_sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) { return a.prob > b.prob; });
  if (num_gt_edges == 0) return edges.empty() ? 1.0 : 0.0;

  std::vector<std::vector<char>> claimed(gts.size(), std::vector<char>(gts.size(), 0));
  std::vector<bool> hits;
  for (const auto& e : edges) {
    const int gi = gt_of[static_cast<std::size_t>(e.i)];
    const int gj = gt_of[static_cast<std::size_t>(e.j)];
    bool hit = false;
    if (gi >= 0 && gj >= 0 && gt_adj[static_cast<std::size_t>(gi)][static_cast<std::size_t>(gj)] == 1 &&
        !claimed[static_cast<std::size_t>(gi)][static_cast<std::size_t>(gj)]) {
      claimed[static_cast<std::size_t>(gi)][static_cast<std::size_t>(gj)] = 1;
      hit = true;
    }
    hits.push_back(hit);
  }
  return average_precision(hits, num_gt_edges);
}

inline CellMask binarize(const InstanceMask& m) {
  CellMask out(static_cast<std::size_t>(m.logits.size()), 0);
  for (Eigen::Index i = 0; i < m.logits.size(); ++i) out[static_cast<std::size_t>(i)] = m.logits[i] >= 0.0 ? 1 : 0;
  return out;
}

inline double mask_iou(const CellMask& a, const CellMask& b) {
  require_dims(a.size() == b.size(), "mask_iou: shape mismatch");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inter += (a[i] && b[i]) ? 1 : 0;
    uni += (a[i] || b[i]) ? 1 : 0;
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// Masks are binarized at probability 0.5 (logit 0). Matching and AP follow det_l
// with 1 - IoU as the distance.
inline DetResult mask_ap(const std::vector<ScoredMask>& preds, const std::vector<CellMask>& gts,
                         const MetricConfig& cfg = {}) {
  if (cfg.iou_thresholds.empty()) throw std::invalid_argument("mask_ap: no IoU thresholds");
  Matrix dist(static_cast<Eigen::Index>(preds.size()), static_cast<Eigen::Index>(gts.size()));
  std::vector<double> scores;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    scores.push_back(preds[i].score);
    const CellMask b = binarize(preds[i].mask);
    for (std::size_t j = 0; j < gts.size(); ++j) {
      dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0 - mask_iou(b, gts[j]);
    }
  }
  DetResult out;
  for (const double t : cfg.iou_thresholds) {
    // IoU >= t  <=>  1 - IoU <= 1 - t; the small slack absorbs rounding at equality
    const double ap = ap_from_matches(scores, greedy_match(scores, dist, 1.0 - t + 1e-12), gts.size());
    out.per_threshold.push_back({t, ap});
    out.map += ap;
  }
  out.map /= static_cast<double>(cfg.iou_thresholds.size());
  return out;
}

struct EvalReport {
  DetResult det;
  double top_ll = 0.0;
  std::optional<DetResult> ap;  // only when instance masks are evaluated

  double det_l() const { return det.map; }
  std::optional<double> ap_l() const { return ap ? std::optional<double>(ap->map) : std::nullopt; }
};

inline nlohmann::json per_threshold_json(const DetResult& r) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& t : r.per_threshold) arr.push_back({{"threshold", t.threshold}, {"ap", t.ap}});
  return arr;
}

inline nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json j;
  j["det_l"] = r.det.map;
  j["det_l_per_threshold"] = per_threshold_json(r.det);
  j["top_ll"] = r.top_ll;
  if (r.ap) {
    j["ap_l"] = r.ap->map;
    j["ap_l_per_threshold"] = per_threshold_json(*r.ap);
  } else {
    j["ap_l"] = nullptr;
  }
  return j;
}

}  // namespace roadpainter
