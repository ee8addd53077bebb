#pragma once

#include <roadpainter/attention.hpp>
#include <roadpainter/geometry.hpp>
#include <roadpainter/points_mask.hpp>
#include <roadpainter/tensor.hpp>

#include <vector>

namespace roadpainter {

struct DecoderConfig {
  int channels = 32;
  int heads = 2;
  int sampling_points = 4;
  int layers = 2;
  int k = 11;
  int num_real = 16;
  int num_virtual = 16;
  int ffn_dim = 64;
  bool hybrid_attention = true;   // masked cross-attention branch
  bool rvs_self_attention = true; // block-separated self-attention
  bool points_guided_masks = true;
  double mask_threshold = 0.5;

  int num_queries() const { return num_real + num_virtual; }
};

struct QuerySet {
  Matrix real;  // N_R x C
  Matrix virt;  // N_V x C

  Matrix stacked() const {
    Matrix all(real.rows() + virt.rows(), real.rows() > 0 ? real.cols() : virt.cols());
    if (real.rows() > 0) all.topRows(real.rows()) = real;
    if (virt.rows() > 0) all.bottomRows(virt.rows()) = virt;
    return all;
  }

  static QuerySet split(const Matrix& all, Eigen::Index num_real) {
    return {all.topRows(num_real), all.bottomRows(all.rows() - num_real)};
  }
};

struct CenterlinePrediction {
  Polyline points;  // K points, metric
  double score = 0.0;
  bool is_real = true;
  Vector query;
};

struct DecoderLayerWeights {
  LayerNorm ln_masked;
  DeformableAttentionWeights deform;
  LayerNorm ln_deform;
  LayerNorm ln_self;
  MlpWeights ffn;
  LayerNorm ln_ffn;
};

struct DecoderWeights {
  QuerySet queries;
  Matrix init_ref_logits;  // N_L x 2, sigmoid -> normalized (x, y) in the BEV range
  std::vector<DecoderLayerWeights> layers;
  MlpWeights points_head;  // C -> K*3, shared across layers
  MlpWeights score_head;   // C -> 1
  MaskQueryEncoder mask_encoder;

  static DecoderWeights random(const DecoderConfig& cfg, int point_dim, Rng& rng) {
    const int c = cfg.channels;
    DecoderWeights w;
    w.queries.real = Matrix(cfg.num_real, c);
    w.queries.virt = Matrix(cfg.num_virtual, c);
    for (Eigen::Index i = 0; i < w.queries.real.size(); ++i) w.queries.real.data()[i] = rng.normal();
    for (Eigen::Index i = 0; i < w.queries.virt.size(); ++i) w.queries.virt.data()[i] = rng.normal();
    w.init_ref_logits = Matrix(cfg.num_queries(), 2);
    for (Eigen::Index i = 0; i < w.init_ref_logits.size(); ++i) w.init_ref_logits.data()[i] = rng.normal();
    for (int l = 0; l < cfg.layers; ++l) {
      w.layers.push_back({LayerNorm::identity(c), DeformableAttentionWeights::random(c, cfg.heads, cfg.sampling_points, rng),
                          LayerNorm::identity(c), LayerNorm::identity(c),
                          MlpWeights::random({c, cfg.ffn_dim, c}, rng), LayerNorm::identity(c)});
    }
    w.points_head = MlpWeights::random({c, c, cfg.k * 3}, rng);
    w.score_head = MlpWeights::random({c, c, 1}, rng);
    w.mask_encoder = MaskQueryEncoder::random(c, cfg.k, point_dim, rng);
    return w;
  }
};

// sigmoid-normalized head output -> metric K x 3 polyline
inline Polyline decode_points(const Vector& head_out, int k) {
  require_dims(head_out.size() == 3 * k, "decode_points: head output must be K*3");
  std::vector<Point3> pts(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    pts[static_cast<std::size_t>(i)] = Point3(kXMin + (kXMax - kXMin) * sigmoid(head_out[3 * i]),
                                              kYMin + (kYMax - kYMin) * sigmoid(head_out[3 * i + 1]),
                                              kZMin + (kZMax - kZMin) * sigmoid(head_out[3 * i + 2]));
  }
  return Polyline(std::move(pts));
}

// Inverse of decode_points for points strictly inside the BEV range.
inline Vector encode_points(const Polyline& line) {
  Vector out(3 * static_cast<Eigen::Index>(line.size()));
  for (std::size_t i = 0; i < line.size(); ++i) {
    const auto j = static_cast<Eigen::Index>(i);
    out[3 * j] = logit((line[i].x() - kXMin) / (kXMax - kXMin));
    out[3 * j + 1] = logit((line[i].y() - kYMin) / (kYMax - kYMin));
    out[3 * j + 2] = logit((line[i].z() - kZMin) / (kZMax - kZMin));
  }
  return out;
}

inline std::vector<Polyline> predict_points(const Matrix& queries, const MlpWeights& head, int k) {
  const Matrix out = mlp_forward_rows(head, queries);
  std::vector<Polyline> lines;
  lines.reserve(static_cast<std::size_t>(out.rows()));
  for (Eigen::Index i = 0; i < out.rows(); ++i) lines.push_back(decode_points(out.row(i).transpose(), k));
  return lines;
}

// Sampling point p references polyline point round(p*(K-1)/(P-1)); a single
// sampling point uses the middle point.
inline ReferencePoints references_from_points(const std::vector<Polyline>& lines, const GridSpec& spec, int points) {
  ReferencePoints refs(static_cast<Eigen::Index>(lines.size()), 2 * points);
  for (std::size_t q = 0; q < lines.size(); ++q) {
    const auto k = static_cast<int>(lines[q].size());
    for (int p = 0; p < points; ++p) {
      const int idx = points == 1 ? (k - 1) / 2 : static_cast<int>(std::lround(p * (k - 1.0) / (points - 1.0)));
      const auto& pt = lines[q][static_cast<std::size_t>(idx)];
      refs(static_cast<Eigen::Index>(q), 2 * p) = spec.row_of_y(pt.y());
      refs(static_cast<Eigen::Index>(q), 2 * p + 1) = spec.col_of_x(pt.x());
    }
  }
  return refs;
}

inline ReferencePoints initial_references(const Matrix& init_ref_logits, const GridSpec& spec, int points) {
  Matrix single(init_ref_logits.rows(), 2);
  for (Eigen::Index q = 0; q < init_ref_logits.rows(); ++q) {
    const double x = kXMin + (kXMax - kXMin) * sigmoid(init_ref_logits(q, 0));
    const double y = kYMin + (kYMax - kYMin) * sigmoid(init_ref_logits(q, 1));
    single(q, 0) = spec.row_of_y(y);
    single(q, 1) = spec.col_of_x(x);
  }
  return broadcast_references(single, points);
}

inline std::vector<InstanceMask> instance_masks(const BevGrid& bev, const Matrix& queries,
                                                const std::vector<Polyline>& lines, const MaskQueryEncoder& enc,
                                                bool points_guided) {
  std::vector<InstanceMask> masks;
  masks.reserve(static_cast<std::size_t>(queries.rows()));
  for (Eigen::Index i = 0; i < queries.rows(); ++i) {
    const Vector q = queries.row(i).transpose();
    const Vector qp = points_guided ? encode_mask_query(q, lines[static_cast<std::size_t>(i)], enc)
                                    : position_free_mask_query(q, enc);
    masks.push_back(generate_mask(bev, qp));
  }
  return masks;
}

// One hybrid layer: masked cross -> deformable cross -> RVS self -> FFN.
// An empty `mask` attends everywhere.
inline Matrix decoder_layer(const Matrix& queries, Eigen::Index num_real, const BevGrid& bev, const AttentionMask& mask,
                            const ReferencePoints& refs, const DecoderLayerWeights& w, const DecoderConfig& cfg) {
  Matrix q = queries;
  if (cfg.hybrid_attention) q = masked_cross_attention(q, bev, mask, w.ln_masked);
  q = deformable_cross_attention(q, refs, bev, w.deform, w.ln_deform);
  auto [real, virt] = rvs_self_attention(q.topRows(num_real), q.bottomRows(q.rows() - num_real), w.ln_self,
                                         cfg.rvs_self_attention);
  if (num_real > 0) q.topRows(num_real) = real;
  if (q.rows() - num_real > 0) q.bottomRows(q.rows() - num_real) = virt;
  return layer_norm_rows(q + mlp_forward_rows(w.ffn, q), w.ln_ffn);
}

struct DecoderOutput {
  std::vector<CenterlinePrediction> predictions;  // real first, then virtual
  QuerySet final_queries;
};

inline DecoderOutput decoder_forward(const QuerySet& qs, const BevGrid& bev, const DecoderWeights& w,
                                     const DecoderConfig& cfg) {
  if (cfg.layers < 1) throw std::invalid_argument("decoder_forward: layers must be >= 1");
  require_dims(static_cast<int>(w.layers.size()) >= cfg.layers, "decoder_forward: not enough layer weights");
  require_dims(bev.channels() == cfg.channels, "decoder_forward: BEV channel mismatch");
  require_dims(qs.real.rows() == cfg.num_real && qs.virt.rows() == cfg.num_virtual, "decoder_forward: query counts");
  require_dims(w.init_ref_logits.rows() == cfg.num_queries(), "decoder_forward: initial reference count");

  const Eigen::Index num_real = cfg.num_real;
  Matrix q = qs.stacked();
  require_dims(q.cols() == cfg.channels, "decoder_forward: query channel mismatch");
  ReferencePoints refs = initial_references(w.init_ref_logits, bev.spec(), cfg.sampling_points);
  AttentionMask mask;
  std::vector<Polyline> lines;
  for (int l = 0; l < cfg.layers; ++l) {
    q = decoder_layer(q, num_real, bev, mask, refs, w.layers[static_cast<std::size_t>(l)], cfg);
    lines = predict_points(q, w.points_head, cfg.k);
    if (l + 1 < cfg.layers) {
      refs = references_from_points(lines, bev.spec(), cfg.sampling_points);
      if (cfg.hybrid_attention) {
        mask = attention_mask_from_instance_masks(
            instance_masks(bev, q, lines, w.mask_encoder, cfg.points_guided_masks), cfg.mask_threshold);
      }
    }
  }

  const Matrix scores = mlp_forward_rows(w.score_head, q);
  DecoderOutput out;
  out.final_queries = QuerySet::split(q, num_real);
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    out.predictions.push_back({lines[static_cast<std::size_t>(i)], sigmoid(scores(i, 0)), i < num_real,
                               q.row(i).transpose()});
  }
  return out;
}

}  // namespace roadpainter
