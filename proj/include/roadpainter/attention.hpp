#pragma once

#include <roadpainter/core.hpp>
#include <roadpainter/instance_mask.hpp>
#include <roadpainter/tensor.hpp>

#include <utility>
#include <vector>

namespace roadpainter {

// N x (H*W) additive mask with entries in {0, -inf}.
using AttentionMask = Matrix;

// Pre-residual masked cross-attention: softmax(M + Q B^T) B.
// An empty mask means "attend everywhere".
inline Matrix cross_attend(const Matrix& queries, const BevGrid& bev, const AttentionMask& mask) {
  require_dims(queries.cols() == bev.channels(), "cross_attend: channel mismatch");
  Matrix scores = queries * bev.data().transpose();
  if (mask.size() != 0) {
    require_dims(mask.rows() == queries.rows() && mask.cols() == bev.data().rows(), "cross_attend: mask shape");
    scores += mask;
  }
  softmax_rows_inplace(scores);
  return scores * bev.data();
}

inline Matrix masked_cross_attention(const Matrix& queries, const BevGrid& bev, const AttentionMask& mask,
                                     const LayerNorm& ln) {
  return layer_norm_rows(queries + cross_attend(queries, bev, mask), ln);
}

// sigmoid(logit) >= threshold -> 0, else -inf. Rows that would be fully
// masked fall back to all zeros.
inline AttentionMask attention_mask_from_instance_masks(const std::vector<InstanceMask>& masks, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw std::invalid_argument("attention mask threshold must be in (0,1)");
  if (masks.empty()) return AttentionMask();
  const auto cells = masks.front().logits.size();
  AttentionMask out(static_cast<Eigen::Index>(masks.size()), cells);
  for (std::size_t i = 0; i < masks.size(); ++i) {
    require_dims(masks[i].logits.size() == cells, "attention mask: inconsistent mask sizes");
    bool any_open = false;
    for (Eigen::Index c = 0; c < cells; ++c) {
      const bool open = sigmoid(masks[i].logits[c]) >= threshold;
      out(static_cast<Eigen::Index>(i), c) = open ? 0.0 : kNegInf;
      any_open = any_open || open;
    }
    if (!any_open) out.row(static_cast<Eigen::Index>(i)).setZero();
  }
  return out;
}

// Row-stochastic attention weights over [Q^r; Q^v] with scores scaled by
// 1/sqrt(C). With `separate`, real rows see only real columns.
inline Matrix rvs_attention_weights(const Matrix& real, const Matrix& virt, bool separate = true) {
  require_dims(real.cols() == virt.cols() || real.rows() == 0 || virt.rows() == 0, "rvs: channel mismatch");
  const Eigen::Index nr = real.rows();
  const Eigen::Index nv = virt.rows();
  const Eigen::Index c = nr > 0 ? real.cols() : virt.cols();
  const double scale = 1.0 / std::sqrt(static_cast<double>(c));
  Matrix all(nr + nv, c);
  if (nr > 0) all.topRows(nr) = real;
  if (nv > 0) all.bottomRows(nv) = virt;

  Matrix weights = Matrix::Zero(nr + nv, nr + nv);
  for (Eigen::Index i = 0; i < nr + nv; ++i) {
    const bool real_row = i < nr;
    const Eigen::Index visible = (separate && real_row) ? nr : nr + nv;
    Vector scores(visible);
    for (Eigen::Index j = 0; j < visible; ++j) scores[j] = all.row(i).dot(all.row(j)) * scale;
    weights.row(i).head(visible) = softmax(scores).transpose();
  }
  return weights;
}

// Returns (updated real, updated virtual) after residual + layer norm.
inline std::pair<Matrix, Matrix> rvs_self_attention(const Matrix& real, const Matrix& virt, const LayerNorm& ln,
                                                    bool separate = true) {
  const Eigen::Index nr = real.rows();
  const Eigen::Index nv = virt.rows();
  const Matrix weights = rvs_attention_weights(real, virt, separate);
  const Eigen::Index c = nr > 0 ? real.cols() : virt.cols();

  Matrix real_out(nr, c);
  if (nr > 0) {
    // real rows read only the real block
    const Matrix attended = separate ? Matrix(weights.topLeftCorner(nr, nr) * real)
                                     : Matrix(weights.topLeftCorner(nr, nr) * real +
                                              (nv > 0 ? Matrix(weights.topRightCorner(nr, nv) * virt)
                                                      : Matrix::Zero(nr, c)));
    real_out = layer_norm_rows(real + attended, ln);
  }
  Matrix virt_out(nv, c);
  if (nv > 0) {
    Matrix attended = weights.bottomRightCorner(nv, nv) * virt;
    if (nr > 0) attended += weights.bottomLeftCorner(nv, nr) * real;
    virt_out = layer_norm_rows(virt + attended, ln);
  }
  return {std::move(real_out), std::move(virt_out)};
}

struct DeformableAttentionWeights {
  int heads = 1;
  int points = 1;
  Matrix offset_w;  // (heads*points*2) x C, pairs (d_row, d_col) in cells
  Vector offset_b;
  Matrix attn_w;    // (heads*points) x C
  Vector attn_b;
  Matrix value_w;   // C x C
  Vector value_b;
  Matrix out_w;     // C x C
  Vector out_b;

  int channels() const { return static_cast<int>(value_w.cols()); }

  static DeformableAttentionWeights zeros(int channels, int heads, int points) {
    if (heads <= 0 || points <= 0 || channels % heads != 0) throw DimensionError("deformable attention: C % heads != 0");
    DeformableAttentionWeights w;
    w.heads = heads;
    w.points = points;
    w.offset_w = Matrix::Zero(heads * points * 2, channels);
    w.offset_b = Vector::Zero(heads * points * 2);
    w.attn_w = Matrix::Zero(heads * points, channels);
    w.attn_b = Vector::Zero(heads * points);
    w.value_w = Matrix::Zero(channels, channels);
    w.value_b = Vector::Zero(channels);
    w.out_w = Matrix::Zero(channels, channels);
    w.out_b = Vector::Zero(channels);
    return w;
  }

  // Offsets start on a small ring around the reference so sampling points differ.
  static DeformableAttentionWeights random(int channels, int heads, int points, Rng& rng) {
    auto w = zeros(channels, heads, points);
    const double b = 1.0 / std::sqrt(static_cast<double>(channels));
    auto fill = [&](Matrix& m, double scale) {
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-scale, scale);
    };
    fill(w.offset_w, 0.1 * b);
    fill(w.attn_w, b);
    fill(w.value_w, b);
    fill(w.out_w, b);
    for (int h = 0; h < heads; ++h) {
      for (int p = 0; p < points; ++p) {
        const double angle = 2.0 * std::numbers::pi * (h * points + p) / (heads * points);
        const double radius = 1.0 + p;
        w.offset_b[(h * points + p) * 2] = radius * std::sin(angle);
        w.offset_b[(h * points + p) * 2 + 1] = radius * std::cos(angle);
      }
    }
    return w;
  }
};

// Per query, one (row, col) reference per sampling point: N x (2*points).
using ReferencePoints = Matrix;

inline ReferencePoints broadcast_references(const Matrix& single, int points) {
  require_dims(single.cols() == 2, "broadcast_references: expects N x 2");
  ReferencePoints refs(single.rows(), 2 * points);
  for (int p = 0; p < points; ++p) refs.middleCols(2 * p, 2) = single;
  return refs;
}

// Pre-residual deformable attention: per head, softmax over sampling points
// of bilinear samples of the value-projected grid, then output projection.
inline Matrix deformable_attend(const Matrix& queries, const ReferencePoints& refs, const BevGrid& source,
                                const DeformableAttentionWeights& w) {
  const int c = source.channels();
  require_dims(queries.cols() == c && w.channels() == c, "deformable_attend: channel mismatch");
  require_dims(refs.rows() == queries.rows() && refs.cols() == 2 * w.points, "deformable_attend: reference shape");
  const int head_dim = c / w.heads;

  Matrix values = source.data() * w.value_w.transpose();
  values.rowwise() += w.value_b.transpose();
  const BevGrid value_grid(source.spec(), std::move(values));

  const Matrix offsets = (queries * w.offset_w.transpose()).rowwise() + w.offset_b.transpose();
  const Matrix logits = (queries * w.attn_w.transpose()).rowwise() + w.attn_b.transpose();

  Matrix gathered = Matrix::Zero(queries.rows(), c);
  std::vector<double> sample(static_cast<std::size_t>(head_dim));
  for (Eigen::Index q = 0; q < queries.rows(); ++q) {
    for (int h = 0; h < w.heads; ++h) {
      const Vector weights = softmax(logits.row(q).segment(h * w.points, w.points).transpose());
      for (int p = 0; p < w.points; ++p) {
        const int k = h * w.points + p;
        const double row = refs(q, 2 * p) + offsets(q, 2 * k);
        const double col = refs(q, 2 * p + 1) + offsets(q, 2 * k + 1);
        bilinear_sample_into(value_grid, row, col, h * head_dim, sample);
        for (int d = 0; d < head_dim; ++d) gathered(q, h * head_dim + d) += weights[p] * sample[static_cast<std::size_t>(d)];
      }
    }
  }
  Matrix out = gathered * w.out_w.transpose();
  out.rowwise() += w.out_b.transpose();
  return out;
}

inline Matrix deformable_cross_attention(const Matrix& queries, const ReferencePoints& refs, const BevGrid& source,
                                         const DeformableAttentionWeights& w, const LayerNorm& ln) {
  return layer_norm_rows(queries + deformable_attend(queries, refs, source, w), ln);
}

}  // namespace roadpainter
