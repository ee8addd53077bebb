#pragma once

#include <roadpainter/attention.hpp>
#include <roadpainter/geometry.hpp>
#include <roadpainter/raster.hpp>
#include <roadpainter/tensor.hpp>

#include <vector>

namespace roadpainter {

struct SdMapInstance {
  Polyline polyline;
  int semantic_type = 1;  // 1..N_M
};

// Row 0 is the default (unoccupied) embedding; row t is the embedding of type t.
struct SemanticEmbeddingTable {
  Matrix embeddings;

  int num_types() const { return static_cast<int>(embeddings.rows()) - 1; }
  int channels() const { return static_cast<int>(embeddings.cols()); }
};

// E_S: each cell touched by an instance holds that instance's type embedding,
// lowest instance index first; untouched cells hold the default embedding.
inline BevGrid rasterize_sdmap(const std::vector<SdMapInstance>& instances, const GridSpec& spec,
                               const SemanticEmbeddingTable& table) {
  std::vector<int> owner(static_cast<std::size_t>(spec.cells()), -1);
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const int type = instances[i].semantic_type;
    if (type < 1 || type > table.num_types()) throw std::invalid_argument("rasterize_sdmap: semantic type out of range");
    const CellMask cells = rasterize_polyline(spec, instances[i].polyline);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (cells[c] && owner[c] < 0) owner[c] = static_cast<int>(i);
    }
  }
  BevGrid out(spec, table.channels());
  for (std::size_t c = 0; c < owner.size(); ++c) {
    const int row = owner[c] < 0 ? 0 : instances[static_cast<std::size_t>(owner[c])].semantic_type;
    out.data().row(static_cast<Eigen::Index>(c)) = table.embeddings.row(row);
  }
  return out;
}

struct SdInteractionLayer {
  LayerNorm ln_self;
  DeformableAttentionWeights self_attn;
  LayerNorm ln_cross;
  DeformableAttentionWeights cross_attn;
  LayerNorm ln_ffn;
  MlpWeights ffn;
};

struct SdInteractionWeights {
  SemanticEmbeddingTable table;
  std::vector<SdInteractionLayer> layers;

  static SdInteractionWeights zeros(int channels, int num_types, int layers, int heads, int points, int ffn_dim) {
    SdInteractionWeights w;
    w.table.embeddings = Matrix::Zero(num_types + 1, channels);
    for (int l = 0; l < layers; ++l) {
      w.layers.push_back({LayerNorm::identity(channels), DeformableAttentionWeights::zeros(channels, heads, points),
                          LayerNorm::identity(channels), DeformableAttentionWeights::zeros(channels, heads, points),
                          LayerNorm::identity(channels), MlpWeights::zeros({channels, ffn_dim, channels})});
    }
    return w;
  }

  static SdInteractionWeights random(int channels, int num_types, int layers, int heads, int points, int ffn_dim,
                                     Rng& rng) {
    SdInteractionWeights w;
    w.table.embeddings = Matrix(num_types + 1, channels);
    for (Eigen::Index i = 0; i < w.table.embeddings.size(); ++i) w.table.embeddings.data()[i] = rng.normal();
    for (int l = 0; l < layers; ++l) {
      w.layers.push_back({LayerNorm::identity(channels), DeformableAttentionWeights::random(channels, heads, points, rng),
                          LayerNorm::identity(channels), DeformableAttentionWeights::random(channels, heads, points, rng),
                          LayerNorm::identity(channels), MlpWeights::random({channels, ffn_dim, channels}, rng)});
    }
    return w;
  }
};

inline ReferencePoints own_cell_references(const GridSpec& spec, int points) {
  Matrix single(spec.cells(), 2);
  for (int r = 0; r < spec.rows; ++r) {
    for (int c = 0; c < spec.cols; ++c) {
      single(r * spec.cols + c, 0) = r;
      single(r * spec.cols + c, 1) = c;
    }
  }
  return broadcast_references(single, points);
}

// B_hat = TrDec(B, E_S + E_P). Pre-norm residual blocks, so all-zero output
// projections reproduce B exactly. Queries are the B cells, referenced at
// their own cell centers.
inline BevGrid sd_interact(const BevGrid& bev, const BevGrid& semantic, const BevGrid& positional,
                           const SdInteractionWeights& w) {
  require_dims(bev.same_shape(semantic) && bev.same_shape(positional), "sd_interact: grid shape mismatch");
  const BevGrid memory(bev.spec(), Matrix(semantic.data() + positional.data()));
  Matrix x = bev.data();
  for (const auto& layer : w.layers) {
    const auto refs_self = own_cell_references(bev.spec(), layer.self_attn.points);
    Matrix xn = layer_norm_rows(x, layer.ln_self);
    const BevGrid normed(bev.spec(), xn);
    x += deformable_attend(xn, refs_self, normed, layer.self_attn);

    const auto refs_cross = own_cell_references(bev.spec(), layer.cross_attn.points);
    xn = layer_norm_rows(x, layer.ln_cross);
    x += deformable_attend(xn, refs_cross, memory, layer.cross_attn);

    x += mlp_forward_rows(layer.ffn, layer_norm_rows(x, layer.ln_ffn));
  }
  return BevGrid(bev.spec(), std::move(x));
}

}  // namespace roadpainter
