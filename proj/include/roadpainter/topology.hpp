#pragma once

#include <roadpainter/geometry.hpp>
#include <roadpainter/tensor.hpp>

#include <vector>

namespace roadpainter {

// Entry (i, j): probability that lane i's end flows into lane j's start.
using TopologyMatrix = Matrix;

struct TopologyHeadWeights {
  MlpWeights query_mlp;     // psi1: C -> C
  MlpWeights geometry_mlp;  // psi2: K*3 -> C
  MlpWeights classifier;    // 2C -> ... -> 1

  static TopologyHeadWeights random(int channels, int k, Rng& rng) {
    return {MlpWeights::random({channels, channels}, rng), MlpWeights::random({k * 3, channels, channels}, rng),
            MlpWeights::random({2 * channels, channels, 1}, rng)};
  }
};

inline Vector flatten_points(const Polyline& line) {
  Vector flat(3 * static_cast<Eigen::Index>(line.size()));
  for (std::size_t i = 0; i < line.size(); ++i) flat.segment<3>(3 * static_cast<Eigen::Index>(i)) = line[i];
  return flat;
}

// E_i = psi1(Q_i) + psi2(flatten(l_i)), flattening point by point (x, y, z).
inline Matrix enhance_queries(const Matrix& queries, const std::vector<Polyline>& lines, const MlpWeights& psi1,
                              const MlpWeights& psi2) {
  require_dims(static_cast<Eigen::Index>(lines.size()) == queries.rows(), "enhance_queries: one polyline per query");
  Matrix geo(queries.rows(), psi2.input_dim());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    require_dims(3 * static_cast<int>(lines[i].size()) == psi2.input_dim(), "enhance_queries: polyline length != K");
    geo.row(static_cast<Eigen::Index>(i)) = flatten_points(lines[i]).transpose();
  }
  const Matrix e = mlp_forward_rows(psi1, queries) + mlp_forward_rows(psi2, geo);
  return e;
}

// A(i, j) = sigmoid(classifier([E_i, E_j])).
inline TopologyMatrix predict_topology(const Matrix& enhanced, const MlpWeights& classifier) {
  const Eigen::Index n = enhanced.rows();
  const Eigen::Index c = enhanced.cols();
  require_dims(classifier.input_dim() == 2 * c && classifier.output_dim() == 1, "predict_topology: classifier must map 2C -> 1");
  // first layer splits into source and target halves, so pairs share work
  const auto& first = classifier.layers.front();
  const Matrix src = enhanced * first.weight.leftCols(c).transpose();
  const Matrix dst = enhanced * first.weight.rightCols(c).transpose();
  TopologyMatrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      Vector h = src.row(i).transpose() + dst.row(j).transpose() + first.bias;
      if (first.activation == Activation::kRelu) h = h.cwiseMax(0.0);
      for (std::size_t l = 1; l < classifier.layers.size(); ++l) {
        const auto& layer = classifier.layers[l];
        h = layer.weight * h + layer.bias;
        if (layer.activation == Activation::kRelu) h = h.cwiseMax(0.0);
      }
      out(i, j) = sigmoid(h[0]);
    }
  }
  return out;
}

}  // namespace roadpainter
