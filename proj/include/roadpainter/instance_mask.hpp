#pragma once

#include <roadpainter/core.hpp>

namespace roadpainter {

// Per-instance H x W logits over the BEV grid, row-major (row*W + col).
struct InstanceMask {
  int rows = 0;
  int cols = 0;
  Vector logits;

  InstanceMask() = default;
  InstanceMask(int h, int w) : rows(h), cols(w), logits(Vector::Zero(static_cast<Eigen::Index>(h) * w)) {}
  InstanceMask(int h, int w, Vector values) : rows(h), cols(w), logits(std::move(values)) {
    require_dims(logits.size() == static_cast<Eigen::Index>(h) * w, "InstanceMask: size != H*W");
  }

  double& at(int r, int c) { return logits[static_cast<Eigen::Index>(r) * cols + c]; }
  double at(int r, int c) const { return logits[static_cast<Eigen::Index>(r) * cols + c]; }

  Vector probabilities() const { return logits.unaryExpr([](double x) { return sigmoid(x); }); }
};

}  // namespace roadpainter
