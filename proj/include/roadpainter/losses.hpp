#pragma once

#include <roadpainter/core.hpp>
#include <roadpainter/tensor.hpp>

#include <algorithm>
#include <cmath>

namespace roadpainter {

inline constexpr double kProbEps = 1e-7;

inline double clamp_prob(double p) { return std::clamp(p, kProbEps, 1.0 - kProbEps); }

struct FocalParams {
  double alpha = 0.25;
  double gamma = 2.0;
};

// y=1: -a (1-p)^g log p ; y=0: -(1-a) p^g log(1-p)
inline double focal_loss(double p, int y, const FocalParams& fp = {}) {
  p = clamp_prob(p);
  if (y == 1) return -fp.alpha * std::pow(1.0 - p, fp.gamma) * std::log(p);
  return -(1.0 - fp.alpha) * std::pow(p, fp.gamma) * std::log(1.0 - p);
}

inline double focal_grad(double p, int y, const FocalParams& fp = {}) {
  const double a = fp.alpha;
  const double g = fp.gamma;
  if (y == 1) return a * (g * std::pow(1.0 - p, g - 1.0) * std::log(p) - std::pow(1.0 - p, g) / p);
  return -(1.0 - a) * (g * std::pow(p, g - 1.0) * std::log(1.0 - p) - std::pow(p, g) / (1.0 - p));
}

// Classification cost used for matching: positive minus negative focal term.
inline double focal_matching_cost(double p, const FocalParams& fp = {}) {
  return focal_loss(p, 1, fp) - focal_loss(p, 0, fp);
}

inline double focal_mean(const Vector& probs, const Vector& targets, const FocalParams& fp = {}) {
  require_dims(probs.size() == targets.size(), "focal_mean: shape mismatch");
  if (probs.size() == 0) return 0.0;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) acc += focal_loss(probs[i], targets[i] > 0.5 ? 1 : 0, fp);
  return acc / static_cast<double>(probs.size());
}

inline double l1_loss(const Vector& pred, const Vector& target) {
  require_dims(pred.size() == target.size(), "l1_loss: shape mismatch");
  if (pred.size() == 0) return 0.0;
  return (pred - target).cwiseAbs().sum() / static_cast<double>(pred.size());
}

inline Vector l1_grad(const Vector& pred, const Vector& target) {
  const double n = static_cast<double>(pred.size());
  return (pred - target).unaryExpr([n](double d) { return (d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0)) / n; });
}

inline double bce_loss(const Vector& pred, const Vector& target) {
  require_dims(pred.size() == target.size(), "bce_loss: shape mismatch");
  if (pred.size() == 0) return 0.0;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    const double p = clamp_prob(pred[i]);
    acc -= target[i] * std::log(p) + (1.0 - target[i]) * std::log(1.0 - p);
  }
  return acc / static_cast<double>(pred.size());
}

inline Vector bce_grad(const Vector& pred, const Vector& target) {
  const double n = static_cast<double>(pred.size());
  Vector g(pred.size());
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    g[i] = (-target[i] / pred[i] + (1.0 - target[i]) / (1.0 - pred[i])) / n;
  }
  return g;
}

enum class ElementwiseKind { kL1, kBce };

inline double elementwise_losses(const Vector& pred, const Vector& target, ElementwiseKind kind) {
  return kind == ElementwiseKind::kL1 ? l1_loss(pred, target) : bce_loss(pred, target);
}

inline constexpr double kDiceSmooth = 1.0;

inline double dice_loss(const Vector& pred, const Vector& gt) {
  require_dims(pred.size() == gt.size(), "dice_loss: shape mismatch");
  const double inter = pred.dot(gt);
  return 1.0 - (2.0 * inter + kDiceSmooth) / (pred.sum() + gt.sum() + kDiceSmooth);
}

inline Vector dice_grad(const Vector& pred, const Vector& gt) {
  const double num = 2.0 * pred.dot(gt) + kDiceSmooth;
  const double den = pred.sum() + gt.sum() + kDiceSmooth;
  return ((2.0 * gt.array() * den - num) / (-den * den)).matrix();
}

// Expected index under softmax(logits).
inline double softargmax(const Vector& logits) {
  const Vector p = softmax(logits);
  double c = 0.0;
  for (Eigen::Index r = 0; r < p.size(); ++r) c += r * p[r];
  return c;
}

// d c / d z_j = p_j (j - c)
inline Vector softargmax_grad(const Vector& logits) {
  const Vector p = softmax(logits);
  double c = 0.0;
  for (Eigen::Index r = 0; r < p.size(); ++r) c += r * p[r];
  Vector g(p.size());
  for (Eigen::Index j = 0; j < p.size(); ++j) g[j] = p[j] * (static_cast<double>(j) - c);
  return g;
}

enum class GradTerm { kFocal, kBce, kL1, kDice, kSoftargmax };

// focal: inputs = [p], targets = [y]; softargmax: inputs = logits, targets unused.
struct GradCheckPoint {
  Vector inputs;
  Vector targets;
  FocalParams focal;
};

// Max over coordinates of |analytic - numeric| / max(|analytic|, |numeric|, floor),
// floor = max(1e-8, 1e-3 * max|analytic|) so vanishing components do not
// amplify finite-difference round-off.
inline double analytic_grad_check(GradTerm term, const GradCheckPoint& pt, double eps = 1e-6) {
  ScalarFn f;
  Vector analytic;
  switch (term) {
    case GradTerm::kFocal: {
      const int y = pt.targets[0] > 0.5 ? 1 : 0;
      f = [&, y](const Vector& x) { return focal_loss(x[0], y, pt.focal); };
      analytic = Vector::Constant(1, focal_grad(pt.inputs[0], y, pt.focal));
      break;
    }
    case GradTerm::kBce:
      f = [&](const Vector& x) { return bce_loss(x, pt.targets); };
      analytic = bce_grad(pt.inputs, pt.targets);
      break;
    case GradTerm::kL1:
      f = [&](const Vector& x) { return l1_loss(x, pt.targets); };
      analytic = l1_grad(pt.inputs, pt.targets);
      break;
    case GradTerm::kDice:
      f = [&](const Vector& x) { return dice_loss(x, pt.targets); };
      analytic = dice_grad(pt.inputs, pt.targets);
      break;
    case GradTerm::kSoftargmax:
      f = [](const Vector& x) { return softargmax(x); };
      analytic = softargmax_grad(pt.inputs);
      break;
  }
  const Vector numeric = finite_diff_grad(f, pt.inputs, eps);
  const double scale_floor = std::max(1e-8, 1e-3 * analytic.cwiseAbs().maxCoeff());
  double worst = 0.0;
  for (Eigen::Index i = 0; i < numeric.size(); ++i) {
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), scale_floor});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
  }
  return worst;
}

}  // namespace roadpainter
