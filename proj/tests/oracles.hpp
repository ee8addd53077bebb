#pragma once

// Independent reference implementations used as test oracles. Written with
// plain loops and std containers; nothing here calls the library's numerics.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace oracle {

using Pt = std::array<double, 3>;
using Line = std::vector<Pt>;

inline double dist(const Pt& a, const Pt& b) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Min over all monotone couplings of the max pairwise distance, by explicit
// enumeration of lattice paths from (0,0) to (n-1,m-1).
inline double frechet_enumerate(const Line& a, const Line& b) {
  double best = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t i, std::size_t j, double worst) {
    worst = std::max(worst, dist(a[i], b[j]));
    if (worst >= best) return;
    if (i + 1 == a.size() && j + 1 == b.size()) {
      best = worst;
      return;
    }
    if (i + 1 < a.size()) walk(i + 1, j, worst);
    if (j + 1 < b.size()) walk(i, j + 1, worst);
    if (i + 1 < a.size() && j + 1 < b.size()) walk(i + 1, j + 1, worst);
  };
  walk(0, 0, 0.0);
  return best;
}

// Minimum over all injective maps of the smaller side into the larger.
inline double assignment_enumerate(const std::vector<std::vector<double>>& c) {
  const std::size_t n = c.size();
  const std::size_t m = n ? c[0].size() : 0;
  if (n == 0 || m == 0) return 0.0;
  const bool rows_small = n <= m;
  const std::size_t small = rows_small ? n : m;
  const std::size_t large = rows_small ? m : n;
  std::vector<std::size_t> perm(large);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < small; ++i) s += rows_small ? c[i][perm[i]] : c[perm[i]][i];
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

inline std::vector<double> softmax(const std::vector<double>& v) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : v) mx = std::max(mx, x);
  std::vector<double> e(v.size());
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    e[i] = std::exp(v[i] - mx);
    s += e[i];
  }
  for (double& x : e) x /= s;
  return e;
}

inline double soft_argmax(const std::vector<double>& logits) {
  const auto p = softmax(logits);
  double c = 0.0;
  for (std::size_t r = 0; r < p.size(); ++r) c += static_cast<double>(r) * p[r];
  return c;
}

// All-point interpolated AP from a hand-listed hit sequence.
inline double ap_from_hits(const std::vector<int>& hits, int num_gt) {
  if (num_gt == 0) return hits.empty() ? 1.0 : 0.0;
  std::vector<double> prec, rec;
  int tp = 0;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    tp += hits[i];
    prec.push_back(static_cast<double>(tp) / static_cast<double>(i + 1));
    rec.push_back(static_cast<double>(tp) / num_gt);
  }
  double ap = 0.0;
  double prev = 0.0;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    double best = 0.0;
    for (std::size_t k = i; k < hits.size(); ++k) best = std::max(best, prec[k]);
    ap += (rec[i] - prev) * best;
    prev = rec[i];
  }
  return ap;
}

inline double focal(double p, int y, double alpha = 0.25, double gamma = 2.0) {
  p = std::min(std::max(p, 1e-7), 1.0 - 1e-7);
  return y == 1 ? -alpha * std::pow(1.0 - p, gamma) * std::log(p)
                : -(1.0 - alpha) * std::pow(p, gamma) * std::log(1.0 - p);
}

inline double bce(double p, double y) {
  p = std::min(std::max(p, 1e-7), 1.0 - 1e-7);
  return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
}

}  // namespace oracle
