#pragma once

#include <roadpainter/decoder.hpp>
#include <roadpainter/geometry.hpp>
#include <roadpainter/losses.hpp>

#include <algorithm>
#include <utility>
#include <vector>

namespace roadpainter {

struct Assignment {
  std::vector<std::pair<int, int>> pairs;  // (prediction, ground truth), ascending prediction index
  std::vector<int> unmatched;              // prediction indices
  double cost = 0.0;

  // ground-truth index per prediction, -1 when unmatched
  std::vector<int> gt_of_prediction(int num_predictions) const {
    std::vector<int> out(static_cast<std::size_t>(num_predictions), -1);
    for (const auto& [p, g] : pairs) out[static_cast<std::size_t>(p)] = g;
    return out;
  }
};

namespace detail {

// Shortest augmenting path Hungarian with potentials; requires rows <= cols.
// Returns the column assigned to each row.
inline std::vector<int> hungarian_rows(const Matrix& a) {
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(a.cols());
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0), v(static_cast<std::size_t>(m) + 1, 0.0);
  std::vector<int> p(static_cast<std::size_t>(m) + 1, 0), way(static_cast<std::size_t>(m) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(m) + 1, inf);
    std::vector<char> used(static_cast<std::size_t>(m) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = a(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> col_of_row(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= m; ++j) {
    if (p[static_cast<std::size_t>(j)] != 0) col_of_row[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
  }
  return col_of_row;
}

inline double optimal_cost(const Matrix& a) {
  if (a.rows() == 0 || a.cols() == 0) return 0.0;
  const bool transpose = a.rows() > a.cols();
  const Matrix work = transpose ? Matrix(a.transpose()) : a;
  const auto cols = hungarian_rows(work);
  double total = 0.0;
  for (std::size_t i = 0; i < cols.size(); ++i) total += work(static_cast<Eigen::Index>(i), cols[i]);
  return total;
}

inline Matrix submatrix(const Matrix& a, const std::vector<int>& rows, const std::vector<int>& cols) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a(rows[i], cols[j]);
  }
  return out;
}

}  // namespace detail

// Minimum-cost matching of size min(n, m). Among optimal matchings the one
// whose sorted pair list is lexicographically smallest is returned: rows are
// fixed in ascending order, each to the lowest column that still admits an
// optimal completion.
inline Assignment hungarian(const Matrix& cost) {
  if (!cost.allFinite()) throw std::invalid_argument("hungarian: costs must be finite");
  const int n = static_cast<int>(cost.rows());
  const int m = static_cast<int>(cost.cols());
  Assignment out;
  std::vector<int> rows(static_cast<std::size_t>(n)), cols(static_cast<std::size_t>(m));
  for (int i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = i;
  for (int j = 0; j < m; ++j) cols[static_cast<std::size_t>(j)] = j;

  double target = detail::optimal_cost(cost);
  const double tol = 1e-9 * std::max(1.0, cost.cwiseAbs().sum());
  for (int i = 0; i < n && !cols.empty(); ++i) {
    std::vector<int> rest_rows(rows.begin() + 1, rows.end());
    int chosen = -1;
    for (std::size_t jj = 0; jj < cols.size(); ++jj) {
      const int j = cols[jj];
      std::vector<int> rest_cols = cols;
      rest_cols.erase(rest_cols.begin() + static_cast<std::ptrdiff_t>(jj));
      const double total = cost(i, j) + detail::optimal_cost(detail::submatrix(cost, rest_rows, rest_cols));
      if (std::abs(total - target) <= tol) {
        chosen = j;
        cols = std::move(rest_cols);
        target -= cost(i, j);
        break;
      }
    }
    rows = std::move(rest_rows);
    if (chosen >= 0) {
      out.pairs.emplace_back(i, chosen);
      out.cost += cost(i, chosen);
    } else {
      out.unmatched.push_back(i);
    }
  }
  for (const int r : rows) out.unmatched.push_back(r);
  std::sort(out.unmatched.begin(), out.unmatched.end());
  return out;
}

struct MatchingWeights {
  double cls = 1.5;
  double det = 0.025;
  FocalParams focal;
};

inline double mean_point_l1(const Polyline& a, const Polyline& b) {
  require_dims(a.size() == b.size(), "mean_point_l1: point counts differ");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]).cwiseAbs().sum();
  return acc / static_cast<double>(3 * a.size());
}

// cost(i, j) = cls * focal_matching_cost(score_i) + det * meanL1(points_i, resample(gt_j, K))
inline Matrix matching_cost(const std::vector<CenterlinePrediction>& preds, const std::vector<Polyline>& gts,
                            const MatchingWeights& w) {
  Matrix cost(static_cast<Eigen::Index>(preds.size()), static_cast<Eigen::Index>(gts.size()));
  std::vector<Polyline> resampled;
  resampled.reserve(gts.size());
  for (std::size_t j = 0; j < gts.size(); ++j) {
    const int k = preds.empty() ? 2 : static_cast<int>(preds.front().points.size());
    resampled.push_back(resample_polyline(gts[j], k));
  }
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double cls = focal_matching_cost(preds[i].score, w.focal);
    for (std::size_t j = 0; j < gts.size(); ++j) {
      cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          w.cls * cls + w.det * mean_point_l1(preds[i].points, resampled[j]);
    }
  }
  return cost;
}

// Predictions and ground truths must belong to one category (real or virtual).
inline Assignment match_instances(const std::vector<CenterlinePrediction>& preds, const std::vector<Polyline>& gts,
                                  const MatchingWeights& w) {
  if (gts.empty() || preds.empty()) {
    Assignment empty;
    for (std::size_t i = 0; i < preds.size(); ++i) empty.unmatched.push_back(static_cast<int>(i));
    return empty;
  }
  for (const auto& p : preds) {
    if (p.is_real != preds.front().is_real) throw std::invalid_argument("match_instances: mixed real/virtual predictions");
  }
  return hungarian(matching_cost(preds, gts, w));
}

}  // namespace roadpainter
