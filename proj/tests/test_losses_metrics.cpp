#include "oracles.hpp"

#include <roadpainter/losses.hpp>
#include <roadpainter/matching.hpp>
#include <roadpainter/metrics.hpp>
#include <roadpainter/training_loss.hpp>

#include <gtest/gtest.h>

#include <set>

using namespace roadpainter;

namespace {

Vector random_probs(Rng& rng, Eigen::Index n) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.uniform(0.05, 0.95);
  return v;
}

std::vector<std::vector<double>> to_nested(const Matrix& m) {
  std::vector<std::vector<double>> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)].assign(m.row(i).begin(), m.row(i).end());
  return out;
}

Polyline straight(double x0, double y0, double x1, double y1, int k) {
  std::vector<Point3> pts;
  for (int i = 0; i < k; ++i) {
    const double t = static_cast<double>(i) / (k - 1);
    pts.emplace_back(x0 + t * (x1 - x0), y0 + t * (y1 - y0), 0.0);
  }
  return Polyline(std::move(pts));
}

CenterlinePrediction pred_of(const Polyline& line, double score, bool real = true) {
  return {line, score, real, Vector::Zero(4)};
}

}  // namespace

// ---------- elementwise losses ----------

TEST(Focal, Examples) {
  EXPECT_NEAR(focal_loss(0.5, 1), 0.25 * 0.25 * std::log(2.0), 1e-15);
  EXPECT_NEAR(focal_loss(0.5, 1), 0.04332, 1e-5);
  EXPECT_LT(focal_loss(0.999999, 1), 1e-12);
  const double ce = -std::log(0.3);
  EXPECT_NEAR(focal_loss(0.3, 1, {0.5, 0.0}), 0.5 * ce, 1e-15);
  EXPECT_TRUE(std::isfinite(focal_loss(0.0, 1)));
  EXPECT_TRUE(std::isfinite(focal_loss(1.0, 0)));
}

TEST(Focal, MatchesOracleAndIsMonotone) {
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const double p = rng.uniform(0.01, 0.99);
    EXPECT_NEAR(focal_loss(p, 1), oracle::focal(p, 1), 1e-14);
    EXPECT_NEAR(focal_loss(p, 0), oracle::focal(p, 0), 1e-14);
    EXPECT_GE(focal_loss(p, 1), focal_loss(std::min(p + 0.01, 0.999), 1));
    EXPECT_GE(focal_loss(p, 0), focal_loss(std::max(p - 0.01, 0.001), 0));
  }
}

TEST(Dice, Examples) {
  EXPECT_EQ(dice_loss(Vector::Ones(9), Vector::Ones(9)), 0.0);
  EXPECT_NEAR(dice_loss(Vector::Zero(9), Vector::Ones(9)), 1.0 - 1.0 / 10.0, 1e-15);
  Rng rng(2);
  const Vector p = random_probs(rng, 9);
  Vector g(9);
  for (int i = 0; i < 9; ++i) g[i] = rng.uniform() < 0.5 ? 1.0 : 0.0;
  double inter = 0, sp = 0, sg = 0;
  for (int i = 0; i < 9; ++i) {
    inter += p[i] * g[i];
    sp += p[i];
    sg += g[i];
  }
  EXPECT_NEAR(dice_loss(p, g), 1.0 - (2 * inter + 1) / (sp + sg + 1), 1e-14);
}

TEST(Elementwise, Examples) {
  Rng rng(3);
  const Vector a = random_probs(rng, 7);
  const Vector b = random_probs(rng, 7);
  EXPECT_EQ(elementwise_losses(a, a, ElementwiseKind::kL1), 0.0);
  EXPECT_NEAR(elementwise_losses(Vector::Constant(1, 0.5), Vector::Ones(1), ElementwiseKind::kBce), std::log(2.0), 1e-15);
  double l1 = 0, bce = 0;
  for (int i = 0; i < 7; ++i) {
    l1 += std::abs(a[i] - b[i]) / 7;
    bce += oracle::bce(a[i], b[i]) / 7;
  }
  EXPECT_NEAR(elementwise_losses(a, b, ElementwiseKind::kL1), l1, 1e-14);
  EXPECT_NEAR(elementwise_losses(a, b, ElementwiseKind::kBce), bce, 1e-14);
}

TEST(GradCheck, SpecPoints) {
  GradCheckPoint f{Vector::Constant(1, 0.3), Vector::Ones(1), {}};
  EXPECT_LT(analytic_grad_check(GradTerm::kFocal, f), 1e-4);
  Rng rng(4);
  Vector g(9);
  for (int i = 0; i < 9; ++i) g[i] = i % 2;
  EXPECT_LT(analytic_grad_check(GradTerm::kDice, {random_probs(rng, 9), g, {}}), 1e-4);
  Vector z(8);
  for (int i = 0; i < 8; ++i) z[i] = rng.normal(0, 3);
  EXPECT_LT(analytic_grad_check(GradTerm::kSoftargmax, {z, Vector(), {}}), 1e-4);
  EXPECT_LT(analytic_grad_check(GradTerm::kBce, {random_probs(rng, 5), random_probs(rng, 5), {}}), 1e-4);
  Vector t = random_probs(rng, 5);
  Vector x = t + Vector::Constant(5, 0.2);
  EXPECT_LT(analytic_grad_check(GradTerm::kL1, {x, t, {}}), 1e-4);
}

// ---------- hungarian ----------

TEST(Hungarian, Examples) {
  Matrix c(2, 2);
  c << 1, 2, 2, 1;
  const auto a = hungarian(c);
  EXPECT_EQ(a.pairs, (std::vector<std::pair<int, int>>{{0, 0}, {1, 1}}));
  EXPECT_EQ(a.cost, 2.0);
  Matrix d = Matrix::Constant(4, 4, 5.0);
  d.diagonal().setConstant(0.5);
  const auto b = hungarian(d);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(b.pairs[static_cast<std::size_t>(i)], std::make_pair(i, i));
  EXPECT_THROW(hungarian(Matrix::Constant(2, 2, std::nan(""))), std::invalid_argument);
}

TEST(Hungarian, MatchesEnumerationIncludingRectangular) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = rng.uniform_int(1, 6);
    const int m = rng.uniform_int(1, 6);
    Matrix c(n, m);
    for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = rng.uniform(0, 10);
    const auto a = hungarian(c);
    EXPECT_NEAR(a.cost, oracle::assignment_enumerate(to_nested(c)), 1e-9);
    EXPECT_EQ(a.pairs.size(), static_cast<std::size_t>(std::min(n, m)));
    EXPECT_EQ(a.unmatched.size(), static_cast<std::size_t>(n - std::min(n, m)));
    std::set<int> rows, cols;
    for (const auto& [r, col] : a.pairs) {
      EXPECT_TRUE(rows.insert(r).second);
      EXPECT_TRUE(cols.insert(col).second);
    }
  }
}

TEST(Hungarian, TieBreakIsLexicographic) {
  const auto a = hungarian(Matrix::Constant(3, 3, 1.0));
  EXPECT_EQ(a.pairs, (std::vector<std::pair<int, int>>{{0, 0}, {1, 1}, {2, 2}}));
  Matrix c(2, 3);
  c << 1, 1, 1, 1, 1, 1;
  EXPECT_EQ(hungarian(c).pairs, (std::vector<std::pair<int, int>>{{0, 0}, {1, 1}}));
  Matrix d(3, 2);
  d << 2, 2, 2, 2, 2, 2;
  const auto h = hungarian(d);
  EXPECT_EQ(h.pairs, (std::vector<std::pair<int, int>>{{0, 0}, {1, 1}}));
  EXPECT_EQ(h.unmatched, std::vector<int>{2});
  // two optimal matchings of cost 2: {(0,1),(1,0)} and {(0,0),(1,1)}
  Matrix e(2, 2);
  e << 1, 1, 1, 1;
  e(0, 1) = 0.5;
  e(1, 0) = 1.5;
  EXPECT_EQ(hungarian(e).pairs, (std::vector<std::pair<int, int>>{{0, 0}, {1, 1}}));
}

// ---------- match_instances ----------

TEST(MatchInstances, Examples) {
  const auto g0 = straight(-20, 0, 20, 0, 11);
  const auto g1 = straight(-20, 5, 20, 5, 11);
  const MatchingWeights w;
  const auto a = match_instances({pred_of(g0, 1.0), pred_of(g1, 1.0)}, {g0, g1}, w);
  EXPECT_EQ(a.pairs, (std::vector<std::pair<int, int>>{{0, 0}, {1, 1}}));

  const auto near = straight(-20, 0.2, 20, 0.2, 11);
  const auto far = straight(-20, 3, 20, 3, 11);
  const auto b = match_instances({pred_of(near, 0.5), pred_of(far, 0.5)}, {g0}, w);
  EXPECT_EQ(b.pairs, (std::vector<std::pair<int, int>>{{0, 0}}));
  EXPECT_EQ(b.unmatched, std::vector<int>{1});

  EXPECT_TRUE(match_instances({pred_of(g0, 0.5)}, {}, w).pairs.empty());
  EXPECT_THROW(match_instances({pred_of(g0, 0.5), pred_of(g1, 0.5, false)}, {g0}, w), std::invalid_argument);
}

TEST(MatchInstances, FourPredsThreeGtAgainstBruteForce) {
  Rng rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Polyline> gts;
    for (int j = 0; j < 3; ++j) gts.push_back(straight(rng.uniform(-40, 0), rng.uniform(-20, 20), rng.uniform(0, 40), rng.uniform(-20, 20), 11));
    std::vector<CenterlinePrediction> preds;
    for (int i = 0; i < 4; ++i) {
      preds.push_back(pred_of(straight(rng.uniform(-40, 0), rng.uniform(-20, 20), rng.uniform(0, 40), rng.uniform(-20, 20), 11),
                              rng.uniform(0.05, 0.95)));
    }
    const MatchingWeights w;
    std::vector<std::vector<double>> cost(4, std::vector<double>(3));
    for (int i = 0; i < 4; ++i) {
      const double p = preds[static_cast<std::size_t>(i)].score;
      for (int j = 0; j < 3; ++j) {
        double l1 = 0.0;
        for (int k = 0; k < 11; ++k)
          for (int d = 0; d < 3; ++d) l1 += std::abs(preds[static_cast<std::size_t>(i)].points[static_cast<std::size_t>(k)][d] - gts[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)][d]);
        cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
            w.cls * (oracle::focal(p, 1) - oracle::focal(p, 0)) + w.det * l1 / 33.0;
      }
    }
    EXPECT_NEAR(match_instances(preds, gts, w).cost, oracle::assignment_enumerate(cost), 1e-9);
  }
}

// ---------- total_loss ----------

namespace {

// 40 x 20 grid at 2.5 m over the full BEV range.
GridSpec coarse_grid() {
  GridSpec g;
  g.rows = 20;
  g.cols = 40;
  g.resolution = 2.5;
  g.x_min = -50.0;
  g.y_min = -25.0;
  return g;
}

constexpr int kK = 5;

// two horizontal GT lanes through row centers (rows 8 and 12), lane 0 -> lane 1
Scene tiny_scene() {
  Scene s;
  s.centerlines = {straight(-21, -3.75, 19, -3.75, kK), straight(-19, 6.25, 21, 6.25, kK)};
  s.is_real = {true, true};
  s.adjacency = {{0, 1}, {0, 0}};
  return s;
}

MaskPointReadout random_readout(Rng& rng, ReadoutAxis axis, int n, int span) {
  MaskPointReadout r;
  r.axis = axis;
  r.coords = Vector(n);
  r.existence = Vector(n);
  for (int i = 0; i < n; ++i) {
    r.coords[i] = rng.uniform(0, span - 1);
    r.existence[i] = rng.uniform(0.05, 0.95);
  }
  r.direction = rng.uniform(0.05, 0.95);
  return r;
}

PipelineOutputs tiny_outputs(Rng& rng) {
  const GridSpec g = coarse_grid();
  PipelineOutputs out;
  out.grid = g;
  out.predictions = {pred_of(straight(-19, 6.0, 21, 6.8, kK), 0.7), pred_of(straight(-30, 20, 30, 20, kK), 0.4),
                     pred_of(straight(-21, -3.2, 19, -4.0, kK), 0.8)};
  out.topology = Matrix(3, 3);
  for (Eigen::Index i = 0; i < 9; ++i) out.topology.data()[i] = rng.uniform(0.05, 0.95);
  for (int i = 0; i < 3; ++i) {
    InstanceMask m(g.rows, g.cols);
    for (Eigen::Index c = 0; c < m.logits.size(); ++c) m.logits[c] = rng.normal(0, 2);
    out.masks.push_back(m);
    out.column_readouts.push_back(random_readout(rng, ReadoutAxis::kColumns, g.cols, g.rows));
    out.row_readouts.push_back(random_readout(rng, ReadoutAxis::kRows, g.rows, g.cols));
  }
  return out;
}

struct LaneCells {
  int row, col_lo, col_hi;  // supercover row and column span of the lane
};

// independent GT construction for the horizontal lanes above
double oracle_mask_terms(const InstanceMask& pred, const LaneCells& lane, const GridSpec& g) {
  std::vector<double> gt(static_cast<std::size_t>(g.cells()), 0.0);
  for (int r = lane.row - 1; r <= lane.row + 1; ++r)
    for (int c = lane.col_lo - 1; c <= lane.col_hi + 1; ++c) gt[static_cast<std::size_t>(r * g.cols + c)] = 1.0;
  double bce = 0, inter = 0, sp = 0, sg = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const double p = 1.0 / (1.0 + std::exp(-pred.logits[static_cast<Eigen::Index>(i)]));
    bce += oracle::bce(p, gt[i]);
    inter += p * gt[i];
    sp += p;
    sg += gt[i];
  }
  return bce / static_cast<double>(gt.size()) + 1.0 - (2 * inter + 1) / (sp + sg + 1);
}

double oracle_mp_terms(const MaskPointReadout& col, const MaskPointReadout& row, double x0, double x1, double y,
                       const GridSpec& g) {
  const double row_coord = (y - g.y_min) / g.resolution - 0.5;
  double total = 0.0;
  // columns: every column center inside [x0, x1] sees the lane at row_coord
  {
    double l1 = 0, bce = 0;
    int present = 0;
    for (int j = 0; j < g.cols; ++j) {
      const double xc = g.x_min + (j + 0.5) * g.resolution;
      const double t = (xc >= x0 && xc <= x1) ? 1.0 : 0.0;
      if (t > 0) {
        l1 += std::abs(col.coords[j] - row_coord);
        ++present;
      }
      bce += oracle::bce(col.existence[j], t);
    }
    total += l1 / present + bce / g.cols + oracle::focal(col.direction, 1);
  }
  // rows: only the row whose center equals y; first crossing is the start point
  {
    double l1 = 0, bce = 0;
    int present = 0;
    for (int i = 0; i < g.rows; ++i) {
      const double yc = g.y_min + (i + 0.5) * g.resolution;
      const double t = yc == y ? 1.0 : 0.0;
      if (t > 0) {
        l1 += std::abs(row.coords[i] - ((x0 - g.x_min) / g.resolution - 0.5));
        ++present;
      }
      bce += oracle::bce(row.existence[i], t);
    }
    total += l1 / present + bce / g.rows + oracle::focal(row.direction, 0);
  }
  return total;
}

}  // namespace

TEST(TotalLoss, TinySceneEveryTermMatchesOracle) {
  Rng rng(7);
  const Scene scene = tiny_scene();
  const PipelineOutputs out = tiny_outputs(rng);
  const GridSpec g = out.grid;
  const LossBreakdown b = total_loss(out, scene);

  // brute-force matching over injective GT -> prediction maps
  const LossWeights lw;
  int best_a = -1, best_b = -1;
  double best = std::numeric_limits<double>::infinity();
  auto pair_cost = [&](int p, int gi) {
    double l1 = 0;
    for (int k = 0; k < kK; ++k)
      for (int d = 0; d < 3; ++d) l1 += std::abs(out.predictions[static_cast<std::size_t>(p)].points[static_cast<std::size_t>(k)][d] - scene.centerlines[static_cast<std::size_t>(gi)][static_cast<std::size_t>(k)][d]);
    const double s = out.predictions[static_cast<std::size_t>(p)].score;
    return lw.cls * (oracle::focal(s, 1) - oracle::focal(s, 0)) + lw.det * l1 / (3.0 * kK);
  };
  for (int a = 0; a < 3; ++a)
    for (int c = 0; c < 3; ++c) {
      if (a == c) continue;
      const double v = pair_cost(a, 0) + pair_cost(c, 1);
      if (v < best) best = v, best_a = a, best_b = c;
    }
  ASSERT_EQ(best_a, 2);
  ASSERT_EQ(best_b, 0);
  const int gt_of[3] = {1, -1, 0};

  double cls = 0;
  for (int i = 0; i < 3; ++i) cls += oracle::focal(out.predictions[static_cast<std::size_t>(i)].score, gt_of[i] >= 0 ? 1 : 0) / 3;
  EXPECT_NEAR(b.cls, cls, 1e-12);

  double top = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const int y = (gt_of[i] == 0 && gt_of[j] == 1) ? 1 : 0;
      top += oracle::focal(out.topology(i, j), y) / 9;
    }
  EXPECT_NEAR(b.top, top, 1e-12);

  double det = 0;
  for (int i : {0, 2}) {
    double l1 = 0;
    for (int k = 0; k < kK; ++k)
      for (int d = 0; d < 3; ++d) l1 += std::abs(out.predictions[static_cast<std::size_t>(i)].points[static_cast<std::size_t>(k)][d] - scene.centerlines[static_cast<std::size_t>(gt_of[i])][static_cast<std::size_t>(k)][d]);
    det += l1 / (3.0 * kK) / 2;
  }
  EXPECT_NEAR(b.det, det, 1e-12);

  // lane 0: x in [-21, 19] -> cells 11..27 on row 8; lane 1: x in [-19, 21] -> 12..28 on row 12
  const double mask = 0.5 * (oracle_mask_terms(out.masks[2], {8, 11, 27}, g) + oracle_mask_terms(out.masks[0], {12, 12, 28}, g));
  EXPECT_NEAR(b.mask, mask, 1e-12);

  const double mp = 0.5 * (oracle_mp_terms(out.column_readouts[2], out.row_readouts[2], -21, 19, -3.75, g) +
                           oracle_mp_terms(out.column_readouts[0], out.row_readouts[0], -19, 21, 6.25, g));
  EXPECT_NEAR(b.mp, mp, 1e-12);

  EXPECT_NEAR(b.total, 5 * top + 1.5 * cls + 0.025 * det + mask + 7 * mp, 1e-9);
}

TEST(TotalLoss, BookkeepingAndNonNegative) {
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const auto out = tiny_outputs(rng);
    LossConfig cfg;
    cfg.lambda = {rng.uniform(0, 5), rng.uniform(0, 5), rng.uniform(0, 1), rng.uniform(0, 2), rng.uniform(0, 8)};
    const auto b = total_loss(out, tiny_scene(), cfg);
    EXPECT_NEAR(b.total, cfg.lambda.top * b.top + cfg.lambda.cls * b.cls + cfg.lambda.det * b.det +
                             cfg.lambda.mask * b.mask + cfg.lambda.mp * b.mp, 1e-9);
    for (double v : {b.top, b.cls, b.det, b.mask, b.mp}) EXPECT_GE(v, 0.0);
  }
}

TEST(TotalLoss, InvariantToGtOrder) {
  Rng rng(9);
  const auto out = tiny_outputs(rng);
  const Scene s = tiny_scene();
  Scene swapped = s;
  std::swap(swapped.centerlines[0], swapped.centerlines[1]);
  swapped.adjacency = {{0, 0}, {1, 0}};
  const auto a = total_loss(out, s);
  const auto b = total_loss(out, swapped);
  for (auto [x, y] : {std::pair{a.top, b.top}, {a.cls, b.cls}, {a.det, b.det}, {a.mask, b.mask}, {a.mp, b.mp}, {a.total, b.total}})
    EXPECT_NEAR(x, y, 1e-9);
}

TEST(TotalLoss, MissingOutputsRaise) {
  Rng rng(10);
  auto out = tiny_outputs(rng);
  out.masks.clear();
  EXPECT_THROW(total_loss(out, tiny_scene()), std::invalid_argument);
  LossConfig no_mask;
  no_mask.mask = false;
  EXPECT_NO_THROW(total_loss(out, tiny_scene(), no_mask));
  out.row_readouts.pop_back();
  EXPECT_THROW(total_loss(out, tiny_scene(), no_mask), std::invalid_argument);
  out.topology = Matrix(0, 0);
  no_mask.mask_points = false;
  EXPECT_THROW(total_loss(out, tiny_scene(), no_mask), std::invalid_argument);
}

TEST(TotalLoss, CategoriesNeverShareMatches) {
  Rng rng(11);
  Scene s = tiny_scene();
  s.centerlines.push_back(straight(-19, 6.0, 21, 6.8, kK));
  s.is_real.push_back(false);
  s.adjacency = {{0, 1, 0}, {0, 0, 0}, {0, 0, 0}};
  auto out = tiny_outputs(rng);
  out.predictions[0].is_real = false;
  const auto gt_of = match_by_category(out, s, {});
  EXPECT_EQ(gt_of[0], 2);  // the virtual prediction can only take the virtual GT
  std::set<int> seen;
  for (std::size_t i = 0; i < gt_of.size(); ++i) {
    if (gt_of[i] < 0) continue;
    EXPECT_TRUE(seen.insert(gt_of[i]).second);
    EXPECT_EQ(s.is_real[static_cast<std::size_t>(gt_of[i])], out.predictions[i].is_real);
  }
}

// ---------- metrics ----------

TEST(AveragePrecision, MatchesHandPr) {
  EXPECT_NEAR(average_precision({true, false, true}, 2), 0.5 + 0.5 * 2.0 / 3.0, 1e-15);
  Rng rng(12);
  for (int t = 0; t < 100; ++t) {
    const int n = rng.uniform_int(0, 8);
    std::vector<bool> hits;
    std::vector<int> ih;
    int tp = 0;
    for (int i = 0; i < n; ++i) {
      const bool h = rng.uniform() < 0.5;
      hits.push_back(h);
      ih.push_back(h);
      tp += h;
    }
    const int num_gt = tp + rng.uniform_int(0, 3);
    EXPECT_NEAR(average_precision(hits, static_cast<std::size_t>(num_gt)), oracle::ap_from_hits(ih, num_gt), 1e-12);
  }
}

TEST(DetL, Examples) {
  const auto g0 = straight(-20, 0, 20, 0, 201);
  const auto g1 = straight(-20, 8, 20, 8, 201);
  EXPECT_EQ(det_l({{g0, 1.0}, {g1, 1.0}}, {g0, g1}).map, 1.0);
  EXPECT_EQ(det_l({{straight(-20, 4, 20, 4, 11), 0.9}}, {straight(-20, -4, 20, -4, 11)}).map, 0.0);
  EXPECT_EQ(det_l({}, {g0}).map, 0.0);
  EXPECT_EQ(det_l({{g0, 0.5}}, {}).map, 0.0);
  EXPECT_EQ(det_l({}, {}).map, 1.0);
  // hand PR: ranked hits (1, 0, 1) over 2 GT at every threshold
  const auto r = det_l({{straight(-20, 0.5, 20, 0.5, 11), 0.9}, {straight(-20, 20, 20, 20, 11), 0.8},
                        {straight(-20, 8.3, 20, 8.3, 11), 0.7}},
                       {g0, g1});
  EXPECT_NEAR(r.map, oracle::ap_from_hits({1, 0, 1}, 2), 1e-12);
  EXPECT_THROW(det_l({}, {}, MetricConfig{{2.0, 1.0}}), std::invalid_argument);
}

TEST(DetL, PerThresholdBreakdown) {
  const auto g0 = straight(-20, 0, 20, 0, 11);
  const auto r = det_l({{straight(-20, 1.5, 20, 1.5, 11), 0.9}}, {g0});
  ASSERT_EQ(r.per_threshold.size(), 3u);
  EXPECT_EQ(r.per_threshold[0].ap, 0.0);
  EXPECT_EQ(r.per_threshold[1].ap, 1.0);
  EXPECT_EQ(r.per_threshold[2].ap, 1.0);
  EXPECT_NEAR(r.map, 2.0 / 3.0, 1e-15);
}

namespace {
std::vector<ScoredPolyline> random_preds(Rng& rng, const std::vector<Polyline>& gts, int n) {
  std::vector<ScoredPolyline> out;
  for (int i = 0; i < n; ++i) {
    const auto& g = gts[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(gts.size()) - 1))];
    const double dy = rng.uniform(-4, 4);
    out.push_back({straight(g.front().x(), g.front().y() + dy, g.back().x(), g.back().y() + dy, 11), rng.uniform(0.01, 1)});
  }
  return out;
}
}  // namespace

TEST(DetL, ScaleInvarianceAndDuplicates) {
  Rng rng(13);
  for (int t = 0; t < 30; ++t) {
    std::vector<Polyline> gts;
    for (int j = 0; j < 3; ++j) gts.push_back(straight(-20, -15 + 12 * j, 20, -15 + 12 * j, 11));
    auto preds = random_preds(rng, gts, 5);
    const auto base = det_l(preds, gts);
    auto scaled = preds;
    const double s = rng.uniform(0.1, 0.99);
    for (auto& p : scaled) p.score *= s;
    EXPECT_NEAR(det_l(scaled, gts).map, base.map, 1e-12);
    auto dup = preds;
    const auto& src = preds[static_cast<std::size_t>(rng.uniform_int(0, 4))];
    dup.push_back({src.line, src.score * 0.5});
    const auto with_dup = det_l(dup, gts);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_LE(with_dup.per_threshold[k].ap, base.per_threshold[k].ap + 1e-12);
  }
}

TEST(TopLL, Examples) {
  const auto a = straight(-40, 0, -10, 0, 11);
  const auto b = straight(-10, 0, 20, 10, 11);
  const auto c = straight(-10, 0, 20, -10, 11);
  const std::vector<Polyline> gts{a, b, c};
  const std::vector<std::vector<int>> adj{{0, 1, 1}, {0, 0, 0}, {0, 0, 0}};
  const std::vector<ScoredPolyline> preds{{a, 1.0}, {b, 1.0}, {c, 1.0}};
  Matrix exact = Matrix::Zero(3, 3);
  exact(0, 1) = exact(0, 2) = 1.0;
  EXPECT_EQ(top_ll(preds, exact, gts, adj), 1.0);
  EXPECT_EQ(top_ll(preds, Matrix::Zero(3, 3), gts, adj), 0.0);

  Matrix ranked = Matrix::Zero(3, 3);
  ranked(0, 1) = 0.9;
  ranked(0, 2) = 0.8;
  ranked(1, 2) = 0.6;  // wrong edge ranked last
  EXPECT_NEAR(top_ll(preds, ranked, gts, adj), oracle::ap_from_hits({1, 1, 0}, 2), 1e-12);
  ranked(1, 2) = 0.85;  // wrong edge ranked second
  EXPECT_NEAR(top_ll(preds, ranked, gts, adj), oracle::ap_from_hits({1, 0, 1}, 2), 1e-12);

  const std::vector<std::vector<int>> none{{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
  EXPECT_EQ(top_ll(preds, Matrix::Zero(3, 3), gts, none), 1.0);
  EXPECT_EQ(top_ll(preds, exact, gts, none), 0.0);
  EXPECT_THROW(top_ll(preds, Matrix::Zero(2, 2), gts, adj), DimensionError);
}

TEST(TopLL, PermutedPredictionsKeepScore) {
  const auto a = straight(-40, 0, -10, 0, 11);
  const auto b = straight(-10, 0, 20, 10, 11);
  const auto c = straight(-10, 0, 20, -10, 11);
  const std::vector<std::vector<int>> adj{{0, 1, 1}, {0, 0, 0}, {0, 0, 0}};
  const std::vector<ScoredPolyline> preds{{c, 0.9}, {a, 0.8}, {b, 0.7}};
  Matrix p = Matrix::Zero(3, 3);
  p(1, 0) = 0.9;
  p(1, 2) = 0.7;
  EXPECT_EQ(top_ll(preds, p, {a, b, c}, adj), 1.0);
}

TEST(MaskAp, Examples) {
  const int h = 4, w = 5;
  auto make = [&](std::initializer_list<int> cells) {
    InstanceMask m(h, w);
    m.logits.setConstant(-5.0);
    for (int c : cells) m.logits[c] = 5.0;
    return m;
  };
  const auto m0 = make({0, 1, 2, 3});
  const auto m1 = make({10, 11, 12});
  const std::vector<CellMask> gts{binarize(m0), binarize(m1)};
  EXPECT_EQ(mask_ap({{m0, 0.9}, {m1, 0.8}}, gts).map, 1.0);
  EXPECT_EQ(mask_ap({{make({19}), 0.9}}, gts).map, 0.0);
  // IoU(p0, gt0) = 3/5 = 0.6 passes 0.5 only; IoU(p1, gt1) = 3/3 passes both
  const auto p0 = make({1, 2, 3, 4});
  const auto r = mask_ap({{p0, 0.9}, {m1, 0.6}}, gts);
  EXPECT_NEAR(mask_iou(binarize(p0), gts[0]), 0.6, 1e-15);
  EXPECT_NEAR(r.per_threshold[0].ap, 1.0, 1e-12);
  EXPECT_NEAR(r.per_threshold[1].ap, oracle::ap_from_hits({0, 1}, 2), 1e-12);
  EXPECT_EQ(mask_iou(CellMask(4, 0), CellMask(4, 0)), 0.0);
}
