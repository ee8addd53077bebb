#include <roadpainter/roadpainter.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <sstream>

using namespace roadpainter;

namespace {

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

// coarse grid so a full forward pass stays in the millisecond range
PipelineConfig small_config() {
  PipelineConfig c = PipelineConfig::desk();
  c.num_real = 4;
  c.num_virtual = 2;
  c.channels = 16;
  c.ffn_dim = 16;
  c.grid_rows = 20;
  c.grid_cols = 40;
  c.resolution = 2.5;
  c.mask_point_dim = 4;
  return c;
}

SceneParams junction_params() {
  SceneParams p;
  p.intersections = 1;
  return p;
}

}  // namespace

// ---------- scenes ----------

TEST(Scene, SameSeedSameJson) {
  for (std::uint64_t seed : {1u, 7u, 42u}) {
    EXPECT_EQ(scene_to_json(synth_scene(seed)).dump(), scene_to_json(synth_scene(seed)).dump());
    EXPECT_EQ(scene_to_json(synth_scene(seed, junction_params())).dump(),
              scene_to_json(synth_scene(seed, junction_params())).dump());
  }
  EXPECT_NE(scene_to_json(synth_scene(1)).dump(), scene_to_json(synth_scene(2)).dump());
}

TEST(Scene, NoIntersectionsMeansNoVirtualLanes) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Scene s = synth_scene(seed);
    EXPECT_TRUE(s.indices_of(false).empty()) << seed;
    EXPECT_FALSE(s.centerlines.empty());
  }
}

TEST(Scene, GeneratedScenesPassValidator) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const Scene s = synth_scene(seed, seed % 2 ? junction_params() : SceneParams{});
    const auto errors = validate_scene(s);
    EXPECT_TRUE(errors.empty()) << seed << ": " << (errors.empty() ? "" : errors.front());
  }
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto j = synth_scene(seed, junction_params());
    EXPECT_FALSE(j.indices_of(false).empty());
  }
}

TEST(Scene, ValidatorCatchesViolations) {
  Scene s = synth_scene(3);
  s.adjacency[0][0] = 1;  // a lane's end is far from its own start
  EXPECT_FALSE(validate_scene(s).empty());
  Scene short_line = synth_scene(3);
  short_line.centerlines[0] = Polyline{Point3(0, 0, 0), Point3(1, 0, 0)};
  EXPECT_FALSE(validate_scene(short_line).empty());
  Scene out = synth_scene(3);
  std::vector<Point3> pts(201, Point3(60, 0, 0));
  for (int i = 0; i < 201; ++i) pts[static_cast<std::size_t>(i)].x() += i;
  out.centerlines[0] = Polyline(pts);
  EXPECT_FALSE(validate_scene(out).empty());
}

TEST(Scene, JsonRoundTrip) {
  const Scene s = synth_scene(11, junction_params());
  const auto j = scene_to_json(s);
  const Scene back = scene_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(scene_to_json(back).dump(), j.dump());
  ASSERT_EQ(back.size(), s.size());
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(back.centerlines[i], s.centerlines[i]);
  EXPECT_EQ(back.adjacency, s.adjacency);
  auto bad = j;
  bad["version"] = 99;
  EXPECT_THROW(scene_from_json(bad), std::invalid_argument);
}

TEST(Scene, BadParamsRaise) {
  SceneParams p;
  p.lanes_min = 3;
  p.lanes_max = 2;
  EXPECT_THROW(synth_scene(1, p), ConfigError);
}

TEST(Scene, ArcSceneHasRequestedRadius) {
  const Scene s = synth_arc_scene(5, 30.0);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_TRUE(validate_scene(s).empty());
  // three points on a circle determine its radius
  const Point2 a = s.centerlines[0][0].head<2>();
  const Point2 b = s.centerlines[0][100].head<2>();
  const Point2 c = s.centerlines[0][200].head<2>();
  const double ab = (a - b).norm(), bc = (b - c).norm(), ca = (c - a).norm();
  const double area2 = std::abs((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x());
  EXPECT_NEAR(ab * bc * ca / (2.0 * area2), 30.0, 1e-6);
}

// ---------- BEV rendering ----------

TEST(Render, EmptySceneNoNoiseIsZero) {
  const GridSpec g;
  EXPECT_EQ(render_bev_features(Scene{}, g, 8, 0.0, 1).data(), Matrix::Zero(g.cells(), 8));
}

TEST(Render, OccupancyEqualsDilatedRaster) {
  const Scene s = synth_scene(4);
  const GridSpec g;
  const BevGrid b = render_bev_features(s, g, 8, 0.0, 1);
  CellMask expect(static_cast<std::size_t>(g.cells()), 0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!s.is_real[i]) continue;
    const CellMask m = dilate(g, rasterize_polyline(g, s.centerlines[i]), 1);
    for (std::size_t c = 0; c < m.size(); ++c) expect[c] |= m[c];
  }
  for (int c = 0; c < g.cells(); ++c) {
    EXPECT_EQ(b.data()(c, kOccupancy) != 0.0, expect[static_cast<std::size_t>(c)] != 0) << c;
  }
  for (int ch = kRenderedChannels; ch < 8; ++ch) EXPECT_EQ(b.data().col(ch).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Render, VirtualLanesOnlyInWeakChannel) {
  Scene s;
  std::vector<Point3> pts;
  for (int i = 0; i < 201; ++i) pts.emplace_back(-20 + 0.2 * i, 3.0, 0.0);
  s.centerlines.push_back(Polyline(pts));
  s.is_real = {false};
  s.adjacency = {{0}};
  const BevGrid b = render_bev_features(s, GridSpec{}, 8, 0.0, 1);
  EXPECT_EQ(b.data().col(kOccupancy).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(b.data().col(kVirtualOccupancy).maxCoeff(), 0.2);
}

TEST(Render, NoiseStandardDeviation) {
  const Scene s = synth_scene(5);
  const GridSpec g;
  const BevGrid clean = render_bev_features(s, g, 8, 0.0, 9);
  const BevGrid noisy = render_bev_features(s, g, 8, 0.1, 9);
  const Matrix diff = noisy.data() - clean.data();
  const double n = static_cast<double>(diff.size());
  ASSERT_GE(n, 1e4);
  const double mean = diff.sum() / n;
  const double sd = std::sqrt((diff.array() - mean).square().sum() / (n - 1));
  EXPECT_GE(sd, 0.08);
  EXPECT_LE(sd, 0.12);
}

TEST(Render, BinaryContainerRoundTrip) {
  Rng rng(3);
  GridSpec g;
  g.rows = 3;
  g.cols = 5;
  BevGrid b(g, 2);
  for (Eigen::Index i = 0; i < b.data().size(); ++i) b.data().data()[i] = rng.normal();
  std::stringstream ss;
  write_bev(b, ss);
  const std::string bytes = ss.str();
  ASSERT_EQ(bytes.size(), 12u + 8u * 30u);
  std::int32_t header[3];
  std::memcpy(header, bytes.data(), 12);
  EXPECT_EQ(header[0], 3);
  EXPECT_EQ(header[1], 5);
  EXPECT_EQ(header[2], 2);
  double first;
  std::memcpy(&first, bytes.data() + 12, 8);
  EXPECT_EQ(first, b.at(0, 0, 0));
  std::stringstream in(bytes);
  EXPECT_EQ(read_bev(in).data(), b.data());
  std::stringstream truncated(bytes.substr(0, 40));
  EXPECT_THROW(read_bev(truncated), std::runtime_error);
}

// ---------- config / weights ----------

TEST(Config, DefaultsAndDesk) {
  const PipelineConfig full;
  EXPECT_EQ(full.num_real, 150);
  EXPECT_EQ(full.num_virtual, 150);
  EXPECT_EQ(full.k, 11);
  EXPECT_EQ(full.channels, 256);
  EXPECT_EQ(full.layers, 4);
  EXPECT_EQ(full.heads, 8);
  EXPECT_EQ(full.lambda.top, 5.0);
  EXPECT_EQ(full.lambda.cls, 1.5);
  EXPECT_EQ(full.lambda.det, 0.025);
  EXPECT_EQ(full.lambda.mask, 1.0);
  EXPECT_EQ(full.lambda.mp, 7.0);
  EXPECT_EQ(full.outlier_threshold, 1.5);
  EXPECT_EQ(full.validity_threshold, 0.5);
  EXPECT_NO_THROW(full.validate());
  const auto desk = PipelineConfig::desk();
  EXPECT_EQ(desk.channels, 32);
  EXPECT_EQ(desk.num_real, 16);
}

TEST(Config, JsonRoundTripAndUnknownKeys) {
  auto c = small_config();
  c.pgm = false;
  c.pmf = false;
  c.frechet_thresholds = {0.5, 1.5};
  const auto j = config_to_json(c);
  EXPECT_EQ(config_to_json(config_from_json(j)).dump(), j.dump());
  EXPECT_THROW(config_from_json(nlohmann::json{{"bogus", 1}}), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json{{"k", "eleven"}}), ConfigError);
  EXPECT_EQ(config_from_json(nlohmann::json{{"k", 7}}).k, 7);
}

TEST(Config, ValidationRules) {
  auto c = small_config();
  c.pgm = false;
  EXPECT_THROW(c.validate(), ConfigError);
  c.pmf = false;
  EXPECT_NO_THROW(c.validate());
  c.k = 1;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, EnvironmentOverrides) {
  auto c = small_config();
  ::setenv("ROADPAINTER_SEED", "1234", 1);
  ::setenv("ROADPAINTER_OUT_DIR", "/tmp/rp-out", 1);
  apply_env_overrides(c);
  EXPECT_EQ(c.seed, 1234u);
  EXPECT_EQ(c.out_dir, "/tmp/rp-out");
  ::setenv("ROADPAINTER_SEED", "12x", 1);
  EXPECT_THROW(apply_env_overrides(c), ConfigError);
  ::unsetenv("ROADPAINTER_SEED");
  ::unsetenv("ROADPAINTER_OUT_DIR");
}

TEST(Weights, Base64RoundTrip) {
  EXPECT_EQ(base64_encode("foobar"), "Zm9vYmFy");
  EXPECT_EQ(base64_encode("fo"), "Zm8=");
  for (const std::string s : std::vector<std::string>{"", "a", "ab", "abc", std::string("\0\xff\x10", 3)}) EXPECT_EQ(base64_decode(base64_encode(s)), s);
}

TEST(Weights, JsonRoundTripIsExact) {
  const auto c = small_config();
  const ModelWeights w = random_weights(c, 7);
  const auto j = weights_to_json(w);
  ModelWeights back = random_weights(c, 8);
  weights_from_json(nlohmann::json::parse(j.dump()), back);
  EXPECT_EQ(weights_to_json(back).dump(), j.dump());
  auto other = c;
  other.channels = 20;
  other.heads = 2;
  ModelWeights wrong = random_weights(other, 1);
  EXPECT_THROW(weights_from_json(j, wrong), DimensionError);
}

// ---------- pipeline ----------

TEST(Pipeline, DeterministicPredictionJson) {
  const auto c = small_config();
  const Scene s = synth_scene(2);
  const auto w = random_weights(c, 3);
  const auto a = prediction_to_json(run_pipeline(s, c, w), c).dump();
  const auto b = prediction_to_json(run_pipeline(s, c, w), c).dump();
  EXPECT_EQ(a, b);
}

TEST(Pipeline, ShapesScoresAndFiniteReport) {
  auto c = small_config();
  const Scene s = synth_scene(6, junction_params());
  const auto w = random_weights(c, 4);
  const auto r = run_pipeline(s, c, w);
  ASSERT_EQ(r.outputs.predictions.size(), 6u);
  for (const auto& p : r.outputs.predictions) {
    EXPECT_EQ(p.points.size(), 11u);
    EXPECT_GE(p.score, 0.0);
    EXPECT_LE(p.score, 1.0);
    for (const auto& pt : p.points.points()) EXPECT_TRUE(point_in_bounds(pt));
  }
  EXPECT_EQ(r.outputs.topology.rows(), 6);
  for (double v : {r.report.det.map, r.report.top_ll, r.report.ap->map, r.loss.total}) EXPECT_TRUE(std::isfinite(v));
  for (std::size_t i = 4; i < 6; ++i) EXPECT_EQ(r.outputs.predictions[i].points, r.decoder_points[i]);
}

TEST(Pipeline, PmfWithoutPgmIsAConfigError) {
  auto c = small_config();
  c.pgm = false;
  EXPECT_THROW(run_pipeline(synth_scene(1), c, random_weights(small_config(), 1)), ConfigError);
}

TEST(Pipeline, TogglesKeepTheOutputContract) {
  const Scene s = synth_scene(8);
  const auto w = random_weights(small_config(), 5);
  for (int mask = 0; mask < 8; ++mask) {
    auto c = small_config();
    c.rvs_self_attention = mask & 1;
    c.hybrid_attention = mask & 2;
    c.sd = mask & 4;
    const auto r = run_pipeline(s, c, w);
    EXPECT_EQ(r.outputs.predictions.size(), 6u);
    EXPECT_EQ(r.outputs.masks.size(), 6u);
  }
  auto off = small_config();
  off.pmf = false;
  const auto r = run_pipeline(s, off, w);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(r.outputs.predictions[i].points, r.decoder_points[i]);
}

TEST(Pipeline, PredictionFileRoundTripsThroughEval) {
  const auto c = small_config();
  const Scene s = synth_scene(9);
  const auto r = run_pipeline(s, c, random_weights(c, 2));
  GridSpec g;
  const EvalInputs in = prediction_from_json(prediction_to_json(r, c), &g);
  EXPECT_EQ(g, c.grid());
  const EvalReport rep = evaluate(in, s, g, c.metrics());
  EXPECT_EQ(report_to_json(rep).dump(), report_to_json(r.report).dump());
}

TEST(Pipeline, OracleWeightsReproduceGt) {
  SceneParams p;
  p.lanes_min = p.lanes_max = 3;
  p.opposite_lanes = false;
  p.road_shape = 0;
  const Scene s = synth_scene(5, p);
  auto c = PipelineConfig::desk();
  c.num_real = 8;
  c.num_virtual = 4;
  const auto o = oracle_setup(s, c, 1);
  const auto r = run_pipeline(s, o.config, o.weights);
  EXPECT_EQ(r.report.det.per_threshold.front().threshold, 1.0);
  EXPECT_EQ(r.report.det.per_threshold.front().ap, 1.0);
  EXPECT_EQ(r.report.det.map, 1.0);
}

TEST(Pipeline, AblationGridShape) {
  const auto c = small_config();
  auto base = c;
  const auto rows = run_ablation(synth_scene(3), base, random_weights(c, 1));
  ASSERT_EQ(rows.size(), 8u);
  for (const auto& r : rows) EXPECT_EQ(r.ok, !(r.pmf && !r.pgm));
  const auto table = ablation_table(rows);
  EXPECT_EQ(count_of(table, "invalid"), 2u);
}

// ---------- SVG ----------

TEST(Svg, EmptySceneHasOnlyFrame) {
  const auto svg = render_svg(Scene{}, {});
  EXPECT_EQ(count_of(svg, "<rect"), 1u);
  EXPECT_EQ(count_of(svg, "<polyline"), 0u);
  EXPECT_EQ(count_of(svg, "<line "), 0u);
  EXPECT_EQ(svg.rfind("</svg>"), svg.size() - 7);
}

TEST(Svg, ElementCountAndDeterminism) {
  const Scene s = synth_scene(12, junction_params());
  const auto c = small_config();
  const auto preds = run_pipeline(s, c, random_weights(c, 1)).outputs.predictions;
  std::size_t edges = 0;
  for (const auto& row : s.adjacency)
    for (int v : row) edges += v == 1;
  std::size_t shown = 0;
  for (const auto& p : preds) shown += p.score >= 0.5;
  const auto svg = render_svg(s, preds, 0.5);
  const std::size_t elements = count_of(svg, "<rect") + count_of(svg, "<polyline") + count_of(svg, "<line ");
  EXPECT_EQ(elements, 1 + s.sd_instances.size() + s.size() + edges + shown);
  EXPECT_EQ(svg, render_svg(s, preds, 0.5));
}
