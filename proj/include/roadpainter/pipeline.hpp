#pragma once

#include <roadpainter/bev_render.hpp>
#include <roadpainter/decoder.hpp>
#include <roadpainter/metrics.hpp>
#include <roadpainter/scene.hpp>
#include <roadpainter/sdmap.hpp>
#include <roadpainter/targets.hpp>
#include <roadpainter/topology.hpp>
#include <roadpainter/training_loss.hpp>
#include <roadpainter/weights.hpp>

#include <json.hpp>

#include <cstdlib>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace roadpainter {

// Default-constructed values are the full-size model; desk() is the small
// configuration used by tests and the CLI.
struct PipelineConfig {
  int num_real = 150;
  int num_virtual = 150;
  int k = 11;
  int channels = 256;
  int layers = 4;
  int heads = 8;
  int sampling_points = 4;
  int ffn_dim = 512;
  int grid_rows = 100;
  int grid_cols = 200;
  double resolution = 0.5;
  LossWeights lambda;
  FocalParams focal;
  bool pgm = true;
  bool pmf = true;
  bool sd = true;
  bool hybrid_attention = true;
  bool rvs_self_attention = true;
  double mask_threshold = 0.5;
  double validity_threshold = 0.5;
  double outlier_threshold = 1.5;
  std::vector<double> frechet_thresholds{1.0, 2.0, 3.0};
  double topology_match_threshold = 1.0;
  std::vector<double> iou_thresholds{0.5, 0.75};
  int sd_layers = 1;
  int sd_types = kSdSemanticTypes;
  int mask_point_dim = 16;
  double noise_sigma = 0.05;
  std::uint64_t seed = 0;
  std::string out_dir = ".";

  static PipelineConfig desk() {
    PipelineConfig c;
    c.num_real = 16;
    c.num_virtual = 16;
    c.channels = 32;
    c.layers = 2;
    c.heads = 2;
    c.ffn_dim = 64;
    return c;
  }

  DecoderConfig decoder() const {
    DecoderConfig d;
    d.channels = channels;
    d.heads = heads;
    d.sampling_points = sampling_points;
    d.layers = layers;
    d.k = k;
    d.num_real = num_real;
    d.num_virtual = num_virtual;
    d.ffn_dim = ffn_dim;
    d.hybrid_attention = hybrid_attention;
    d.rvs_self_attention = rvs_self_attention;
    d.points_guided_masks = pgm;
    d.mask_threshold = mask_threshold;
    return d;
  }

  GridSpec grid() const {
    GridSpec g;
    g.rows = grid_rows;
    g.cols = grid_cols;
    g.resolution = resolution;
    return g;
  }

  MetricConfig metrics() const {
    MetricConfig m;
    m.frechet_thresholds = frechet_thresholds;
    m.topology_match_threshold = topology_match_threshold;
    m.iou_thresholds = iou_thresholds;
    m.frechet_points = k;
    return m;
  }

  FusionParams fusion() const { return {validity_threshold, outlier_threshold}; }

  LossConfig loss() const {
    LossConfig l;
    l.lambda = lambda;
    l.focal = focal;
    return l;
  }

  void validate() const {
    if (k < 2) throw ConfigError("config: K must be >= 2");
    if (num_real < 0 || num_virtual < 0 || num_real + num_virtual == 0) throw ConfigError("config: need at least one query");
    if (channels <= 0 || channels % 4 != 0) throw ConfigError("config: channels must be a positive multiple of 4");
    if (heads <= 0 || channels % heads != 0) throw ConfigError("config: channels must divide into heads");
    if (layers < 1 || sampling_points < 1 || ffn_dim < 1) throw ConfigError("config: layers, sampling points and FFN width must be >= 1");
    if (grid_rows < 2 || grid_cols < 2 || !(resolution > 0.0)) throw ConfigError("config: grid must be at least 2x2 with positive resolution");
    if (pmf && !pgm) throw ConfigError("config: points-mask fusion requires points-guided masks");
    if (!(validity_threshold > 0.0 && validity_threshold < 1.0)) throw ConfigError("config: validity threshold must be in (0,1)");
    if (!(outlier_threshold > 0.0)) throw ConfigError("config: outlier threshold must be positive");
    if (!(mask_threshold > 0.0 && mask_threshold < 1.0)) throw ConfigError("config: mask threshold must be in (0,1)");
    if (frechet_thresholds.empty() || !std::is_sorted(frechet_thresholds.begin(), frechet_thresholds.end())) {
      throw ConfigError("config: Frechet thresholds must be non-empty and ascending");
    }
    if (iou_thresholds.empty()) throw ConfigError("config: IoU thresholds must be non-empty");
    if (sd_layers < 0 || sd_types < 1 || mask_point_dim < 1) throw ConfigError("config: bad SD or mask encoder sizes");
    if (noise_sigma < 0.0) throw ConfigError("config: noise must be non-negative");
  }
};

inline nlohmann::json config_to_json(const PipelineConfig& c) {
  return {{"num_real", c.num_real},
          {"num_virtual", c.num_virtual},
          {"k", c.k},
          {"channels", c.channels},
          {"layers", c.layers},
          {"heads", c.heads},
          {"sampling_points", c.sampling_points},
          {"ffn_dim", c.ffn_dim},
          {"grid_rows", c.grid_rows},
          {"grid_cols", c.grid_cols},
          {"resolution", c.resolution},
          {"lambda_top", c.lambda.top},
          {"lambda_cls", c.lambda.cls},
          {"lambda_det", c.lambda.det},
          {"lambda_mask", c.lambda.mask},
          {"lambda_mp", c.lambda.mp},
          {"focal_alpha", c.focal.alpha},
          {"focal_gamma", c.focal.gamma},
          {"pgm", c.pgm},
          {"pmf", c.pmf},
          {"sd", c.sd},
          {"hybrid_attention", c.hybrid_attention},
          {"rvs_self_attention", c.rvs_self_attention},
          {"mask_threshold", c.mask_threshold},
          {"validity_threshold", c.validity_threshold},
          {"outlier_threshold", c.outlier_threshold},
          {"frechet_thresholds", c.frechet_thresholds},
          {"topology_match_threshold", c.topology_match_threshold},
          {"iou_thresholds", c.iou_thresholds},
          {"sd_layers", c.sd_layers},
          {"sd_types", c.sd_types},
          {"mask_point_dim", c.mask_point_dim},
          {"noise_sigma", c.noise_sigma},
          {"seed", c.seed},
          {"out_dir", c.out_dir}};
}

// Missing keys keep the value from `base`; unknown keys are rejected.
inline PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig base = PipelineConfig::desk()) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  const nlohmann::json known = config_to_json(base);
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ConfigError("config: unknown field '" + key + "'");
  }
  auto get = [&](const char* key, auto& field) {
    if (!j.contains(key)) return;
    try {
      field = j.at(key).get<std::decay_t<decltype(field)>>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(std::string("config: bad type for '") + key + "'");
    }
  };
  PipelineConfig c = base;
  get("num_real", c.num_real);
  get("num_virtual", c.num_virtual);
  get("k", c.k);
  get("channels", c.channels);
  get("layers", c.layers);
  get("heads", c.heads);
  get("sampling_points", c.sampling_points);
  get("ffn_dim", c.ffn_dim);
  get("grid_rows", c.grid_rows);
  get("grid_cols", c.grid_cols);
  get("resolution", c.resolution);
  get("lambda_top", c.lambda.top);
  get("lambda_cls", c.lambda.cls);
  get("lambda_det", c.lambda.det);
  get("lambda_mask", c.lambda.mask);
  get("lambda_mp", c.lambda.mp);
  get("focal_alpha", c.focal.alpha);
  get("focal_gamma", c.focal.gamma);
  get("pgm", c.pgm);
  get("pmf", c.pmf);
  get("sd", c.sd);
  get("hybrid_attention", c.hybrid_attention);
  get("rvs_self_attention", c.rvs_self_attention);
  get("mask_threshold", c.mask_threshold);
  get("validity_threshold", c.validity_threshold);
  get("outlier_threshold", c.outlier_threshold);
  get("frechet_thresholds", c.frechet_thresholds);
  get("topology_match_threshold", c.topology_match_threshold);
  get("iou_thresholds", c.iou_thresholds);
  get("sd_layers", c.sd_layers);
  get("sd_types", c.sd_types);
  get("mask_point_dim", c.mask_point_dim);
  get("noise_sigma", c.noise_sigma);
  get("seed", c.seed);
  get("out_dir", c.out_dir);
  return c;
}

// ROADPAINTER_SEED and ROADPAINTER_OUT_DIR override the file values.
inline void apply_env_overrides(PipelineConfig& c) {
  if (const char* s = std::getenv("ROADPAINTER_SEED"); s != nullptr && *s != '\0') {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s, &end, 10);
    if (end == s || *end != '\0') throw ConfigError("ROADPAINTER_SEED is not an unsigned integer");
    c.seed = v;
  }
  if (const char* d = std::getenv("ROADPAINTER_OUT_DIR"); d != nullptr && *d != '\0') c.out_dir = d;
}

inline ModelWeights random_weights(const PipelineConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed ^ 0x5EEDF00DULL);
  ModelWeights w;
  const GridSpec grid = cfg.grid();
  w.sd = SdInteractionWeights::random(cfg.channels, cfg.sd_types, cfg.sd_layers, cfg.heads, cfg.sampling_points,
                                      cfg.ffn_dim, rng);
  w.decoder = DecoderWeights::random(cfg.decoder(), cfg.mask_point_dim, rng);
  w.topology = TopologyHeadWeights::random(cfg.channels, cfg.k, rng);
  w.readout = ReadoutHeads::random(grid, cfg.channels, rng);
  return w;
}

inline ModelWeights load_weights(const std::string& path, const PipelineConfig& cfg) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  ModelWeights w = random_weights(cfg, 0);
  weights_from_json(nlohmann::json::parse(is), w);
  return w;
}

struct EvalInputs {
  std::vector<CenterlinePrediction> predictions;
  TopologyMatrix topology;
  std::vector<InstanceMask> masks;  // empty: AP_l not evaluated
};

inline EvalReport evaluate(const EvalInputs& in, const Scene& scene, const GridSpec& grid, const MetricConfig& mc) {
  std::vector<ScoredPolyline> scored;
  for (const auto& p : in.predictions) scored.push_back({p.points, p.score});
  EvalReport r;
  r.det = det_l(scored, scene.centerlines, mc);
  r.top_ll = top_ll(scored, in.topology, scene.centerlines, scene.adjacency, mc);
  if (!in.masks.empty()) {
    require_dims(in.masks.size() == in.predictions.size(), "evaluate: one mask per prediction");
    std::vector<ScoredMask> sm;
    for (std::size_t i = 0; i < in.masks.size(); ++i) sm.push_back({in.masks[i], in.predictions[i].score});
    std::vector<CellMask> gt;
    for (const auto& line : scene.centerlines) gt.push_back(gt_instance_mask(grid, line));
    r.ap = mask_ap(sm, gt, mc);
  }
  return r;
}

// B: rendered features plus the positional encoding, then SD interaction when enabled.
inline BevGrid prepare_bev(const Scene& scene, const PipelineConfig& cfg, const ModelWeights& w,
                           const BevGrid* features = nullptr) {
  const GridSpec grid = cfg.grid();
  BevGrid b = features ? *features : render_bev_features(scene, grid, cfg.channels, cfg.noise_sigma, cfg.seed);
  if (b.height() != grid.rows || b.width() != grid.cols || b.channels() != cfg.channels) {
    throw DimensionError("pipeline: BEV features do not match the configured grid and channels");
  }
  if (b.spec() != grid) b = BevGrid(grid, b.data());
  const BevGrid pe = sinusoidal_pe_2d(grid, cfg.channels);
  b.data() += pe.data();
  if (cfg.sd) {
    const BevGrid semantic = rasterize_sdmap(scene.sd_instances, grid, w.sd.table);
    b = sd_interact(b, semantic, pe, w.sd);
  }
  return b;
}

struct PipelineResult {
  PipelineOutputs outputs;
  std::vector<Polyline> decoder_points;
  EvalReport report;
  LossBreakdown loss;
};

inline PipelineResult run_pipeline(const Scene& scene, const PipelineConfig& cfg, const ModelWeights& w,
                                   const BevGrid* features = nullptr) {
  cfg.validate();
  const GridSpec grid = cfg.grid();
  const DecoderConfig dc = cfg.decoder();
  const BevGrid bev = prepare_bev(scene, cfg, w, features);
  const DecoderOutput dec = decoder_forward(w.decoder.queries, bev, w.decoder, dc);
  const Matrix queries = dec.final_queries.stacked();

  PipelineResult res;
  PipelineOutputs& out = res.outputs;
  out.grid = grid;
  out.predictions = dec.predictions;
  for (const auto& p : dec.predictions) res.decoder_points.push_back(p.points);

  const Matrix enhanced = enhance_queries(queries, res.decoder_points, w.topology.query_mlp, w.topology.geometry_mlp);
  out.topology = predict_topology(enhanced, w.topology.classifier);

  for (std::size_t i = 0; i < dec.predictions.size(); ++i) {
    const Vector q = queries.row(static_cast<Eigen::Index>(i)).transpose();
    const Vector qp = cfg.pgm ? encode_mask_query(q, res.decoder_points[i], w.decoder.mask_encoder)
                              : position_free_mask_query(q, w.decoder.mask_encoder);
    out.masks.push_back(generate_mask(bev, qp));
    out.column_readouts.push_back(read_mask(out.masks.back(), qp, w.readout, ReadoutAxis::kColumns));
    out.row_readouts.push_back(read_mask(out.masks.back(), qp, w.readout, ReadoutAxis::kRows));
  }

  if (cfg.pmf) {
    for (std::size_t i = 0; i < out.predictions.size(); ++i) {
      if (!out.predictions[i].is_real) continue;
      const auto& chosen = select_point_set(out.column_readouts[i], out.row_readouts[i], cfg.validity_threshold);
      out.predictions[i].points = fuse_points(res.decoder_points[i], chosen, grid, cfg.k, cfg.fusion());
    }
  }

  EvalInputs ev{out.predictions, out.topology, cfg.pgm ? out.masks : std::vector<InstanceMask>{}};
  res.report = evaluate(ev, scene, grid, cfg.metrics());
  res.loss = total_loss(out, scene, cfg.loss());
  return res;
}

// ---- prediction file ----

inline nlohmann::json mask_runs(const InstanceMask& m) {
  nlohmann::json runs = nlohmann::json::array();
  Eigen::Index i = 0;
  const Eigen::Index n = m.logits.size();
  while (i < n) {
    if (m.logits[i] < 0.0) {
      ++i;
      continue;
    }
    const Eigen::Index start = i;
    while (i < n && m.logits[i] >= 0.0) ++i;
    runs.push_back({start, i - start});
  }
  return runs;
}

inline nlohmann::json prediction_to_json(const PipelineResult& r, const PipelineConfig& cfg) {
  nlohmann::json j;
  j["format"] = "roadpainter.prediction";
  j["version"] = 1;
  j["units"] = "meters";
  j["grid"] = {{"rows", cfg.grid_rows}, {"cols", cfg.grid_cols}, {"resolution", cfg.resolution}};
  j["toggles"] = {{"pgm", cfg.pgm}, {"pmf", cfg.pmf}, {"sd", cfg.sd}, {"hybrid_attention", cfg.hybrid_attention},
                  {"rvs_self_attention", cfg.rvs_self_attention}};
  j["centerlines"] = nlohmann::json::array();
  for (std::size_t i = 0; i < r.outputs.predictions.size(); ++i) {
    const auto& p = r.outputs.predictions[i];
    j["centerlines"].push_back(
        {{"id", i}, {"is_real", p.is_real}, {"score", p.score}, {"points", polyline_to_json(p.points)}});
  }
  std::vector<std::vector<double>> adj;
  for (Eigen::Index i = 0; i < r.outputs.topology.rows(); ++i) {
    adj.emplace_back(r.outputs.topology.row(i).begin(), r.outputs.topology.row(i).end());
  }
  j["adjacency"] = adj;
  if (cfg.pgm) {
    j["masks"] = nlohmann::json::array();
    for (std::size_t i = 0; i < r.outputs.masks.size(); ++i) j["masks"].push_back({{"id", i}, {"runs", mask_runs(r.outputs.masks[i])}});
  }
  j["report"] = report_to_json(r.report);
  j["loss"] = loss_to_json(r.loss);
  return j;
}

// Inverse of prediction_to_json for evaluation; masks come back as +-1 logits.
inline EvalInputs prediction_from_json(const nlohmann::json& j, GridSpec* grid_out = nullptr) {
  if (j.value("format", std::string()) != "roadpainter.prediction") throw std::invalid_argument("not a roadpainter prediction file");
  GridSpec grid;
  grid.rows = j.at("grid").at("rows").get<int>();
  grid.cols = j.at("grid").at("cols").get<int>();
  grid.resolution = j.at("grid").at("resolution").get<double>();
  if (grid_out) *grid_out = grid;
  EvalInputs in;
  for (const auto& c : j.at("centerlines")) {
    in.predictions.push_back({polyline_from_json(c.at("points")), c.at("score").get<double>(), c.at("is_real").get<bool>(), Vector()});
  }
  const auto n = static_cast<Eigen::Index>(in.predictions.size());
  in.topology = Matrix::Zero(n, n);
  const auto& adj = j.at("adjacency");
  require_dims(static_cast<Eigen::Index>(adj.size()) == n, "prediction: adjacency size");
  for (Eigen::Index i = 0; i < n; ++i) {
    require_dims(static_cast<Eigen::Index>(adj[static_cast<std::size_t>(i)].size()) == n, "prediction: adjacency size");
    for (Eigen::Index k = 0; k < n; ++k) in.topology(i, k) = adj[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<double>();
  }
  if (j.contains("masks")) {
    for (const auto& m : j.at("masks")) {
      InstanceMask mask(grid.rows, grid.cols, Vector::Constant(grid.cells(), -1.0));
      for (const auto& run : m.at("runs")) {
        const auto start = run.at(0).get<Eigen::Index>();
        const auto len = run.at(1).get<Eigen::Index>();
        require_dims(start >= 0 && len >= 0 && start + len <= mask.logits.size(), "prediction: mask run out of range");
        mask.logits.segment(start, len).setConstant(1.0);
      }
      in.masks.push_back(std::move(mask));
    }
  }
  return in;
}

// ---- oracle weights ----

struct OracleSetup {
  PipelineConfig config;
  ModelWeights weights;
};

// Hand-built weights whose predictions reproduce the scene's centerlines.
// Hybrid attention and the mask branches are switched off and every residual
// branch output projection is zeroed, so the final queries are a fixed
// function of the learned queries; a linear points/score head is then solved
// by least squares to hit logit-encoded GT exactly. Needs N_L <= C - 1 so the
// interpolation is exact.
inline OracleSetup oracle_setup(const Scene& scene, PipelineConfig cfg, std::uint64_t seed) {
  cfg.hybrid_attention = false;
  cfg.pgm = false;
  cfg.pmf = false;
  cfg.sd = false;
  cfg.validate();
  const auto real_gt = scene.indices_of(true);
  const auto virt_gt = scene.indices_of(false);
  if (static_cast<int>(real_gt.size()) > cfg.num_real || static_cast<int>(virt_gt.size()) > cfg.num_virtual) {
    throw ConfigError("oracle: not enough queries for the scene's centerlines");
  }
  if (cfg.num_real + cfg.num_virtual > cfg.channels - 1) throw ConfigError("oracle: needs N_R + N_V <= C - 1");

  ModelWeights w = random_weights(cfg, seed);
  for (auto& layer : w.decoder.layers) {
    layer.deform.out_w.setZero();
    layer.deform.out_b.setZero();
    layer.ffn.layers.back().weight.setZero();
    layer.ffn.layers.back().bias.setZero();
  }
  const int n = cfg.num_real + cfg.num_virtual;
  const int c = cfg.channels;
  w.decoder.points_head = MlpWeights::zeros({c, 3 * cfg.k});
  w.decoder.score_head = MlpWeights::zeros({c, 1});

  const BevGrid bev = prepare_bev(scene, cfg, w);
  const Matrix q = decoder_forward(w.decoder.queries, bev, w.decoder, cfg.decoder()).final_queries.stacked();

  Matrix x(n, c + 1);
  x.leftCols(c) = q;
  x.col(c).setOnes();
  Matrix y = Matrix::Zero(n, 3 * cfg.k + 1);
  y.col(3 * cfg.k).setConstant(-20.0);
  auto assign = [&](int row, int gt) {
    y.row(row).head(3 * cfg.k) = encode_points(resample_polyline(scene.centerlines[static_cast<std::size_t>(gt)], cfg.k)).transpose();
    y(row, 3 * cfg.k) = 20.0;
  };
  for (std::size_t i = 0; i < real_gt.size(); ++i) assign(static_cast<int>(i), real_gt[i]);
  for (std::size_t i = 0; i < virt_gt.size(); ++i) assign(cfg.num_real + static_cast<int>(i), virt_gt[i]);

  const Matrix sol = x.completeOrthogonalDecomposition().solve(y);  // (C+1) x (3K+1)
  const double residual = (x * sol - y).cwiseAbs().maxCoeff();
  if (!(residual < 1e-6)) throw std::runtime_error("oracle: least-squares fit is not exact (residual " + std::to_string(residual) + ")");
  w.decoder.points_head.layers[0].weight = sol.topLeftCorner(c, 3 * cfg.k).transpose();
  w.decoder.points_head.layers[0].bias = sol.row(c).head(3 * cfg.k).transpose();
  w.decoder.score_head.layers[0].weight = sol.topRightCorner(c, 1).transpose();
  w.decoder.score_head.layers[0].bias = Vector::Constant(1, sol(c, 3 * cfg.k));
  return {cfg, w};
}

// ---- ablation grid ----

struct AblationRow {
  bool pgm = false;
  bool pmf = false;
  bool sd = false;
  bool ok = false;
  std::string error;
  EvalReport report;
};

inline std::vector<AblationRow> run_ablation(const Scene& scene, const PipelineConfig& base, const ModelWeights& w) {
  std::vector<AblationRow> rows;
  for (int mask = 0; mask < 8; ++mask) {
    AblationRow row;
    row.pgm = (mask & 4) != 0;
    row.pmf = (mask & 2) != 0;
    row.sd = (mask & 1) != 0;
    PipelineConfig cfg = base;
    cfg.pgm = row.pgm;
    cfg.pmf = row.pmf;
    cfg.sd = row.sd;
    try {
      row.report = run_pipeline(scene, cfg, w).report;
      row.ok = true;
    } catch (const ConfigError& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline nlohmann::json ablation_to_json(const std::vector<AblationRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json j = {{"pgm", r.pgm}, {"pmf", r.pmf}, {"sd", r.sd}, {"ok", r.ok}};
    if (r.ok) {
      j["det_l"] = r.report.det.map;
      j["top_ll"] = r.report.top_ll;
      j["ap_l"] = r.report.ap ? nlohmann::json(r.report.ap->map) : nlohmann::json(nullptr);
    } else {
      j["error"] = r.error;
    }
    arr.push_back(j);
  }
  return arr;
}

inline std::string ablation_table(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  auto mark = [](bool b) { return b ? "  x  " : "     "; };
  os << " PGM   PMF   SD  |  DET_l   TOP_ll   AP_l\n";
  os << "-----------------+-------------------------\n";
  char buf[96];
  for (const auto& r : rows) {
    os << mark(r.pgm) << ' ' << mark(r.pmf) << ' ' << mark(r.sd) << "|";
    if (!r.ok) {
      os << "  invalid (" << r.error << ")\n";
      continue;
    }
    if (r.report.ap) {
      std::snprintf(buf, sizeof(buf), " %6.1f  %6.1f  %6.1f\n", 100.0 * r.report.det.map, 100.0 * r.report.top_ll,
                    100.0 * r.report.ap->map);
    } else {
      std::snprintf(buf, sizeof(buf), " %6.1f  %6.1f     -\n", 100.0 * r.report.det.map, 100.0 * r.report.top_ll);
    }
    os << buf;
  }
  return os.str();
}

}  // namespace roadpainter
