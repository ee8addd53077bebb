#include <roadpainter/roadpainter.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace rp = roadpainter;
using nlohmann::json;

namespace {

json read_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return json::parse(is);
}

void write_text(const std::string& path, const std::string& text) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << text;
}

std::string output_path(const std::string& given, const rp::PipelineConfig& cfg, const char* fallback) {
  if (!given.empty()) return given;
  return (std::filesystem::path(cfg.out_dir) / fallback).string();
}

rp::PipelineConfig load_config(const std::string& path) {
  rp::PipelineConfig cfg = path.empty() ? rp::PipelineConfig::desk() : rp::config_from_json(read_json(path));
  rp::apply_env_overrides(cfg);
  return cfg;
}

int gradcheck(int points, std::uint64_t seed) {
  rp::Rng rng(seed);
  struct Term {
    const char* name;
    rp::GradTerm term;
  };
  const Term terms[] = {{"focal", rp::GradTerm::kFocal},
                        {"bce", rp::GradTerm::kBce},
                        {"l1", rp::GradTerm::kL1},
                        {"dice", rp::GradTerm::kDice},
                        {"softargmax", rp::GradTerm::kSoftargmax}};
  bool ok = true;
  for (const auto& t : terms) {
    double worst = 0.0;
    for (int i = 0; i < points; ++i) {
      rp::GradCheckPoint pt;
      switch (t.term) {
        case rp::GradTerm::kFocal:
          pt.inputs = rp::Vector::Constant(1, rng.uniform(0.05, 0.95));
          pt.targets = rp::Vector::Constant(1, rng.uniform() < 0.5 ? 0.0 : 1.0);
          break;
        case rp::GradTerm::kBce:
        case rp::GradTerm::kDice:
          pt.inputs = rp::Vector(9);
          pt.targets = rp::Vector(9);
          for (int k = 0; k < 9; ++k) {
            pt.inputs[k] = rng.uniform(0.05, 0.95);
            pt.targets[k] = rng.uniform() < 0.5 ? 0.0 : 1.0;
          }
          break;
        case rp::GradTerm::kL1:
          pt.inputs = rp::Vector(9);
          pt.targets = rp::Vector(9);
          for (int k = 0; k < 9; ++k) {
            pt.targets[k] = rng.uniform(-1.0, 1.0);
            const double gap = rng.uniform(0.05, 1.0);
            pt.inputs[k] = pt.targets[k] + (rng.uniform() < 0.5 ? -gap : gap);
          }
          break;
        case rp::GradTerm::kSoftargmax:
          pt.inputs = rp::Vector(8);
          for (int k = 0; k < 8; ++k) pt.inputs[k] = rng.normal(0.0, 3.0);
          break;
      }
      worst = std::max(worst, rp::analytic_grad_check(t.term, pt));
    }
    const bool pass = worst < 1e-4;
    ok = ok && pass;
    std::printf("%-11s max rel err %.3e  %s\n", t.name, worst, pass ? "ok" : "FAIL");
  }
  return ok ? 0 : 1;
}

int selftest() {
  int failures = 0;
  auto check = [&](const char* name, bool pass) {
    std::printf("[%s] %s\n", pass ? "PASS" : "FAIL", name);
    failures += pass ? 0 : 1;
  };

  const rp::Scene scene = rp::synth_scene(7);
  check("synthetic scene validates", rp::validate_scene(scene).empty());
  check("scene JSON round-trips",
        rp::scene_to_json(rp::scene_from_json(rp::scene_to_json(scene))).dump() == rp::scene_to_json(scene).dump());

  std::vector<rp::ScoredPolyline> perfect;
  for (const auto& l : scene.centerlines) perfect.push_back({l, 1.0});
  rp::Matrix adj(static_cast<Eigen::Index>(scene.size()), static_cast<Eigen::Index>(scene.size()));
  for (std::size_t i = 0; i < scene.size(); ++i)
    for (std::size_t j = 0; j < scene.size(); ++j) adj(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = scene.adjacency[i][j];
  check("DET_l of GT is 1", rp::det_l(perfect, scene.centerlines).map == 1.0);
  check("TOP_ll of GT is 1", rp::top_ll(perfect, adj, scene.centerlines, scene.adjacency) == 1.0);
  check("DET_l of nothing is 0", rp::det_l({}, scene.centerlines).map == 0.0);

  rp::Matrix cost(2, 2);
  cost << 1, 2, 2, 1;
  const auto a = rp::hungarian(cost);
  check("hungarian 2x2", a.cost == 2.0 && a.pairs.size() == 2 && a.pairs[0] == std::make_pair(0, 0));

  rp::PointSet2 pts;
  pts.points = {{0.0, 0.0}, {0.5, 0.0}, {1.25, 1.9843}, {2.0, 0.0}, {2.5, 0.0}};
  pts.valid.assign(pts.points.size(), true);
  check("outlier removal at 1.5 m", !rp::filter_outliers(pts, 1.5).valid[2]);

  rp::PipelineConfig cfg = rp::PipelineConfig::desk();
  cfg.grid_rows = 50;
  cfg.grid_cols = 100;
  cfg.resolution = 1.0;
  const auto w = rp::random_weights(cfg, 1);
  const auto r1 = rp::prediction_to_json(rp::run_pipeline(scene, cfg, w), cfg).dump();
  const auto r2 = rp::prediction_to_json(rp::run_pipeline(scene, cfg, w), cfg).dump();
  check("pipeline is deterministic", r1 == r2);
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"roadpainter: lane centerline and topology pipeline on synthetic BEV scenes"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic scene");
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  rp::SceneParams params;
  synth->add_option("--seed", synth_seed, "scene seed")->required();
  synth->add_option("--out", synth_out, "output scene JSON")->required();
  synth->add_option("--lanes-min", params.lanes_min);
  synth->add_option("--lanes-max", params.lanes_max);
  synth->add_option("--intersections", params.intersections, "0 or 1");
  synth->add_option("--shape", params.road_shape, "-1 random, 0 straight, 1 arc, 2 clothoid-like");
  bool no_opposite = false;
  synth->add_flag("--no-opposite", no_opposite, "one driving direction only");

  // render-bev
  auto* render = app.add_subcommand("render-bev", "render BEV features for a scene");
  std::string render_scene, render_out, render_config;
  double render_noise = 0.0;
  render->add_option("--scene", render_scene)->required();
  render->add_option("--noise", render_noise, "Gaussian noise std-dev");
  render->add_option("--config", render_config);
  render->add_option("--out", render_out)->required();

  // run
  auto* run = app.add_subcommand("run", "run the pipeline on a scene");
  std::string run_scene, run_config, run_weights, run_out, run_bev;
  bool toggle_pgm = false, toggle_pmf = false, toggle_sd = false, no_rvs = false, no_hybrid = false, oracle = false;
  run->add_option("--scene", run_scene)->required();
  run->add_option("--config", run_config);
  run->add_option("--weights", run_weights, "weights JSON; default: random from the config seed");
  run->add_option("--bev", run_bev, "precomputed BEV container instead of rendering");
  run->add_flag("--oracle-weights", oracle, "least-squares oracle weights for this scene");
  run->add_flag("--toggle-pgm", toggle_pgm, "flip points-guided mask generation");
  run->add_flag("--toggle-pmf", toggle_pmf, "flip points-mask fusion");
  run->add_flag("--toggle-sd", toggle_sd, "flip SD map interaction");
  run->add_flag("--no-rvs", no_rvs, "plain self-attention instead of RVS");
  run->add_flag("--no-hybrid", no_hybrid, "drop the masked cross-attention branch");
  run->add_option("--out", run_out);

  // eval
  auto* eval = app.add_subcommand("eval", "score a prediction file against a scene");
  std::string eval_pred, eval_gt, eval_out, eval_config;
  eval->add_option("--pred", eval_pred)->required();
  eval->add_option("--gt", eval_gt)->required();
  eval->add_option("--config", eval_config, "metric thresholds");
  eval->add_option("--out", eval_out);

  // viz
  auto* viz = app.add_subcommand("viz", "SVG plot of a scene and predictions");
  std::string viz_scene, viz_pred, viz_out;
  double viz_min_score = 0.5;
  viz->add_option("--scene", viz_scene)->required();
  viz->add_option("--pred", viz_pred);
  viz->add_option("--min-score", viz_min_score);
  viz->add_option("--out", viz_out)->required();

  // weights
  auto* weights = app.add_subcommand("weights", "write randomly initialized weights");
  std::string weights_config, weights_out;
  std::uint64_t weights_seed = 0;
  weights->add_option("--config", weights_config);
  weights->add_option("--seed", weights_seed);
  weights->add_option("--out", weights_out)->required();

  // ablate
  auto* ablate = app.add_subcommand("ablate", "PGM/PMF/SD toggle grid on one scene");
  std::string ablate_scene, ablate_config, ablate_out;
  ablate->add_option("--scene", ablate_scene, "default: synthetic scene from the config seed");
  ablate->add_option("--config", ablate_config);
  ablate->add_option("--out", ablate_out);

  auto* grad = app.add_subcommand("gradcheck", "finite-difference check of the loss gradients");
  int grad_points = 50;
  std::uint64_t grad_seed = 1;
  grad->add_option("--points", grad_points);
  grad->add_option("--seed", grad_seed);

  auto* self = app.add_subcommand("selftest", "quick end-to-end sanity checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      params.opposite_lanes = !no_opposite;
      write_text(synth_out, rp::scene_to_json(rp::synth_scene(synth_seed, params)).dump(2) + "\n");
    } else if (*render) {
      const auto cfg = load_config(render_config);
      const auto scene = rp::scene_from_json(read_json(render_scene));
      rp::save_bev(rp::render_bev_features(scene, cfg.grid(), cfg.channels, render_noise, cfg.seed), render_out);
    } else if (*run) {
      auto cfg = load_config(run_config);
      if (toggle_pgm) cfg.pgm = !cfg.pgm;
      if (toggle_pmf) cfg.pmf = !cfg.pmf;
      if (toggle_sd) cfg.sd = !cfg.sd;
      if (no_rvs) cfg.rvs_self_attention = false;
      if (no_hybrid) cfg.hybrid_attention = false;
      const auto scene = rp::scene_from_json(read_json(run_scene));
      rp::ModelWeights w;
      if (oracle) {
        auto setup = rp::oracle_setup(scene, cfg, cfg.seed);
        cfg = setup.config;
        w = std::move(setup.weights);
      } else {
        cfg.validate();
        w = run_weights.empty() ? rp::random_weights(cfg, cfg.seed) : rp::load_weights(run_weights, cfg);
      }
      std::optional<rp::BevGrid> bev;
      if (!run_bev.empty()) bev = rp::load_bev(run_bev, cfg.resolution);
      const auto result = rp::run_pipeline(scene, cfg, w, bev ? &*bev : nullptr);
      const auto path = output_path(run_out, cfg, "pred.json");
      write_text(path, rp::prediction_to_json(result, cfg).dump() + "\n");
      std::cout << rp::report_to_json(result.report).dump(2) << "\n";
    } else if (*eval) {
      const auto cfg = load_config(eval_config);
      rp::GridSpec grid;
      const auto in = rp::prediction_from_json(read_json(eval_pred), &grid);
      const auto scene = rp::scene_from_json(read_json(eval_gt));
      const auto report = rp::report_to_json(rp::evaluate(in, scene, grid, cfg.metrics())).dump(2) + "\n";
      if (eval_out.empty()) std::cout << report;
      else write_text(eval_out, report);
    } else if (*viz) {
      const auto scene = rp::scene_from_json(read_json(viz_scene));
      std::vector<rp::CenterlinePrediction> preds;
      if (!viz_pred.empty()) preds = rp::prediction_from_json(read_json(viz_pred)).predictions;
      write_text(viz_out, rp::render_svg(scene, preds, viz_min_score));
    } else if (*weights) {
      const auto cfg = load_config(weights_config);
      rp::save_weights(rp::random_weights(cfg, weights_seed), weights_out);
    } else if (*ablate) {
      const auto cfg = load_config(ablate_config);
      const auto scene = ablate_scene.empty() ? rp::synth_scene(cfg.seed) : rp::scene_from_json(read_json(ablate_scene));
      auto base = cfg;
      base.pmf = false;  // the grid sets every toggle itself
      const auto rows = rp::run_ablation(scene, base, rp::random_weights(base, cfg.seed));
      std::cout << rp::ablation_table(rows);
      if (!ablate_out.empty()) write_text(ablate_out, rp::ablation_to_json(rows).dump(2) + "\n");
    } else if (*grad) {
      return gradcheck(grad_points, grad_seed);
    } else if (*self) {
      return selftest();
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
