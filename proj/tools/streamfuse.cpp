// streamfuse command line: synthetic data, slicing, projection, end-to-end
// runs, evaluation, calibration-noise sweeps, stream simulation and FLOPs.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "streamfuse/streamfuse.hpp"

namespace sf = streamfuse;
namespace fs = std::filesystem;

namespace {

struct CommonOpts {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> n_slices;
  std::optional<std::string> out;
  std::vector<int> no_camera;
  std::optional<double> noise_deg;
  std::optional<double> noise_cm;
  bool no_image = false;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool noise) {
  cmd->add_option("--config", o.config, "Run configuration (JSON)");
  cmd->add_option("--seed", o.seed, "Seed for all randomness");
  cmd->add_option("--n-slices", o.n_slices, "Slices per rotation");
  cmd->add_option("--out", o.out, "Output directory");
  if (noise) {
    cmd->add_option("--no-camera", o.no_camera, "Disable camera index (repeatable)");
    cmd->add_option("--noise-deg", o.noise_deg, "Max calibration rotation noise per axis (degrees)");
    cmd->add_option("--noise-cm", o.noise_cm, "Max calibration translation noise per axis (cm)");
    cmd->add_flag("--no-image", o.no_image, "Drop the image stream (zero image BEV)");
  }
}

sf::RunConfig resolve(const CommonOpts& o) {
  sf::RunConfig cfg = o.config.empty() ? sf::RunConfig{} : sf::load_run_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.n_slices) cfg.n_slices = *o.n_slices;
  if (o.out) cfg.out = *o.out;
  for (int k : o.no_camera) cfg.disabled_cameras.push_back(k);
  if (o.noise_deg) cfg.noise.max_angle_deg = *o.noise_deg;
  if (o.noise_cm) cfg.noise.max_trans_m = *o.noise_cm / 100.0;
  if (o.no_image) cfg.image_stream = false;
  cfg.validate();
  return cfg;
}

sf::SceneData scene_for(const std::string& bundle, const sf::RunConfig& cfg) {
  return bundle.empty() ? sf::generate_scene(cfg.seed, cfg.synthetic) : sf::load_bundle(bundle);
}

sf::NoiseLevel parse_level(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw sf::ConfigError("noise level must be deg:cm, got '" + s + "'");
  try {
    return {std::stod(s.substr(0, colon)), std::stod(s.substr(colon + 1))};
  } catch (const std::exception&) {
    throw sf::ConfigError("noise level must be deg:cm, got '" + s + "'");
  }
}

std::vector<sf::PipelineModel> builtin_models() {
  return {sf::single_stage_model("parallel", 15.8, false), sf::single_stage_model("sequential", 1000.0 / 37.0 - 6.25, true)};
}

int cmd_gen(const CommonOpts& o, int n_objects) {
  auto cfg = resolve(o);
  if (n_objects >= 0) cfg.synthetic.n_objects = n_objects;
  cfg.validate();
  const auto scene = sf::generate_scene(cfg.seed, cfg.synthetic);
  sf::save_bundle(cfg.out, scene);
  sf::io::save_detections(fs::path(cfg.out) / "gt.csv", sf::ground_truth(scene));
  fmt::print("frame {}: {} points, {} boxes, {} cameras -> {}\n", scene.frame_id, scene.points.size(),
             scene.boxes.size(), scene.rig.size(), cfg.out);
  return 0;
}

int cmd_slice(const CommonOpts& o, const std::string& bundle) {
  const auto cfg = resolve(o);
  const auto scene = scene_for(bundle, cfg);
  const fs::path out(cfg.out);
  std::string assign = "slice,box,class\n";
  std::string summary = "slice,az_start_deg,az_end_deg,points,cameras\n";
  for (const auto& s : sf::slice_sweep(scene.points, cfg.n_slices)) {
    sf::io::save_points(out / fmt::format("slice_{}.bin", s.spec.index), s.points);
    for (std::size_t b = 0; b < scene.boxes.size(); ++b) {
      if (sf::box_touches_slice(scene.boxes[b], s.spec)) {
        assign += fmt::format("{},{},{}\n", s.spec.index, b, scene.boxes[b].class_id);
      }
    }
    summary += fmt::format("{},{:.4f},{:.4f},{},{}\n", s.spec.index, s.spec.az_start_deg, s.spec.az_end_deg,
                           s.points.size(), fmt::join(sf::cameras_for_slice(s.spec, scene.rig), " "));
  }
  sf::io::write_text(out / "assignment.csv", assign);
  sf::io::write_text(out / "slices.csv", summary);
  std::cout << summary;
  return 0;
}

int cmd_project(const CommonOpts& o, const std::string& bundle) {
  const auto cfg = resolve(o);
  const auto scene = scene_for(bundle, cfg);
  const auto feats = sf::scene_features(scene, cfg);
  sf::CalibNoise noise = cfg.noise;
  noise.seed = cfg.seed;
  const auto rig = sf::perturb_rig(scene.rig, noise);
  std::vector<sf::FeatureImage> used;
  for (const auto& f : feats) {
    const bool off = std::find(cfg.disabled_cameras.begin(), cfg.disabled_cameras.end(), f.camera) !=
                     cfg.disabled_cameras.end();
    if (!off) used.push_back(f);
  }
  const auto& g = cfg.grid;
  sf::BevMap i_bev(g.nx(), g.ny(), g.channels);
  if (!used.empty()) {
    std::vector<sf::VoxelVolume> batch;
    for (int q = 0; q < 4; ++q) batch.push_back(sf::splat_to_volume(used, rig, g, sf::Quadrant{q}));
    batch = sf::batch_standardize(std::move(batch));
    for (int q = 0; q < 4; ++q) {
      const auto part = sf::uncrop(sf::reduce_volume_to_bev(batch[q]), sf::Quadrant{q}, g.nx(), g.ny());
      for (std::size_t k = 0; k < part.data.size(); ++k) i_bev.data[k] += part.data[k];
      for (std::size_t k = 0; k < part.mask.size(); ++k) i_bev.mask[k] |= part.mask[k];
    }
  }
  const auto encoder = sf::make_encoder(cfg);
  const auto p_bev = sf::encode_pillars(sf::pillarize(std::span<const sf::PointRecord>(scene.points), g), g, *encoder);
  const fs::path out(cfg.out);
  sf::io::save_bev(out / "i_bev.sfbv", i_bev);
  sf::io::save_bev(out / "p_bev.sfbv", p_bev);
  fmt::print("BEV {}x{}x{} -> {}\n", g.nx(), g.ny(), g.channels, cfg.out);
  return 0;
}

int cmd_run(const CommonOpts& o, const std::string& bundle) {
  const auto cfg = resolve(o);
  const auto scene = scene_for(bundle, cfg);
  const auto res = sf::run_pipeline(scene, cfg);
  sf::write_run_outputs(cfg.out, res);
  if (res.eval) {
    std::cout << sf::io::eval_to_csv(*res.eval);
  } else {
    fmt::print("{} detections, no ground truth\n", res.detections.size());
  }
  return 0;
}

int cmd_eval(const std::string& dets_path, const std::string& gt_path, const CommonOpts& o) {
  const auto cfg = resolve(o);
  const auto dets = sf::io::load_detections(dets_path);
  const auto gts = sf::io::load_detections(gt_path);
  const auto report = sf::evaluate_map(dets, gts, cfg.eval);
  const std::string csv = sf::io::eval_to_csv(report);
  if (o.out) sf::io::write_text(fs::path(*o.out) / "eval.csv", csv);
  std::cout << csv;
  return 0;
}

int cmd_noise_sweep(const CommonOpts& o, int n_seeds, const std::vector<std::string>& level_args) {
  const auto cfg = resolve(o);
  if (n_seeds < 1) throw sf::ConfigError("noise-sweep: --n-seeds must be >= 1");
  std::vector<std::uint64_t> seeds;
  for (int k = 0; k < n_seeds; ++k) seeds.push_back(cfg.seed + static_cast<std::uint64_t>(k));
  std::vector<sf::NoiseLevel> levels;
  for (const auto& s : level_args) levels.push_back(parse_level(s));
  if (levels.empty()) levels = sf::default_noise_levels();
  const auto res = sf::noise_sweep(cfg, seeds, levels);
  const fs::path out(cfg.out);
  sf::io::write_text(out / "sweep.csv", sf::sweep_to_csv(res));
  const std::string summary = sf::sweep_summary_to_csv(res);
  sf::io::write_text(out / "sweep_summary.csv", summary);
  std::cout << summary;
  return 0;
}

int cmd_simulate(const std::vector<std::string>& model_paths, int rotations, std::optional<double> budget_hz,
                 const std::optional<std::string>& out) {
  std::vector<sf::PipelineModel> models;
  for (const auto& p : model_paths) models.push_back(sf::io::load_pipeline(p));
  if (models.empty()) models = builtin_models();
  std::vector<sf::ComparisonRow> rows;
  for (const auto& m : models) {
    const auto trace = sf::simulate(m, rotations);
    if (out) sf::io::write_text(fs::path(*out) / fmt::format("trace_{}.csv", m.name), sf::io::trace_to_csv(trace));
    rows.push_back(sf::summarize(trace));
  }
  const std::string summary = sf::io::summary_to_csv(rows);
  if (out) sf::io::write_text(fs::path(*out) / "summary.csv", summary);
  std::cout << summary;
  if (budget_hz) {
    for (const auto& m : models) {
      fmt::print("budget,{},{:.4f}\n", m.name, sf::latency_budget(m, *budget_hz));
    }
  }
  return 0;
}

int cmd_flops(const CommonOpts& o) {
  const auto cfg = resolve(o);
  const std::vector<sf::CostRow> rows{sf::cost_row(sf::projection_conv_stage(cfg.grid))};
  const std::string csv = sf::io::cost_to_csv(rows);
  if (o.out) sf::io::write_text(fs::path(*o.out) / "flops.csv", csv);
  std::cout << csv;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sliced LiDAR + camera streaming detection toolkit"};
  app.require_subcommand(1);

  CommonOpts gen_o, slice_o, proj_o, run_o, eval_o, sweep_o, flops_o;
  std::string bundle;
  int n_objects = -1;

  auto* gen = app.add_subcommand("gen", "Generate a synthetic scene bundle");
  add_common(gen, gen_o, false);
  gen->add_option("--n-objects", n_objects, "Number of objects (default from config)");

  auto* slice = app.add_subcommand("slice", "Dump per-slice point files and GT assignment");
  add_common(slice, slice_o, false);
  slice->add_option("--bundle", bundle, "Scene bundle directory (default: synthetic scene from --seed)");

  auto* project = app.add_subcommand("project", "Splat camera features, reduce to BEV and dump both BEV maps");
  add_common(project, proj_o, true);
  project->add_option("--bundle", bundle, "Scene bundle directory");

  auto* run = app.add_subcommand("run", "Full sliced pipeline with evaluation");
  add_common(run, run_o, true);
  run->add_option("--bundle", bundle, "Scene bundle directory");

  std::string dets_path, gt_path;
  auto* eval = app.add_subcommand("eval", "Center-distance mAP from detection CSVs");
  add_common(eval, eval_o, false);
  eval->add_option("--detections", dets_path, "Detections CSV")->required();
  eval->add_option("--gt", gt_path, "Ground-truth CSV (same layout)")->required();

  int n_seeds = 10;
  std::vector<std::string> levels;
  auto* sweep = app.add_subcommand("noise-sweep", "mAP versus calibration noise on synthetic scenes");
  add_common(sweep, sweep_o, false);
  sweep->add_option("--n-seeds", n_seeds, "Number of scene seeds, starting at --seed");
  sweep->add_option("--level", levels, "Noise level deg:cm (repeatable)");

  std::vector<std::string> models;
  int rotations = 4;
  std::optional<double> budget_hz;
  std::optional<std::string> sim_out;
  auto* simulate = app.add_subcommand("simulate", "Discrete-event simulation of streaming pipelines");
  simulate->add_option("--model", models, "Pipeline model JSON (repeatable; default: built-in pair)");
  simulate->add_option("--rotations", rotations, "Rotations to simulate");
  simulate->add_option("--budget-hz", budget_hz, "Also report the per-slice latency budget for this rate");
  simulate->add_option("--out", sim_out, "Output directory for traces");

  auto* flops = app.add_subcommand("flops", "3D convolution FLOPs, full versus quadrant crop");
  add_common(flops, flops_o, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*gen) return cmd_gen(gen_o, n_objects);
    if (*slice) return cmd_slice(slice_o, bundle);
    if (*project) return cmd_project(proj_o, bundle);
    if (*run) return cmd_run(run_o, bundle);
    if (*eval) return cmd_eval(dets_path, gt_path, eval_o);
    if (*sweep) return cmd_noise_sweep(sweep_o, n_seeds, levels);
    if (*simulate) return cmd_simulate(models, rotations, budget_hz, sim_out);
    if (*flops) return cmd_flops(flops_o);
  } catch (const sf::ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return 2;
  } catch (const sf::DataError& e) {
    fmt::print(stderr, "data error: {}\n", e.what());
    return 3;
  }
  return 0;
}
