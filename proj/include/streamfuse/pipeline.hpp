#pragma once

// Run configuration, scene bundles on disk, and the end-to-end sliced
// LiDAR + camera pipeline.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "streamfuse/calib.hpp"
#include "streamfuse/detection.hpp"
#include "streamfuse/detector.hpp"
#include "streamfuse/fusion.hpp"
#include "streamfuse/image_bev.hpp"
#include "streamfuse/io.hpp"
#include "streamfuse/pillar.hpp"
#include "streamfuse/scene_gen.hpp"
#include "streamfuse/slicing.hpp"

namespace streamfuse {

namespace fs = std::filesystem;
using json = nlohmann::json;

/// Synthetic scene parameters used by `gen` and `noise-sweep`.
struct SyntheticConfig {
  int n_objects = 10;
  int image_w = 320;
  int image_h = 180;
  SceneGenConfig scene;
};

struct RunConfig {
  int n_slices = 8;
  std::uint64_t seed = 0;
  GridSpec grid;
  CalibNoise noise;  // noise.seed is filled from the scene at run time
  NmsRadii nms;
  EvalConfig eval;
  std::string pipeline_model;  // optional path, used by `simulate`
  std::string out = "out";
  std::vector<int> disabled_cameras;
  bool image_stream = true;
  std::string encoder_weights;  // optional path to an SFPE blob
  OccupancyPeakConfig detector;
  SyntheticConfig synthetic;

  void validate() const {
    if (n_slices < 1) throw ConfigError("config: n_slices must be >= 1");
    grid.validate();
    if (grid.nx() % 2 != 0 || grid.ny() % 2 != 0) throw ConfigError("config: grid X and Y must be even");
    if (grid.nz() % 4 != 0) throw ConfigError("config: grid Z must be divisible by 4");
    if (std::abs(grid.x_min + grid.x_max) > 1e-9 || std::abs(grid.y_min + grid.y_max) > 1e-9) {
      throw ConfigError("config: grid must be centered on the ego");
    }
    if (noise.max_angle_deg < 0.0 || noise.max_trans_m < 0.0) throw ConfigError("config: noise must be >= 0");
    nms.validate();
    eval.validate();
    if (detector.classes.empty()) throw ConfigError("config: detector needs class templates");
    if (!(detector.link_radius_m > 0.0) || detector.min_cells < 1 || !(detector.score_scale > 0.0)) {
      throw ConfigError("config: invalid detector parameters");
    }
    if (synthetic.n_objects < 0) throw ConfigError("config: n_objects must be >= 0");
    if (synthetic.image_w < 4 || synthetic.image_h < 4) throw ConfigError("config: image size too small");
  }
};

namespace detail {

template <class T>
void read_opt(const json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

inline std::vector<ClassTemplate> templates_from_json(const json& j) {
  std::vector<ClassTemplate> out;
  for (const auto& t : j) {
    out.push_back(ClassTemplate{t.at("class_id").get<int>(), t.at("length").get<double>(), t.at("width").get<double>(),
                                t.at("height").get<double>()});
  }
  return out;
}

inline json templates_to_json(const std::vector<ClassTemplate>& ts) {
  json out = json::array();
  for (const auto& t : ts) {
    out.push_back({{"class_id", t.class_id}, {"length", t.length}, {"width", t.width}, {"height", t.height}});
  }
  return out;
}

}  // namespace detail

inline RunConfig run_config_from_json(const json& j) {
  using detail::read_opt;
  RunConfig c;
  try {
    read_opt(j, "n_slices", c.n_slices);
    read_opt(j, "seed", c.seed);
    if (j.contains("grid")) {
      const auto& g = j.at("grid");
      read_opt(g, "x_min", c.grid.x_min);
      read_opt(g, "x_max", c.grid.x_max);
      read_opt(g, "y_min", c.grid.y_min);
      read_opt(g, "y_max", c.grid.y_max);
      read_opt(g, "z_min", c.grid.z_min);
      read_opt(g, "z_max", c.grid.z_max);
      read_opt(g, "cell_xy", c.grid.cell_xy);
      read_opt(g, "cell_z", c.grid.cell_z);
      read_opt(g, "channels", c.grid.channels);
    }
    if (j.contains("noise")) {
      const auto& n = j.at("noise");
      read_opt(n, "max_angle_deg", c.noise.max_angle_deg);
      if (n.contains("max_trans_cm")) c.noise.max_trans_m = n.at("max_trans_cm").get<double>() / 100.0;
    }
    if (j.contains("nms")) {
      const auto& n = j.at("nms");
      read_opt(n, "default_radius_m", c.nms.default_radius_m);
      if (n.contains("per_class")) {
        for (const auto& [k, v] : n.at("per_class").items()) c.nms.per_class[std::stoi(k)] = v.get<double>();
      }
    }
    if (j.contains("eval")) {
      read_opt(j.at("eval"), "thresholds_m", c.eval.thresholds_m);
      read_opt(j.at("eval"), "classes", c.eval.classes);
    }
    read_opt(j, "pipeline_model", c.pipeline_model);
    read_opt(j, "out", c.out);
    read_opt(j, "disabled_cameras", c.disabled_cameras);
    read_opt(j, "image_stream", c.image_stream);
    read_opt(j, "encoder_weights", c.encoder_weights);
    if (j.contains("detector")) {
      const auto& d = j.at("detector");
      if (d.contains("classes")) c.detector.classes = detail::templates_from_json(d.at("classes"));
      read_opt(d, "ground_z", c.detector.ground_z);
      read_opt(d, "link_radius_m", c.detector.link_radius_m);
      read_opt(d, "min_cells", c.detector.min_cells);
      read_opt(d, "image_gain", c.detector.image_gain);
      read_opt(d, "image_clip", c.detector.image_clip);
      read_opt(d, "score_scale", c.detector.score_scale);
    }
    if (j.contains("synthetic")) {
      const auto& s = j.at("synthetic");
      read_opt(s, "n_objects", c.synthetic.n_objects);
      read_opt(s, "image_w", c.synthetic.image_w);
      read_opt(s, "image_h", c.synthetic.image_h);
      auto& sc = c.synthetic.scene;
      if (s.contains("classes")) sc.classes = detail::templates_from_json(s.at("classes"));
      read_opt(s, "n_clutter", sc.n_clutter);
      read_opt(s, "n_ground", sc.n_ground);
      read_opt(s, "ground_z", sc.ground_z);
      read_opt(s, "min_range_m", sc.min_range_m);
      read_opt(s, "max_range_m", sc.max_range_m);
      read_opt(s, "density_at_1m", sc.density_at_1m);
      read_opt(s, "min_points", sc.min_points);
      read_opt(s, "max_points", sc.max_points);
      read_opt(s, "separation_m", sc.separation_m);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: bad class key in nms.per_class"));
  }
  c.validate();
  return c;
}

inline json run_config_to_json(const RunConfig& c) {
  json per_class = json::object();
  for (const auto& [k, v] : c.nms.per_class) per_class[std::to_string(k)] = v;
  const auto& g = c.grid;
  const auto& d = c.detector;
  const auto& s = c.synthetic;
  return json{
      {"n_slices", c.n_slices},
      {"seed", c.seed},
      {"grid",
       {{"x_min", g.x_min}, {"x_max", g.x_max}, {"y_min", g.y_min}, {"y_max", g.y_max}, {"z_min", g.z_min},
        {"z_max", g.z_max}, {"cell_xy", g.cell_xy}, {"cell_z", g.cell_z}, {"channels", g.channels}}},
      {"noise", {{"max_angle_deg", c.noise.max_angle_deg}, {"max_trans_cm", c.noise.max_trans_m * 100.0}}},
      {"nms", {{"default_radius_m", c.nms.default_radius_m}, {"per_class", per_class}}},
      {"eval", {{"thresholds_m", c.eval.thresholds_m}, {"classes", c.eval.classes}}},
      {"pipeline_model", c.pipeline_model},
      {"out", c.out},
      {"disabled_cameras", c.disabled_cameras},
      {"image_stream", c.image_stream},
      {"encoder_weights", c.encoder_weights},
      {"detector",
       {{"classes", detail::templates_to_json(d.classes)}, {"ground_z", d.ground_z}, {"link_radius_m", d.link_radius_m},
        {"min_cells", d.min_cells}, {"image_gain", d.image_gain}, {"image_clip", d.image_clip},
        {"score_scale", d.score_scale}}},
      {"synthetic",
       {{"n_objects", s.n_objects}, {"image_w", s.image_w}, {"image_h", s.image_h},
        {"classes", detail::templates_to_json(s.scene.classes)}, {"n_clutter", s.scene.n_clutter},
        {"n_ground", s.scene.n_ground}, {"ground_z", s.scene.ground_z}, {"min_range_m", s.scene.min_range_m},
        {"max_range_m", s.scene.max_range_m}, {"density_at_1m", s.scene.density_at_1m},
        {"min_points", s.scene.min_points}, {"max_points", s.scene.max_points},
        {"separation_m", s.scene.separation_m}}},
  };
}

inline RunConfig load_run_config(const fs::path& path) {
  json j;
  try {
    j = json::parse(io::read_text(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return run_config_from_json(j);
}

// ---------------------------------------------------------------------------
// Scene bundles: a directory with bundle.json listing the member files.

inline void save_bundle(const fs::path& dir, const SceneData& scene) {
  fs::create_directories(dir);
  io::save_points(dir / "points.bin", scene.points);
  io::save_calibration(dir / "calib.json", scene.rig);
  json manifest{{"frame_id", scene.frame_id}, {"points", "points.bin"}, {"calibration", "calib.json"}};
  if (scene.has_gt) {
    io::save_scene(dir / "scene.json", io::Scene{scene.frame_id, scene.boxes});
    manifest["scene"] = "scene.json";
  }
  json images = json::array();
  for (std::size_t k = 0; k < scene.images.size(); ++k) {
    const std::string name = fmt::format("cam{}.ppm", k);
    io::save_ppm(dir / name, scene.images[k]);
    images.push_back(name);
  }
  json features = json::array();
  for (std::size_t k = 0; k < scene.features.size(); ++k) {
    const std::string name = fmt::format("cam{}.sfft", scene.features[k].camera);
    io::save_features(dir / name, scene.features[k]);
    features.push_back(name);
  }
  if (!images.empty()) manifest["images"] = images;
  if (!features.empty()) manifest["features"] = features;
  io::write_json(dir / "bundle.json", manifest);
}

inline SceneData load_bundle(const fs::path& dir) {
  const json m = io::read_json(dir / "bundle.json");
  SceneData scene;
  try {
    scene.frame_id = m.value("frame_id", std::int64_t{0});
    scene.points = io::load_points(dir / m.at("points").get<std::string>());
    scene.rig = io::load_calibration(dir / m.at("calibration").get<std::string>());
    scene.has_gt = m.contains("scene");
    if (scene.has_gt) scene.boxes = io::load_scene(dir / m.at("scene").get<std::string>()).boxes;
    if (m.contains("images")) {
      for (const auto& name : m.at("images")) scene.images.push_back(io::load_ppm(dir / name.get<std::string>()));
    }
    if (m.contains("features")) {
      for (const auto& name : m.at("features")) {
        scene.features.push_back(io::load_features(dir / name.get<std::string>()));
      }
    }
  } catch (const json::exception& e) {
    throw DataError((dir / "bundle.json").string() + ": " + e.what());
  }
  if (!scene.images.empty() && scene.images.size() != scene.rig.size()) {
    throw DataError("bundle: image count does not match the calibration's camera count");
  }
  for (std::size_t k = 0; k < scene.images.size(); ++k) {
    const auto& intr = scene.rig.cameras[k].intrinsics;
    if (scene.images[k].w != intr.image_w || scene.images[k].h != intr.image_h) {
      throw DataError(fmt::format("bundle: image {} size does not match its intrinsics", k));
    }
  }
  for (const auto& f : scene.features) {
    if (f.camera < 0 || static_cast<std::size_t>(f.camera) >= scene.rig.size()) {
      throw DataError("bundle: feature map refers to an unknown camera");
    }
  }
  return scene;
}

inline SceneData generate_scene(std::uint64_t seed, const SyntheticConfig& cfg) {
  return generate_synthetic_scene(seed, cfg.n_objects, surround_rig(cfg.image_w, cfg.image_h), cfg.scene);
}

// ---------------------------------------------------------------------------
// End-to-end run

struct SliceReport {
  SliceSpec spec;
  std::size_t points = 0;
  std::vector<int> cameras;
  std::vector<Quadrant> quadrants;
  std::size_t raw_detections = 0;
  std::size_t kept_detections = 0;
  std::size_t gt_boxes = 0;  // boxes assigned by the corner rule
};

struct RunResult {
  std::vector<SliceReport> slices;
  std::vector<DetectionSet> per_slice;
  DetectionSet detections;
  std::optional<EvalReport> eval;
};

/// Per-camera feature maps: precomputed ones from the scene if present,
/// otherwise the reference provider applied to the images.
inline std::vector<FeatureImage> scene_features(const SceneData& scene, const RunConfig& cfg) {
  if (!scene.features.empty()) return scene.features;
  const ReferenceFeatureProvider provider(cfg.grid.channels, cfg.seed);
  std::vector<FeatureImage> out;
  for (std::size_t k = 0; k < scene.images.size(); ++k) out.push_back(provider.features(scene.images[k], static_cast<int>(k)));
  return out;
}

inline std::unique_ptr<PillarEncoder> make_encoder(const RunConfig& cfg) {
  if (!cfg.encoder_weights.empty()) {
    return std::make_unique<ReferencePillarEncoder>(io::load_encoder_weights(cfg.encoder_weights));
  }
  return std::make_unique<ReferencePillarEncoder>(cfg.grid.channels, cfg.seed);
}

inline DetectionSet ground_truth(const SceneData& scene) {
  DetectionSet gts;
  for (const auto& b : scene.boxes) gts.push_back(Detection{b, 0, scene.frame_id});
  return gts;
}

/// Runs every slice: pillar encoding, splatting of the slice's cameras into
/// the slice's quadrants, standardization and z reduction, crop and fusion,
/// detection, NMS; then cross-slice aggregation and evaluation.
/// `noise_seed` drives the calibration perturbation.
inline RunResult run_pipeline(const SceneData& scene, const RunConfig& cfg, std::span<const FeatureImage> features,
                              const PillarEncoder& encoder, const DetectorHook& detector, std::uint64_t noise_seed) {
  cfg.validate();
  const GridSpec& grid = cfg.grid;
  CalibNoise noise = cfg.noise;
  noise.seed = noise_seed;
  const CameraRig rig = perturb_rig(scene.rig, noise);
  const std::set<int> disabled(cfg.disabled_cameras.begin(), cfg.disabled_cameras.end());
  for (int k : disabled) {
    if (k < 0 || static_cast<std::size_t>(k) >= scene.rig.size()) {
      throw ConfigError(fmt::format("config: cannot disable unknown camera {}", k));
    }
  }

  RunResult res;
  const auto slices = slice_sweep(scene.points, cfg.n_slices);
  const int half_x = grid.nx() / 2, half_y = grid.ny() / 2;
  for (const auto& slice : slices) {
    SliceReport rep;
    rep.spec = slice.spec;
    rep.points = slice.points.size();
    rep.quadrants = quadrants_of_slice(slice.spec);
    rep.gt_boxes = assign_boxes_to_slice(scene.boxes, slice.spec).size();

    const BevMap p_bev = encode_pillars(pillarize(slice, grid), grid, encoder);

    std::vector<FeatureImage> slice_feats;
    if (cfg.image_stream) {
      for (int cam : cameras_for_slice(slice.spec, rig)) {
        if (disabled.contains(cam)) continue;
        for (const auto& f : features) {
          if (f.camera == cam) slice_feats.push_back(f);
        }
        rep.cameras.push_back(cam);
      }
    }
    std::vector<BevMap> i_bevs;
    if (slice_feats.empty()) {
      for (std::size_t q = 0; q < rep.quadrants.size(); ++q) i_bevs.emplace_back(half_x, half_y, grid.channels);
    } else {
      std::vector<VoxelVolume> batch;
      for (const auto& q : rep.quadrants) batch.push_back(splat_to_volume(slice_feats, rig, grid, q));
      batch = batch_standardize(std::move(batch));
      for (const auto& v : batch) i_bevs.push_back(reduce_volume_to_bev(v));
    }

    DetectionSet raw;
    for (std::size_t q = 0; q < rep.quadrants.size(); ++q) {
      const Quadrant quad = rep.quadrants[q];
      const BevMap fused = fuse(crop(p_bev, quad), i_bevs[q]);
      FusedMapFrame frame{grid, CellWindow::of(grid, quad), grid.channels, slice.spec.index, scene.frame_id};
      auto dets = detector.detect(fused, frame);
      raw.insert(raw.end(), dets.begin(), dets.end());
    }
    rep.raw_detections = raw.size();
    const DetectionSet best = top_k(raw, cfg.eval.max_detections_per_slice);
    DetectionSet kept = nms_per_class(best, cfg.nms);
    rep.kept_detections = kept.size();
    res.per_slice.push_back(std::move(kept));
    res.slices.push_back(std::move(rep));
  }
  res.detections = aggregate_slices(res.per_slice, cfg.nms);
  if (scene.has_gt) {
    const DetectionSet gts = ground_truth(scene);
    res.eval = evaluate_map(res.detections, gts, cfg.eval);
  }
  return res;
}

/// Convenience overload: reference encoder / features and the default
/// detector, noise seeded from the configured seed.
inline RunResult run_pipeline(const SceneData& scene, const RunConfig& cfg) {
  const auto feats = scene_features(scene, cfg);
  const auto encoder = make_encoder(cfg);
  const OccupancyPeakDetector detector(cfg.detector);
  return run_pipeline(scene, cfg, feats, *encoder, detector, cfg.seed);
}

inline std::string slices_to_csv(const RunResult& r) {
  std::string out = "slice,az_start_deg,az_end_deg,points,cameras,quadrants,gt_boxes,raw_detections,kept_detections\n";
  for (const auto& s : r.slices) {
    std::vector<int> quads;
    for (const auto& q : s.quadrants) quads.push_back(q.index);
    out += fmt::format("{},{:.4f},{:.4f},{},{},{},{},{},{}\n", s.spec.index, s.spec.az_start_deg, s.spec.az_end_deg,
                       s.points, fmt::join(s.cameras, " "), fmt::join(quads, " "), s.gt_boxes, s.raw_detections,
                       s.kept_detections);
  }
  return out;
}

/// detections.csv, slices.csv and, with GT, eval.csv.
inline void write_run_outputs(const fs::path& dir, const RunResult& r) {
  io::save_detections(dir / "detections.csv", r.detections);
  io::write_text(dir / "slices.csv", slices_to_csv(r));
  if (r.eval) io::write_text(dir / "eval.csv", io::eval_to_csv(*r.eval));
}

// ---------------------------------------------------------------------------
// Calibration-noise sweep

struct NoiseLevel {
  double angle_deg = 0.0;
  double trans_cm = 0.0;
};

inline std::vector<NoiseLevel> default_noise_levels() { return {{0, 0}, {1, 10}, {3, 30}, {5, 50}}; }

struct SweepResult {
  std::vector<NoiseLevel> levels;
  std::vector<std::uint64_t> seeds;
  std::vector<std::vector<double>> map;  // [level][seed]; scenes without GT score 0

  double mean(std::size_t level) const {
    const auto& row = map[level];
    double s = 0.0;
    for (double v : row) s += v;
    return row.empty() ? 0.0 : s / static_cast<double>(row.size());
  }
};

/// For each seed, one synthetic scene (scene seed = noise seed = the seed),
/// evaluated at every noise level. Features and encoder are shared across
/// levels so only the calibration changes.
inline SweepResult noise_sweep(const RunConfig& cfg, std::span<const std::uint64_t> seeds,
                               std::span<const NoiseLevel> levels) {
  if (seeds.empty() || levels.empty()) throw ConfigError("noise-sweep: need at least one seed and one level");
  for (const auto& l : levels) {
    if (l.angle_deg < 0.0 || l.trans_cm < 0.0) throw ConfigError("noise-sweep: noise levels must be >= 0");
  }
  SweepResult out;
  out.levels.assign(levels.begin(), levels.end());
  out.seeds.assign(seeds.begin(), seeds.end());
  out.map.assign(levels.size(), {});
  const auto encoder = make_encoder(cfg);
  const OccupancyPeakDetector detector(cfg.detector);
  for (std::uint64_t seed : seeds) {
    const SceneData scene = generate_scene(seed, cfg.synthetic);
    const auto feats = scene_features(scene, cfg);
    for (std::size_t l = 0; l < levels.size(); ++l) {
      RunConfig level_cfg = cfg;
      level_cfg.noise.max_angle_deg = levels[l].angle_deg;
      level_cfg.noise.max_trans_m = levels[l].trans_cm / 100.0;
      const auto res = run_pipeline(scene, level_cfg, feats, *encoder, detector, seed);
      out.map[l].push_back(res.eval && res.eval->map ? *res.eval->map : 0.0);
    }
  }
  return out;
}

inline std::string sweep_to_csv(const SweepResult& r) {
  std::string out = "angle_deg,trans_cm,seed,map\n";
  for (std::size_t l = 0; l < r.levels.size(); ++l) {
    for (std::size_t s = 0; s < r.seeds.size(); ++s) {
      out += fmt::format("{:.4f},{:.4f},{},{:.6f}\n", r.levels[l].angle_deg, r.levels[l].trans_cm, r.seeds[s],
                         r.map[l][s]);
    }
  }
  return out;
}

inline std::string sweep_summary_to_csv(const SweepResult& r) {
  std::string out = "angle_deg,trans_cm,mean_map\n";
  for (std::size_t l = 0; l < r.levels.size(); ++l) {
    out += fmt::format("{:.4f},{:.4f},{:.6f}\n", r.levels[l].angle_deg, r.levels[l].trans_cm, r.mean(l));
  }
  return out;
}

}  // namespace streamfuse
