#pragma once

// Synthetic scenes for desk-scale evaluation: boxes standing on a ground
// plane, LiDAR returns on their surfaces, clutter clumps that look like small
// objects to the LiDAR but are not rendered by the cameras, sparse ground
// returns, and per-camera silhouette images.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "streamfuse/calib.hpp"
#include "streamfuse/error.hpp"
#include "streamfuse/image_bev.hpp"
#include "streamfuse/rng.hpp"
#include "streamfuse/slicing.hpp"

namespace streamfuse {

struct ClassTemplate {
  int class_id = 0;
  double length = 1.0;
  double width = 1.0;
  double height = 1.0;
};

inline std::vector<ClassTemplate> default_class_templates() {
  return {ClassTemplate{0, 4.5, 1.9, 1.6}, ClassTemplate{1, 0.8, 0.8, 1.8}};
}

struct SceneGenConfig {
  std::vector<ClassTemplate> classes = default_class_templates();
  int n_clutter = -1;            // clutter clumps; -1: same as the object count
  int n_ground = 2000;           // sparse ground returns
  double ground_z = -1.8;        // ego frame
  double min_range_m = 4.0;
  double max_range_m = 45.0;
  double density_at_1m = 2000.0;  // surface returns per m^2, falls off as 1/r^2
  int min_points = 40;
  int max_points = 1500;
  double rotation_period_s = 0.05;
  double separation_m = 1.5;      // free space between footprints
};

/// A frame held in memory: LiDAR sweep, optional GT, calibration and either
/// camera images or precomputed feature maps (one per camera).
struct SceneData {
  std::int64_t frame_id = 0;
  std::vector<PointRecord> points;
  std::vector<Box3D> boxes;
  CameraRig rig;
  std::vector<RgbImage> images;
  std::vector<FeatureImage> features;
  bool has_gt = true;
};

/// Intersects a ray with an oriented box; returns the entry distance.
inline std::optional<double> ray_box_hit(const Ray& ray, const Box3D& box) {
  const double c = std::cos(-box.yaw);
  const double s = std::sin(-box.yaw);
  auto to_local = [&](const Eigen::Vector3d& v) { return Eigen::Vector3d(c * v.x() - s * v.y(), s * v.x() + c * v.y(), v.z()); };
  const Eigen::Vector3d o = to_local(ray.origin - box.center);
  const Eigen::Vector3d d = to_local(ray.direction);
  const Eigen::Vector3d half = 0.5 * box.dims;
  double t0 = 0.0;
  double t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-15) {
      if (std::abs(o[a]) > half[a]) return std::nullopt;
      continue;
    }
    double ta = (-half[a] - o[a]) / d[a];
    double tb = (half[a] - o[a]) / d[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::nullopt;
  }
  return t0;
}

/// Objects in white on black.
inline RgbImage render_silhouettes(const Camera& cam, std::span<const Box3D> boxes) {
  RgbImage img(cam.intrinsics.image_w, cam.intrinsics.image_h);
  for (int v = 0; v < img.h; ++v) {
    for (int u = 0; u < img.w; ++u) {
      const Ray ray = cast_pixel_ray(u + 0.5, v + 0.5, cam.intrinsics, cam.extrinsics);
      const bool hit = std::any_of(boxes.begin(), boxes.end(), [&](const Box3D& b) { return ray_box_hit(ray, b).has_value(); });
      if (hit) std::fill_n(img.pixel(u, v), 3, std::uint8_t{255});
    }
  }
  return img;
}

namespace detail {

inline bool in_footprint(double x, double y, const Box3D& b, double margin) {
  const double c = std::cos(b.yaw);
  const double s = std::sin(b.yaw);
  const double dx = x - b.center.x();
  const double dy = y - b.center.y();
  const double lx = c * dx + s * dy;
  const double ly = -s * dx + c * dy;
  return std::abs(lx) <= 0.5 * b.dims.x() + margin && std::abs(ly) <= 0.5 * b.dims.y() + margin;
}

inline int surface_point_count(double area, double range, const SceneGenConfig& cfg) {
  const double density = cfg.density_at_1m / std::max(1.0, range * range);
  const auto n = static_cast<int>(std::lround(area * density));
  return std::clamp(n, cfg.min_points, cfg.max_points);
}

inline float scan_time(double x, double y, const SceneGenConfig& cfg) {
  return static_cast<float>(slicing_azimuth(x, y) / 360.0 * cfg.rotation_period_s);
}

/// Uniform samples on the four sides and the top of a box.
inline void sample_box_surface(const Box3D& b, int n, float reflectance, const SceneGenConfig& cfg, Rng& rng,
                               std::vector<PointRecord>& out) {
  const double l = b.dims.x(), w = b.dims.y(), h = b.dims.z();
  const double areas[5] = {w * h, w * h, l * h, l * h, l * w};  // +x, -x, +y, -y, top
  const double total = areas[0] + areas[1] + areas[2] + areas[3] + areas[4];
  const double c = std::cos(b.yaw);
  const double s = std::sin(b.yaw);
  for (int k = 0; k < n; ++k) {
    double pick = rng.uniform() * total;
    int face = 0;
    while (face < 4 && pick >= areas[face]) pick -= areas[face++];
    const double a = rng.uniform() - 0.5;
    const double bb = rng.uniform() - 0.5;
    double lx = 0, ly = 0, lz = 0;
    switch (face) {
      case 0: lx = 0.5 * l; ly = a * w; lz = bb * h; break;
      case 1: lx = -0.5 * l; ly = a * w; lz = bb * h; break;
      case 2: lx = a * l; ly = 0.5 * w; lz = bb * h; break;
      case 3: lx = a * l; ly = -0.5 * w; lz = bb * h; break;
      default: lx = a * l; ly = bb * w; lz = 0.5 * h; break;
    }
    const double x = b.center.x() + c * lx - s * ly;
    const double y = b.center.y() + s * lx + c * ly;
    const double z = b.center.z() + lz;
    out.push_back(PointRecord{static_cast<float>(x), static_cast<float>(y), static_cast<float>(z), reflectance,
                              scan_time(x, y, cfg), 0});
  }
}

}  // namespace detail

/// Deterministic synthetic frame. `frame_id` is set to the seed.
inline SceneData generate_synthetic_scene(std::uint64_t seed, int n_objects, const CameraRig& rig,
                                          const SceneGenConfig& cfg = {}) {
  if (n_objects < 0) throw ConfigError("generate_synthetic_scene: n_objects must be >= 0");
  if (cfg.classes.empty()) throw ConfigError("generate_synthetic_scene: no object classes");
  Rng rng = Rng::substream(seed, "scene");
  SceneData scene;
  scene.frame_id = static_cast<std::int64_t>(seed);
  scene.rig = rig;

  struct Footprint {
    double x, y, radius;
  };
  std::vector<Footprint> taken;
  auto place = [&](double radius) -> std::optional<Eigen::Vector2d> {
    for (int attempt = 0; attempt < 2000; ++attempt) {
      // Area-uniform over the annulus.
      const double r2min = cfg.min_range_m * cfg.min_range_m;
      const double r2max = cfg.max_range_m * cfg.max_range_m;
      const double r = std::sqrt(rng.uniform(r2min, r2max));
      const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const Eigen::Vector2d p(r * std::cos(a), r * std::sin(a));
      const bool free = std::all_of(taken.begin(), taken.end(), [&](const Footprint& f) {
        return std::hypot(p.x() - f.x, p.y() - f.y) >= radius + f.radius + cfg.separation_m;
      });
      if (free) {
        taken.push_back({p.x(), p.y(), radius});
        return p;
      }
    }
    return std::nullopt;
  };

  // Objects.
  for (int k = 0; k < n_objects; ++k) {
    const auto& tpl = cfg.classes[rng.below(cfg.classes.size())];
    const double yaw = rng.uniform(-std::numbers::pi, std::numbers::pi);
    const auto p = place(0.5 * std::hypot(tpl.length, tpl.width));
    if (!p) throw ConfigError("generate_synthetic_scene: cannot place object, scene too crowded");
    Box3D b;
    b.center = Eigen::Vector3d(p->x(), p->y(), cfg.ground_z + 0.5 * tpl.height);
    b.dims = Eigen::Vector3d(tpl.length, tpl.width, tpl.height);
    b.yaw = wrap_angle(yaw);
    b.class_id = tpl.class_id;
    scene.boxes.push_back(b);
  }
  for (const auto& b : scene.boxes) {
    const double l = b.dims.x(), w = b.dims.y(), h = b.dims.z();
    const double area = 2.0 * (l + w) * h + l * w;
    const int n = detail::surface_point_count(area, b.center.head<2>().norm(), cfg);
    const auto refl = static_cast<float>(rng.uniform(0.3, 0.9));
    detail::sample_box_surface(b, n, refl, cfg, rng, scene.points);
  }

  // Clutter clumps: cylinders on the ground.
  const int n_clutter = cfg.n_clutter < 0 ? n_objects : cfg.n_clutter;
  for (int k = 0; k < n_clutter; ++k) {
    const double radius = rng.uniform(0.25, 0.5);
    const double height = rng.uniform(0.6, 1.6);
    const auto p = place(radius);
    if (!p) break;
    const double area = 2.0 * std::numbers::pi * radius * height + std::numbers::pi * radius * radius;
    const int n = detail::surface_point_count(area, p->norm(), cfg);
    const auto refl = static_cast<float>(rng.uniform(0.1, 0.5));
    const double side = 2.0 * std::numbers::pi * radius * height;
    for (int q = 0; q < n; ++q) {
      const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
      double x = 0, y = 0, z = 0;
      if (rng.uniform() * area < side) {
        x = p->x() + radius * std::cos(a);
        y = p->y() + radius * std::sin(a);
        z = cfg.ground_z + rng.uniform() * height;
      } else {
        const double rr = radius * std::sqrt(rng.uniform());
        x = p->x() + rr * std::cos(a);
        y = p->y() + rr * std::sin(a);
        z = cfg.ground_z + height;
      }
      scene.points.push_back(PointRecord{static_cast<float>(x), static_cast<float>(y), static_cast<float>(z), refl,
                                         detail::scan_time(x, y, cfg), 0});
    }
  }

  // Sparse ground returns outside every footprint.
  for (int k = 0; k < cfg.n_ground; ++k) {
    const double r = std::sqrt(rng.uniform(3.0 * 3.0, 50.0 * 50.0));
    const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double x = r * std::cos(a);
    const double y = r * std::sin(a);
    const double z = cfg.ground_z + rng.uniform(-0.02, 0.02);
    const auto refl = static_cast<float>(rng.uniform(0.05, 0.15));
    const bool inside = std::any_of(taken.begin(), taken.end(), [&](const Footprint& f) {
      return std::hypot(x - f.x, y - f.y) < f.radius + 0.2;
    });
    if (inside) continue;
    scene.points.push_back(PointRecord{static_cast<float>(x), static_cast<float>(y), static_cast<float>(z), refl,
                                       detail::scan_time(x, y, cfg), 0});
  }

  // Scan order.
  std::stable_sort(scene.points.begin(), scene.points.end(),
                   [](const PointRecord& a, const PointRecord& b) { return a.m < b.m; });

  for (const auto& cam : rig.cameras) scene.images.push_back(render_silhouettes(cam, scene.boxes));
  return scene;
}

}  // namespace streamfuse
