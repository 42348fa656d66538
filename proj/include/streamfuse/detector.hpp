#pragma once

// Detector hook and the default non-learned occupancy-peak detector.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "streamfuse/detection.hpp"
#include "streamfuse/grid.hpp"
#include "streamfuse/scene_gen.hpp"

namespace streamfuse {

/// Where a (possibly cropped) fused map sits in the scene.
struct FusedMapFrame {
  GridSpec grid;
  CellWindow window;
  int lidar_channels = 0;  // channels [0, lidar_channels) come from P_bev, the rest from I_bev
  int slice = 0;
  std::int64_t frame_id = 0;

  double x_of(int i) const { return grid.x_center(window.i0 + i); }
  double y_of(int j) const { return grid.y_center(window.j0 + j); }
};

/// Turns a fused BEV map into scene-frame detections.
class DetectorHook {
 public:
  virtual ~DetectorHook() = default;
  virtual DetectionSet detect(const BevMap& fused, const FusedMapFrame& frame) const = 0;
};

struct OccupancyPeakConfig {
  std::vector<ClassTemplate> classes = default_class_templates();
  double ground_z = -1.8;
  double link_radius_m = 0.45;  // occupied cells closer than this belong to one cluster
  int min_cells = 2;
  double image_gain = 2.0;      // cell energy = 1 + gain * clamp(mean image feature, 0, clip)
  double image_clip = 1.0;
  double score_scale = 12.0;    // score = E / (E + scale)
};

/// Clusters LiDAR-occupied cells, weights each by the image evidence above it
/// and emits one box per cluster. The class is the template closest to the
/// cluster's principal-axis extent; the score grows with the cluster energy.
class OccupancyPeakDetector final : public DetectorHook {
 public:
  explicit OccupancyPeakDetector(OccupancyPeakConfig cfg = {}) : cfg_(std::move(cfg)) {
    if (cfg_.classes.empty()) throw ConfigError("detector: no class templates");
  }

  const OccupancyPeakConfig& config() const { return cfg_; }

  /// Per-cell energy; zero where no LiDAR feature is present.
  std::vector<double> cell_energy(const BevMap& fused, const FusedMapFrame& frame) const {
    const int lc = frame.lidar_channels;
    const int ic = fused.c - lc;
    std::vector<double> e(static_cast<std::size_t>(fused.nx) * fused.ny, 0.0);
    for (int i = 0; i < fused.nx; ++i) {
      for (int j = 0; j < fused.ny; ++j) {
        const float* f = fused.features(i, j);
        const bool lidar = std::any_of(f, f + lc, [](float v) { return v != 0.f; });
        if (!lidar) continue;
        double img = 0.0;
        for (int ch = lc; ch < fused.c; ++ch) img += f[ch];
        if (ic > 0) img /= ic;
        e[fused.cell(i, j)] = 1.0 + cfg_.image_gain * std::clamp(img, 0.0, cfg_.image_clip);
      }
    }
    return e;
  }

  DetectionSet detect(const BevMap& fused, const FusedMapFrame& frame) const override {
    if (frame.lidar_channels <= 0 || frame.lidar_channels > fused.c) {
      throw ConfigError("detector: lidar channel count outside the fused map");
    }
    const auto energy = cell_energy(fused, frame);
    const int nx = fused.nx, ny = fused.ny;
    const int reach = std::max(1, static_cast<int>(std::lround(cfg_.link_radius_m / frame.grid.cell_xy)));

    // Union-find over occupied cells.
    std::vector<std::int64_t> parent(energy.size(), -1);
    auto find = [&](std::int64_t a) {
      while (parent[a] != a) a = parent[a] = parent[parent[a]];
      return a;
    };
    for (std::size_t k = 0; k < energy.size(); ++k) {
      if (energy[k] > 0.0) parent[k] = static_cast<std::int64_t>(k);
    }
    for (int i = 0; i < nx; ++i) {
      for (int j = 0; j < ny; ++j) {
        const auto a = static_cast<std::int64_t>(fused.cell(i, j));
        if (parent[a] < 0) continue;
        for (int di = 0; di <= reach; ++di) {
          for (int dj = -reach; dj <= reach; ++dj) {
            if (di == 0 && dj <= 0) continue;
            const int ii = i + di, jj = j + dj;
            if (ii >= nx || jj < 0 || jj >= ny) continue;
            const auto b = static_cast<std::int64_t>(fused.cell(ii, jj));
            if (parent[b] < 0) continue;
            const auto ra = find(a), rb = find(b);
            if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
          }
        }
      }
    }

    // Group cells by root, in first-cell order.
    std::vector<std::vector<std::int64_t>> clusters;
    std::vector<std::int64_t> slot(energy.size(), -1);
    for (std::size_t k = 0; k < energy.size(); ++k) {
      if (parent[k] < 0) continue;
      const auto r = find(static_cast<std::int64_t>(k));
      if (slot[r] < 0) {
        slot[r] = static_cast<std::int64_t>(clusters.size());
        clusters.emplace_back();
      }
      clusters[slot[r]].push_back(static_cast<std::int64_t>(k));
    }

    DetectionSet out;
    for (const auto& cells : clusters) {
      if (static_cast<int>(cells.size()) < cfg_.min_cells) continue;
      out.push_back(describe(cells, energy, ny, frame));
    }
    return out;
  }

 private:
  Detection describe(const std::vector<std::int64_t>& cells, const std::vector<double>& energy, int ny,
                     const FusedMapFrame& frame) const {
    const double cell = frame.grid.cell_xy;
    double mx = 0.0, my = 0.0, total = 0.0;
    for (auto k : cells) {
      mx += frame.x_of(static_cast<int>(k / ny));
      my += frame.y_of(static_cast<int>(k % ny));
      total += energy[k];
    }
    mx /= static_cast<double>(cells.size());
    my /= static_cast<double>(cells.size());
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (auto k : cells) {
      const double dx = frame.x_of(static_cast<int>(k / ny)) - mx;
      const double dy = frame.y_of(static_cast<int>(k % ny)) - my;
      sxx += dx * dx;
      syy += dy * dy;
      sxy += dx * dy;
    }
    const double theta = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
    const double ux = std::cos(theta), uy = std::sin(theta);
    double umin = 1e300, umax = -1e300, vmin = 1e300, vmax = -1e300;
    for (auto k : cells) {
      const double dx = frame.x_of(static_cast<int>(k / ny)) - mx;
      const double dy = frame.y_of(static_cast<int>(k % ny)) - my;
      const double u = ux * dx + uy * dy;
      const double v = -uy * dx + ux * dy;
      umin = std::min(umin, u);
      umax = std::max(umax, u);
      vmin = std::min(vmin, v);
      vmax = std::max(vmax, v);
    }
    const double length = umax - umin + cell;
    const double width = vmax - vmin + cell;
    const double uc = 0.5 * (umin + umax);
    const double vc = 0.5 * (vmin + vmax);

    const ClassTemplate* best = &cfg_.classes.front();
    double best_cost = 1e300;
    for (const auto& t : cfg_.classes) {
      const double cost = std::abs(length - t.length) + std::abs(width - t.width);
      if (cost < best_cost) {
        best_cost = cost;
        best = &t;
      }
    }

    Detection d;
    d.slice = frame.slice;
    d.frame_id = frame.frame_id;
    d.box.center = Eigen::Vector3d(mx + ux * uc - uy * vc, my + uy * uc + ux * vc, cfg_.ground_z + 0.5 * best->height);
    d.box.dims = Eigen::Vector3d(best->length, best->width, best->height);
    d.box.yaw = wrap_angle(theta);
    d.box.class_id = best->class_id;
    d.box.score = total / (total + cfg_.score_scale);
    return d;
  }

  OccupancyPeakConfig cfg_;
};

}  // namespace streamfuse
