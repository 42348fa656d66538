#pragma once

// Camera features -> voxel volume -> I_bev.
//
// Splatting is voxel-centric: every voxel center is projected into every
// camera and picks up the feature of the quarter-resolution pixel it lands in.
// That fills exactly the voxels whose centers lie on the pixel's viewing
// frustum, which is the ray-fill rule expressed from the voxel side.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "streamfuse/calib.hpp"
#include "streamfuse/error.hpp"
#include "streamfuse/grid.hpp"
#include "streamfuse/rng.hpp"

namespace streamfuse {

/// Image features are produced at 1/4 of the camera resolution.
inline constexpr int kFeatureStride = 4;

struct RgbImage {
  int w = 0;
  int h = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

  RgbImage() = default;
  RgbImage(int w_, int h_) : w(w_), h(h_), rgb(static_cast<std::size_t>(w_) * h_ * 3, 0) {}

  std::uint8_t* pixel(int u, int v) { return rgb.data() + (static_cast<std::size_t>(v) * w + u) * 3; }
  const std::uint8_t* pixel(int u, int v) const {
    return rgb.data() + (static_cast<std::size_t>(v) * w + u) * 3;
  }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

/// H/4 x W/4 x C feature map of one camera, row-major, channels innermost.
struct FeatureImage {
  int h = 0;
  int w = 0;
  int c = 0;
  int camera = 0;
  std::vector<float> data;

  FeatureImage() = default;
  FeatureImage(int h_, int w_, int c_, int camera_)
      : h(h_), w(w_), c(c_), camera(camera_), data(static_cast<std::size_t>(h_) * w_ * c_, 0.f) {}

  float* features(int row, int col) { return data.data() + (static_cast<std::size_t>(row) * w + col) * c; }
  const float* features(int row, int col) const {
    return data.data() + (static_cast<std::size_t>(row) * w + col) * c;
  }

  static FeatureImage constant(const Intrinsics& intr, int c, int camera, float value) {
    FeatureImage f(intr.image_h / kFeatureStride, intr.image_w / kFeatureStride, c, camera);
    std::fill(f.data.begin(), f.data.end(), value);
    return f;
  }

  friend bool operator==(const FeatureImage&, const FeatureImage&) = default;
};

/// Source of per-camera feature maps (the learned image backbone in a real
/// deployment).
class FeatureProvider {
 public:
  virtual ~FeatureProvider() = default;
  virtual int channels() const = 0;
  virtual FeatureImage features(const RgbImage& image, int camera) const = 0;
};

/// 4x4 box downsample followed by a fixed 3 -> c linear map with weights drawn
/// uniform in [0, 1) from the "feature_provider" sub-stream. Inputs are scaled
/// to [0, 1].
class ReferenceFeatureProvider final : public FeatureProvider {
 public:
  ReferenceFeatureProvider(int channels, std::uint64_t seed) : channels_(channels) {
    if (channels < 1) throw ConfigError("feature provider: channels must be >= 1");
    Rng rng = Rng::substream(seed, "feature_provider");
    weights_.resize(static_cast<std::size_t>(channels) * 3);
    for (auto& w : weights_) w = static_cast<float>(rng.uniform());
  }

  int channels() const override { return channels_; }
  std::span<const float> weights() const { return weights_; }

  FeatureImage features(const RgbImage& image, int camera) const override {
    FeatureImage out(image.h / kFeatureStride, image.w / kFeatureStride, channels_, camera);
    for (int row = 0; row < out.h; ++row) {
      for (int col = 0; col < out.w; ++col) {
        double mean[3] = {0.0, 0.0, 0.0};
        for (int dv = 0; dv < kFeatureStride; ++dv) {
          for (int du = 0; du < kFeatureStride; ++du) {
            const auto* px = image.pixel(col * kFeatureStride + du, row * kFeatureStride + dv);
            for (int k = 0; k < 3; ++k) mean[k] += px[k];
          }
        }
        for (double& m : mean) m /= 255.0 * kFeatureStride * kFeatureStride;
        float* f = out.features(row, col);
        for (int ch = 0; ch < channels_; ++ch) {
          f[ch] = static_cast<float>(weights_[ch * 3] * mean[0] + weights_[ch * 3 + 1] * mean[1] +
                                     weights_[ch * 3 + 2] * mean[2]);
        }
      }
    }
    return out;
  }

 private:
  int channels_;
  std::vector<float> weights_;
};

/// Serves feature maps computed elsewhere (e.g. by a real network), keyed by
/// camera index. The RGB image is ignored.
class PrecomputedFeatureProvider final : public FeatureProvider {
 public:
  explicit PrecomputedFeatureProvider(std::vector<FeatureImage> maps) {
    for (auto& m : maps) {
      if (channels_ == 0) channels_ = m.c;
      if (m.c != channels_) throw ConfigError("precomputed features: inconsistent channel counts");
      const int cam = m.camera;
      maps_[cam] = std::move(m);
    }
  }

  int channels() const override { return channels_; }
  FeatureImage features(const RgbImage&, int camera) const override {
    auto it = maps_.find(camera);
    if (it == maps_.end()) throw DataError("precomputed features: no map for camera " + std::to_string(camera));
    return it->second;
  }

 private:
  int channels_ = 0;
  std::map<int, FeatureImage> maps_;
};

namespace detail {

inline void check_feature_image(const FeatureImage& f, const CameraRig& rig, const GridSpec& grid) {
  if (f.c != grid.channels) {
    throw ConfigError("splat: feature map has " + std::to_string(f.c) + " channels, grid expects " +
                      std::to_string(grid.channels));
  }
  if (f.camera < 0 || static_cast<std::size_t>(f.camera) >= rig.size()) {
    throw ConfigError("splat: feature map refers to unknown camera " + std::to_string(f.camera));
  }
  const auto& intr = rig.cameras[f.camera].intrinsics;
  if (f.h != intr.image_h / kFeatureStride || f.w != intr.image_w / kFeatureStride) {
    throw ConfigError("splat: feature map size does not match camera resolution / 4");
  }
}

/// Quarter-resolution pixel hit by a voxel center, if any.
inline std::optional<std::pair<int, int>> feature_pixel(const Eigen::Vector3d& p, const Camera& cam,
                                                        const FeatureImage& f) {
  const auto hit = project_point(p, cam.intrinsics, cam.extrinsics);
  if (!hit) return std::nullopt;
  const int col = static_cast<int>(std::floor(hit->u / kFeatureStride));
  const int row = static_cast<int>(std::floor(hit->v / kFeatureStride));
  if (col >= f.w || row >= f.h) return std::nullopt;  // partial block at a non-multiple-of-4 edge
  return std::pair{row, col};
}

}  // namespace detail

/// Fills voxels with the average of the features of every camera pixel their
/// centers project to. With `crop`, only that quadrant is computed and the
/// returned volume has dims (X/2, Y/2, Z, C).
inline VoxelVolume splat_to_volume(std::span<const FeatureImage> features, const CameraRig& rig,
                                   const GridSpec& grid, std::optional<Quadrant> crop = std::nullopt) {
  for (const auto& f : features) detail::check_feature_image(f, rig, grid);
  const CellWindow win = CellWindow::of(grid, crop);
  const int nz = grid.nz();
  const int c = grid.channels;
  VoxelVolume vol(win.nx, win.ny, nz, c);
  std::vector<double> acc(c);
  for (int i = 0; i < win.nx; ++i) {
    const double x = grid.x_center(win.i0 + i);
    for (int j = 0; j < win.ny; ++j) {
      const double y = grid.y_center(win.j0 + j);
      for (int k = 0; k < nz; ++k) {
        const Eigen::Vector3d p(x, y, grid.z_center(k));
        std::fill(acc.begin(), acc.end(), 0.0);
        std::uint32_t n = 0;
        for (const auto& f : features) {
          const auto px = detail::feature_pixel(p, rig.cameras[f.camera], f);
          if (!px) continue;
          const float* src = f.features(px->first, px->second);
          for (int ch = 0; ch < c; ++ch) acc[ch] += src[ch];
          ++n;
        }
        if (n == 0) continue;
        vol.count[vol.voxel(i, j, k)] = n;
        float* dst = vol.features(i, j, k);
        for (int ch = 0; ch < c; ++ch) dst[ch] = static_cast<float>(acc[ch] / n);
      }
    }
  }
  return vol;
}

/// Sub-volume of a full-grid volume for one quadrant.
inline VoxelVolume crop_volume(const VoxelVolume& v, Quadrant q) {
  if (v.nx % 2 != 0 || v.ny % 2 != 0) throw ConfigError("crop_volume: X and Y must be even");
  const int i0 = q.i0(v.nx);
  const int j0 = q.j0(v.ny);
  VoxelVolume out(v.nx / 2, v.ny / 2, v.nz, v.c);
  for (int i = 0; i < out.nx; ++i) {
    for (int j = 0; j < out.ny; ++j) {
      for (int k = 0; k < v.nz; ++k) {
        out.count[out.voxel(i, j, k)] = v.count[v.voxel(i0 + i, j0 + j, k)];
        std::copy_n(v.features(i0 + i, j0 + j, k), v.c, out.features(i, j, k));
      }
    }
  }
  return out;
}

inline constexpr double kStandardizeEps = 1e-5;

/// Per-channel standardization over all occupied voxels of the batch
/// (population variance). Unoccupied voxels stay zero.
inline std::vector<VoxelVolume> batch_standardize(std::vector<VoxelVolume> batch) {
  if (batch.empty()) throw ConfigError("batch_standardize: empty batch");
  const int c = batch.front().c;
  for (const auto& v : batch) {
    if (v.c != c) throw ConfigError("batch_standardize: inconsistent channel counts");
  }
  std::vector<double> sum(c, 0.0);
  std::vector<double> sum_sq(c, 0.0);
  std::size_t n = 0;
  for (const auto& v : batch) {
    for (std::size_t vox = 0; vox < v.count.size(); ++vox) {
      if (v.count[vox] == 0) continue;
      ++n;
      const float* f = v.data.data() + vox * c;
      for (int ch = 0; ch < c; ++ch) sum[ch] += f[ch];
    }
  }
  if (n == 0) return batch;
  std::vector<double> mean(c);
  for (int ch = 0; ch < c; ++ch) mean[ch] = sum[ch] / static_cast<double>(n);
  // Two-pass variance.
  for (const auto& v : batch) {
    for (std::size_t vox = 0; vox < v.count.size(); ++vox) {
      if (v.count[vox] == 0) continue;
      const float* f = v.data.data() + vox * c;
      for (int ch = 0; ch < c; ++ch) {
        const double d = f[ch] - mean[ch];
        sum_sq[ch] += d * d;
      }
    }
  }
  std::vector<double> inv_std(c);
  for (int ch = 0; ch < c; ++ch) inv_std[ch] = 1.0 / std::sqrt(sum_sq[ch] / static_cast<double>(n) + kStandardizeEps);
  for (auto& v : batch) {
    for (std::size_t vox = 0; vox < v.count.size(); ++vox) {
      if (v.count[vox] == 0) continue;
      float* f = v.data.data() + vox * c;
      for (int ch = 0; ch < c; ++ch) f[ch] = static_cast<float>((f[ch] - mean[ch]) * inv_std[ch]);
    }
  }
  return batch;
}

/// Averages pairs of z layers: Z -> Z/2. Counts add.
inline VoxelVolume avg_pool_z2(const VoxelVolume& v) {
  if (v.nz % 2 != 0) throw ConfigError("avg_pool_z2: Z must be even");
  VoxelVolume out(v.nx, v.ny, v.nz / 2, v.c);
  for (int i = 0; i < v.nx; ++i) {
    for (int j = 0; j < v.ny; ++j) {
      for (int k = 0; k < out.nz; ++k) {
        const float* a = v.features(i, j, 2 * k);
        const float* b = v.features(i, j, 2 * k + 1);
        float* dst = out.features(i, j, k);
        for (int ch = 0; ch < v.c; ++ch) dst[ch] = 0.5f * (a[ch] + b[ch]);
        out.count[out.voxel(i, j, k)] = v.count[v.voxel(i, j, 2 * k)] + v.count[v.voxel(i, j, 2 * k + 1)];
      }
    }
  }
  return out;
}

/// Max over z. A cell is marked occupied when any voxel of its column was.
inline BevMap max_over_z(const VoxelVolume& v) {
  BevMap out(v.nx, v.ny, v.c);
  for (int i = 0; i < v.nx; ++i) {
    for (int j = 0; j < v.ny; ++j) {
      float* dst = out.features(i, j);
      bool any = false;
      for (int k = 0; k < v.nz; ++k) any = any || v.count[v.voxel(i, j, k)] > 0;
      if (v.nz == 0) continue;
      std::copy_n(v.features(i, j, 0), v.c, dst);
      for (int k = 1; k < v.nz; ++k) {
        const float* src = v.features(i, j, k);
        for (int ch = 0; ch < v.c; ++ch) dst[ch] = std::max(dst[ch], src[ch]);
      }
      out.mask[out.cell(i, j)] = any ? 1 : 0;
    }
  }
  return out;
}

/// Stand-in for the learned projection / residual / strided 3D convolutions.
/// Applied at the half-depth stage; must keep Z even.
using VoxelTransform = std::function<VoxelVolume(const VoxelVolume&)>;

/// Z -> Z/2 (avg), [transform], Z/2 -> Z/4 (avg), max over z -> BEV.
inline BevMap reduce_volume_to_bev(const VoxelVolume& v, const VoxelTransform& transform = {}) {
  if (v.nz % 4 != 0) throw ConfigError("reduce_volume_to_bev: Z must be divisible by 4");
  VoxelVolume half = avg_pool_z2(v);
  if (transform) {
    half = transform(half);
    if (half.nz % 2 != 0 || half.nz == 0) throw ConfigError("voxel transform must keep an even, non-zero Z");
  }
  return max_over_z(avg_pool_z2(half));
}

}  // namespace streamfuse
