#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "streamfuse/error.hpp"

namespace streamfuse {

/// Scene extent and cell sizes shared by the pillar grid (BEV) and the voxel
/// volume. Defaults: 512 x 512 BEV cells of 0.2 m, 16 voxel layers of 0.5 m.
struct GridSpec {
  double x_min = -51.2;
  double x_max = 51.2;
  double y_min = -51.2;
  double y_max = 51.2;
  double z_min = -3.0;
  double z_max = 5.0;
  double cell_xy = 0.2;
  double cell_z = 0.5;
  int channels = 64;

  int nx() const { return cells(x_max - x_min, cell_xy); }
  int ny() const { return cells(y_max - y_min, cell_xy); }
  int nz() const { return cells(z_max - z_min, cell_z); }

  void validate() const {
    if (!(cell_xy > 0.0) || !(cell_z > 0.0)) throw ConfigError("grid: cell sizes must be positive");
    if (!(x_max > x_min) || !(y_max > y_min) || !(z_max > z_min)) throw ConfigError("grid: empty range");
    if (channels < 1) throw ConfigError("grid: channels must be >= 1");
    for (auto [span, cell, axis] : {std::tuple{x_max - x_min, cell_xy, "x"}, std::tuple{y_max - y_min, cell_xy, "y"},
                                    std::tuple{z_max - z_min, cell_z, "z"}}) {
      const double n = span / cell;
      if (std::abs(n - std::round(n)) > 1e-6) {
        throw ConfigError(std::string("grid: ") + axis + " range is not divisible by the cell size");
      }
    }
  }

  /// Floor-division cell index along one axis. Coordinates are snapped by
  /// 1e-4 cells so float32 inputs sitting on a cell edge (e.g. -51.2f) land in
  /// the cell that starts there. Out-of-range -> nullopt.
  static std::optional<int> index_of(double v, double vmin, double cell, int n) {
    const double t = (v - vmin) / cell + kSnapCells;
    if (!(t >= 0.0)) return std::nullopt;
    const double f = std::floor(t);
    if (f >= n) return std::nullopt;
    return static_cast<int>(f);
  }

  std::optional<int> ix(double x) const { return index_of(x, x_min, cell_xy, nx()); }
  std::optional<int> iy(double y) const { return index_of(y, y_min, cell_xy, ny()); }
  std::optional<int> iz(double z) const { return index_of(z, z_min, cell_z, nz()); }

  double x_center(int i) const { return x_min + (i + 0.5) * cell_xy; }
  double y_center(int j) const { return y_min + (j + 0.5) * cell_xy; }
  double z_center(int k) const { return z_min + (k + 0.5) * cell_z; }

  static constexpr double kSnapCells = 1e-4;

 private:
  static int cells(double span, double cell) { return static_cast<int>(std::lround(span / cell)); }
};

/// Dense X x Y x C feature map, row-major with channels innermost, plus an
/// occupancy mask per cell.
struct BevMap {
  int nx = 0;
  int ny = 0;
  int c = 0;
  std::vector<float> data;
  std::vector<std::uint8_t> mask;

  BevMap() = default;
  BevMap(int nx_, int ny_, int c_)
      : nx(nx_), ny(ny_), c(c_), data(static_cast<std::size_t>(nx_) * ny_ * c_, 0.f),
        mask(static_cast<std::size_t>(nx_) * ny_, 0) {}

  std::size_t cell(int i, int j) const { return static_cast<std::size_t>(i) * ny + j; }
  float& at(int i, int j, int ch) { return data[cell(i, j) * c + ch]; }
  float at(int i, int j, int ch) const { return data[cell(i, j) * c + ch]; }
  float* features(int i, int j) { return data.data() + cell(i, j) * c; }
  const float* features(int i, int j) const { return data.data() + cell(i, j) * c; }
  bool occupied(int i, int j) const { return mask[cell(i, j)] != 0; }

  friend bool operator==(const BevMap&, const BevMap&) = default;
};

/// Dense X x Y x Z x C volume with a per-voxel contribution count. Voxels with
/// count 0 hold exactly zero.
struct VoxelVolume {
  int nx = 0;
  int ny = 0;
  int nz = 0;
  int c = 0;
  std::vector<float> data;
  std::vector<std::uint32_t> count;

  VoxelVolume() = default;
  VoxelVolume(int nx_, int ny_, int nz_, int c_)
      : nx(nx_), ny(ny_), nz(nz_), c(c_),
        data(static_cast<std::size_t>(nx_) * ny_ * nz_ * c_, 0.f),
        count(static_cast<std::size_t>(nx_) * ny_ * nz_, 0) {}

  std::size_t voxel(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * ny + j) * nz + k;
  }
  float& at(int i, int j, int k, int ch) { return data[voxel(i, j, k) * c + ch]; }
  float at(int i, int j, int k, int ch) const { return data[voxel(i, j, k) * c + ch]; }
  float* features(int i, int j, int k) { return data.data() + voxel(i, j, k) * c; }
  const float* features(int i, int j, int k) const { return data.data() + voxel(i, j, k) * c; }

  friend bool operator==(const VoxelVolume&, const VoxelVolume&) = default;
};

/// One quarter of the BEV grid, split at the grid midlines. Indices run
/// counterclockwise like the math quadrants: 0 = (+x, +y), 1 = (-x, +y),
/// 2 = (-x, -y), 3 = (+x, -y). Cells at exactly X/2 (resp. Y/2) belong to the
/// + half. With the ego at the grid center, quadrant q spans azimuths
/// [90q, 90q + 90).
struct Quadrant {
  int index = 0;

  bool upper_x() const { return index == 0 || index == 3; }
  bool upper_y() const { return index == 0 || index == 1; }
  int i0(int nx) const { return upper_x() ? nx / 2 : 0; }
  int j0(int ny) const { return upper_y() ? ny / 2 : 0; }
  double az_start_deg() const { return 90.0 * index; }

  friend bool operator==(const Quadrant&, const Quadrant&) = default;
};

/// Integer window of grid cells [i0, i0 + nx) x [j0, j0 + ny).
struct CellWindow {
  int i0 = 0;
  int j0 = 0;
  int nx = 0;
  int ny = 0;

  static CellWindow full(const GridSpec& g) { return {0, 0, g.nx(), g.ny()}; }
  static CellWindow of(const GridSpec& g, std::optional<Quadrant> q) {
    if (!q) return full(g);
    if (g.nx() % 2 != 0 || g.ny() % 2 != 0) throw ConfigError("grid: quadrant crop needs even X and Y");
    return {q->i0(g.nx()), q->j0(g.ny()), g.nx() / 2, g.ny() / 2};
  }
};

}  // namespace streamfuse
