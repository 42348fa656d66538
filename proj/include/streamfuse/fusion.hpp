#pragma once

// Quadrant crop / uncrop of BEV maps, channel-wise fusion and the 3D
// convolution FLOP model used to account for the crop savings.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "streamfuse/error.hpp"
#include "streamfuse/grid.hpp"
#include "streamfuse/slicing.hpp"

namespace streamfuse {

/// Quadrants (ego at grid center) whose azimuth range [90q, 90q + 90)
/// overlaps the slice sector. Ascending quadrant order.
inline std::vector<Quadrant> quadrants_of_slice(const SliceSpec& spec) {
  std::vector<Quadrant> out;
  for (int q = 0; q < 4; ++q) {
    const double a = 90.0 * q;
    const double w = spec.width_deg();
    const bool hit = w >= 360.0 || wrap_deg(spec.az_start_deg - a) < 90.0 || wrap_deg(a - spec.az_start_deg) < w;
    if (hit) out.push_back(Quadrant{q});
  }
  return out;
}

inline BevMap crop(const BevMap& map, Quadrant q) {
  if (map.nx % 2 != 0 || map.ny % 2 != 0) throw ConfigError("crop: X and Y must be even");
  const int i0 = q.i0(map.nx);
  const int j0 = q.j0(map.ny);
  BevMap out(map.nx / 2, map.ny / 2, map.c);
  for (int i = 0; i < out.nx; ++i) {
    // Rows of a quadrant are contiguous runs of ny/2 cells.
    std::copy_n(map.features(i0 + i, j0), static_cast<std::size_t>(out.ny) * map.c, out.features(i, 0));
    std::copy_n(map.mask.begin() + static_cast<std::ptrdiff_t>(map.cell(i0 + i, j0)), out.ny,
                out.mask.begin() + static_cast<std::ptrdiff_t>(out.cell(i, 0)));
  }
  return out;
}

/// Zero-pads a quadrant map back to the full grid.
inline BevMap uncrop(const BevMap& small, Quadrant q, int full_nx, int full_ny) {
  if (full_nx % 2 != 0 || full_ny % 2 != 0 || small.nx * 2 != full_nx || small.ny * 2 != full_ny) {
    throw ConfigError("uncrop: quadrant map is not half the full size");
  }
  BevMap out(full_nx, full_ny, small.c);
  const int i0 = q.i0(full_nx);
  const int j0 = q.j0(full_ny);
  for (int i = 0; i < small.nx; ++i) {
    std::copy_n(small.features(i, 0), static_cast<std::size_t>(small.ny) * small.c, out.features(i0 + i, j0));
    std::copy_n(small.mask.begin() + static_cast<std::ptrdiff_t>(small.cell(i, 0)), small.ny,
                out.mask.begin() + static_cast<std::ptrdiff_t>(out.cell(i0 + i, j0)));
  }
  return out;
}

/// Channel concatenation [p | i]. The mask is the union of both masks.
inline BevMap fuse(const BevMap& p_bev, const BevMap& i_bev) {
  if (p_bev.nx != i_bev.nx || p_bev.ny != i_bev.ny) throw ConfigError("fuse: spatial dims differ");
  BevMap out(p_bev.nx, p_bev.ny, p_bev.c + i_bev.c);
  for (int i = 0; i < out.nx; ++i) {
    for (int j = 0; j < out.ny; ++j) {
      float* dst = out.features(i, j);
      std::copy_n(p_bev.features(i, j), p_bev.c, dst);
      std::copy_n(i_bev.features(i, j), i_bev.c, dst + p_bev.c);
      out.mask[out.cell(i, j)] = (p_bev.occupied(i, j) || i_bev.occupied(i, j)) ? 1 : 0;
    }
  }
  return out;
}

/// Channels [first, first + count) of a map; the mask is copied unchanged.
inline BevMap channel_slice(const BevMap& map, int first, int count) {
  if (first < 0 || count < 0 || first + count > map.c) throw ConfigError("channel_slice: range out of bounds");
  BevMap out(map.nx, map.ny, count);
  for (int i = 0; i < map.nx; ++i) {
    for (int j = 0; j < map.ny; ++j) std::copy_n(map.features(i, j) + first, count, out.features(i, j));
  }
  out.mask = map.mask;
  return out;
}

/// One 3D convolution layer: kernel (kx, ky, kz), output extent (dx, dy, dz).
struct ConvCostSpec {
  std::uint64_t in_channels = 1;
  std::uint64_t out_channels = 1;
  std::uint64_t kx = 1, ky = 1, kz = 1;
  std::uint64_t dx = 1, dy = 1, dz = 1;
};

struct ConvStage {
  std::string name;
  std::vector<ConvCostSpec> layers;
};

/// One multiply-add counts as 2 FLOPs.
inline std::uint64_t conv_flops(const ConvCostSpec& s) {
  if (s.in_channels == 0 || s.out_channels == 0 || s.kx == 0 || s.ky == 0 || s.kz == 0 || s.dx == 0 ||
      s.dy == 0 || s.dz == 0) {
    throw ConfigError("conv_flops: all sizes must be positive");
  }
  return 2 * s.in_channels * s.out_channels * s.kx * s.ky * s.kz * s.dx * s.dy * s.dz;
}

/// Same layer evaluated on one quadrant (output extent X/2 x Y/2).
inline ConvCostSpec cropped(ConvCostSpec s) {
  if (s.dx % 2 != 0 || s.dy % 2 != 0) throw ConfigError("cropped: output X and Y must be even");
  s.dx /= 2;
  s.dy /= 2;
  return s;
}

inline std::uint64_t conv_flops(const ConvStage& stage) {
  std::uint64_t total = 0;
  for (const auto& l : stage.layers) total += conv_flops(l);
  return total;
}

inline std::uint64_t conv_flops_cropped(const ConvStage& stage) {
  std::uint64_t total = 0;
  for (const auto& l : stage.layers) total += conv_flops(cropped(l));
  return total;
}

struct CostRow {
  std::string stage;
  std::uint64_t flops_full = 0;
  std::uint64_t flops_cropped = 0;
  double ratio = 0.0;
};

inline CostRow cost_row(const ConvStage& stage) {
  const auto full = conv_flops(stage);
  const auto crop = conv_flops_cropped(stage);
  return CostRow{stage.name, full, crop, static_cast<double>(crop) / static_cast<double>(full)};
}

/// The image-volume 3D convolution stack: 1x1x1 projection, residual 3x3x3
/// convolution, then a 3x3x3 convolution with stride 2 along z.
inline ConvStage projection_conv_stage(const GridSpec& grid) {
  const auto c = static_cast<std::uint64_t>(grid.channels);
  const auto x = static_cast<std::uint64_t>(grid.nx());
  const auto y = static_cast<std::uint64_t>(grid.ny());
  const auto z = static_cast<std::uint64_t>(grid.nz());
  return ConvStage{"3d_convolutions",
                   {ConvCostSpec{c, c, 1, 1, 1, x, y, z}, ConvCostSpec{c, c, 3, 3, 3, x, y, z},
                    ConvCostSpec{c, c, 3, 3, 3, x, y, z / 2}}};
}

}  // namespace streamfuse
