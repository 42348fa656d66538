#pragma once

// Pillar gridding and the reference pillar feature encoder producing P_bev.

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <vector>

#include "streamfuse/error.hpp"
#include "streamfuse/grid.hpp"
#include "streamfuse/rng.hpp"
#include "streamfuse/slicing.hpp"

namespace streamfuse {

struct PillarIndex {
  int i = 0;
  int j = 0;

  friend auto operator<=>(const PillarIndex&, const PillarIndex&) = default;
};

struct PillarSet {
  std::map<PillarIndex, std::vector<PointRecord>> pillars;  // ordered for deterministic iteration
  std::size_t dropped = 0;                                   // points outside the grid

  std::size_t point_count() const {
    std::size_t n = 0;
    for (const auto& [_, pts] : pillars) n += pts.size();
    return n;
  }
};

/// Assigns each in-range point to the BEV cell containing it. The z range of
/// the grid also bounds the pillar height.
inline PillarSet pillarize(std::span<const PointRecord> points, const GridSpec& grid) {
  PillarSet out;
  for (const auto& p : points) {
    const auto i = grid.ix(p.x);
    const auto j = grid.iy(p.y);
    const bool z_ok = p.z >= grid.z_min && p.z < grid.z_max;
    if (!i || !j || !z_ok) {
      ++out.dropped;
      continue;
    }
    out.pillars[{*i, *j}].push_back(p);
  }
  return out;
}

inline PillarSet pillarize(const PointCloudSlice& slice, const GridSpec& grid) {
  return pillarize(std::span<const PointRecord>(slice.points), grid);
}

/// Number of per-point inputs seen by the encoder:
/// x, y, z, r, m, s, dx to pillar center, dy to pillar center, dz to the
/// pillar's mean point height.
inline constexpr int kPillarInputs = 9;

using PillarInput = std::array<double, kPillarInputs>;

/// Augmented per-point inputs for all points of one pillar.
inline std::vector<PillarInput> augment_pillar(std::span<const PointRecord> pts, double center_x,
                                               double center_y) {
  // Summed in sorted order so the result does not depend on point order.
  std::vector<float> zs;
  zs.reserve(pts.size());
  for (const auto& p : pts) zs.push_back(p.z);
  std::sort(zs.begin(), zs.end());
  double mean_z = 0.0;
  for (float z : zs) mean_z += z;
  if (!zs.empty()) mean_z /= static_cast<double>(zs.size());
  std::vector<PillarInput> out;
  out.reserve(pts.size());
  for (const auto& p : pts) {
    out.push_back({p.x, p.y, p.z, p.r, p.m, static_cast<double>(p.s), p.x - center_x, p.y - center_y,
                   p.z - mean_z});
  }
  return out;
}

/// Maps the points of one pillar to a c-dimensional feature vector. Must be
/// invariant to point order.
class PillarEncoder {
 public:
  virtual ~PillarEncoder() = default;
  virtual int channels() const = 0;
  virtual void encode(std::span<const PointRecord> pts, double center_x, double center_y,
                      std::span<float> out) const = 0;
};

/// Non-learned stand-in for the PointNet: fixed linear map 9 -> c, ReLU, then
/// channel-wise max over the pillar's points.
class ReferencePillarEncoder final : public PillarEncoder {
 public:
  /// Weights drawn uniform in [-1, 1) from the "pillar_encoder" sub-stream.
  ReferencePillarEncoder(int channels, std::uint64_t seed) : channels_(channels), seed_(seed) {
    if (channels < 1) throw ConfigError("pillar encoder: channels must be >= 1");
    Rng rng = Rng::substream(seed, "pillar_encoder");
    weights_.resize(static_cast<std::size_t>(channels) * kPillarInputs);
    for (auto& w : weights_) w = static_cast<float>(rng.uniform(-1.0, 1.0));
  }

  /// Row-major c x 9 weight matrix.
  ReferencePillarEncoder(int channels, std::vector<float> weights, std::uint64_t seed = 0)
      : channels_(channels), seed_(seed), weights_(std::move(weights)) {
    if (channels < 1 || weights_.size() != static_cast<std::size_t>(channels) * kPillarInputs) {
      throw ConfigError("pillar encoder: weight blob does not hold channels x 9 values");
    }
  }

  int channels() const override { return channels_; }
  std::uint64_t seed() const { return seed_; }
  std::span<const float> weights() const { return weights_; }
  float weight(int ch, int input) const { return weights_[static_cast<std::size_t>(ch) * kPillarInputs + input]; }

  /// clamp(W a) for a single augmented input, in double.
  double point_feature(const PillarInput& a, int ch) const {
    double acc = 0.0;
    for (int k = 0; k < kPillarInputs; ++k) acc += static_cast<double>(weight(ch, k)) * a[k];
    return std::max(acc, 0.0);
  }

  void encode(std::span<const PointRecord> pts, double center_x, double center_y,
              std::span<float> out) const override {
    std::fill(out.begin(), out.end(), 0.f);
    const auto inputs = augment_pillar(pts, center_x, center_y);
    for (int ch = 0; ch < channels_; ++ch) {
      double best = 0.0;
      for (const auto& a : inputs) best = std::max(best, point_feature(a, ch));
      out[ch] = static_cast<float>(best);
    }
  }

 private:
  int channels_;
  std::uint64_t seed_;
  std::vector<float> weights_;
};

/// Encodes every non-empty pillar into a full-grid BEV map. Empty cells stay
/// zero with mask false.
inline BevMap encode_pillars(const PillarSet& pillars, const GridSpec& grid, const PillarEncoder& encoder) {
  if (encoder.channels() != grid.channels) {
    throw ConfigError("encode_pillars: encoder has " + std::to_string(encoder.channels()) +
                      " channels, grid expects " + std::to_string(grid.channels));
  }
  BevMap map(grid.nx(), grid.ny(), grid.channels);
  for (const auto& [idx, pts] : pillars.pillars) {
    if (pts.empty()) continue;
    encoder.encode(pts, grid.x_center(idx.i), grid.y_center(idx.j),
                   std::span<float>(map.features(idx.i, idx.j), grid.channels));
    map.mask[map.cell(idx.i, idx.j)] = 1;
  }
  return map;
}

}  // namespace streamfuse
