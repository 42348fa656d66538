#include <gtest/gtest.h>

#include <algorithm>

#include "streamfuse/fusion.hpp"
#include "streamfuse/rng.hpp"

using namespace streamfuse;

namespace {

BevMap random_map(std::uint64_t seed, int nx, int ny, int c, double occupancy = 0.5) {
  Rng rng(seed);
  BevMap m(nx, ny, c);
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      if (rng.uniform() >= occupancy) continue;
      m.mask[m.cell(i, j)] = 1;
      for (int ch = 0; ch < c; ++ch) m.at(i, j, ch) = static_cast<float>(rng.uniform(-3, 3));
    }
  }
  return m;
}

bool in_quadrant(int i, int j, int nx, int ny, Quadrant q) {
  return (i >= nx / 2) == q.upper_x() && (j >= ny / 2) == q.upper_y();
}

}  // namespace

TEST(QuadrantsOfSlice, Examples) {
  auto idx = [](const std::vector<Quadrant>& qs) {
    std::vector<int> out;
    for (auto q : qs) out.push_back(q.index);
    return out;
  };
  EXPECT_EQ(idx(quadrants_of_slice(SliceSpec::make(8, 0))), std::vector<int>{0});
  EXPECT_EQ(idx(quadrants_of_slice(SliceSpec::make(1, 0))), (std::vector<int>{0, 1, 2, 3}));
  EXPECT_EQ(idx(quadrants_of_slice(SliceSpec::make(8, 3))), std::vector<int>{1});
  // A rotated 45 degree sector [80, 125).
  SliceSpec rotated = SliceSpec::make(8, 0);
  rotated.az_start_deg = 80;
  rotated.az_end_deg = 125;
  EXPECT_EQ(idx(quadrants_of_slice(rotated)), (std::vector<int>{0, 1}));
  // Sectors of width <= 90 touch at most two quadrants.
  for (int n : {4, 8, 16, 32}) {
    for (int k = 0; k < n; ++k) EXPECT_LE(quadrants_of_slice(SliceSpec::make(n, k)).size(), 2u);
  }
}

TEST(QuadrantsOfSlice, CellsOfASectorLieInItsQuadrants) {
  const GridSpec g;
  for (int n : {4, 8, 16}) {
    for (int k = 0; k < n; ++k) {
      const auto spec = SliceSpec::make(n, k);
      const auto qs = quadrants_of_slice(spec);
      for (int i = 0; i < g.nx(); i += 7) {
        for (int j = 0; j < g.ny(); j += 7) {
          if (!spec.contains_azimuth(slicing_azimuth(g.x_center(i), g.y_center(j)))) continue;
          const bool covered = std::any_of(qs.begin(), qs.end(), [&](Quadrant q) { return in_quadrant(i, j, g.nx(), g.ny(), q); });
          ASSERT_TRUE(covered) << n << " " << k << " " << i << " " << j;
        }
      }
    }
  }
}

TEST(Crop, FourByFourExample) {
  BevMap m(4, 4, 1);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) m.at(i, j, 0) = static_cast<float>(10 * i + j);
  }
  const BevMap q0 = crop(m, Quadrant{0});
  EXPECT_EQ(q0.at(0, 0, 0), 22.f);
  EXPECT_EQ(q0.at(1, 1, 0), 33.f);
  const BevMap q2 = crop(m, Quadrant{2});
  EXPECT_EQ(q2.at(0, 0, 0), 0.f);
  EXPECT_EQ(q2.at(1, 0, 0), 10.f);
  EXPECT_EQ(crop(m, Quadrant{1}).at(0, 1, 0), 3.f);
  EXPECT_EQ(crop(m, Quadrant{3}).at(1, 0, 0), 30.f);
  EXPECT_THROW(crop(BevMap(3, 4, 1), Quadrant{0}), ConfigError);
}

TEST(CropUncrop, ExhaustiveOnEightByEight) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const BevMap m = random_map(seed, 8, 8, 3);
    const BevMap other = random_map(seed + 100, 8, 8, 2);
    for (int qi = 0; qi < 4; ++qi) {
      const Quadrant q{qi};
      const BevMap back = uncrop(crop(m, q), q, 8, 8);
      for (int i = 0; i < 8; ++i) {
        for (int j = 0; j < 8; ++j) {
          const bool in = in_quadrant(i, j, 8, 8, q);
          ASSERT_EQ(back.occupied(i, j), in && m.occupied(i, j));
          for (int ch = 0; ch < 3; ++ch) ASSERT_EQ(back.at(i, j, ch), in ? m.at(i, j, ch) : 0.f);
        }
      }
      const BevMap small = crop(m, q);
      EXPECT_EQ(crop(uncrop(small, q, 8, 8), q), small);
      EXPECT_EQ(crop(fuse(m, other), q), fuse(crop(m, q), crop(other, q)));
    }
  }
}

TEST(CropUncrop, PropertiesOnFullSizeMaps) {
  const BevMap a = random_map(1, 512, 512, 2, 0.05);
  const BevMap b = random_map(2, 512, 512, 3, 0.05);
  for (int qi = 0; qi < 4; ++qi) {
    const Quadrant q{qi};
    const BevMap back = uncrop(crop(a, q), q, 512, 512);
    for (int i = 0; i < 512; ++i) {
      for (int j = 0; j < 512; ++j) {
        const bool in = in_quadrant(i, j, 512, 512, q);
        for (int ch = 0; ch < 2; ++ch) ASSERT_EQ(back.at(i, j, ch), in ? a.at(i, j, ch) : 0.f);
      }
    }
    EXPECT_EQ(crop(fuse(a, b), q), fuse(crop(a, q), crop(b, q)));
  }
}

TEST(Uncrop, ZerosAndTwoQuadrantScatter) {
  const BevMap zero(4, 4, 2);
  EXPECT_EQ(uncrop(zero, Quadrant{1}, 8, 8), BevMap(8, 8, 2));
  EXPECT_THROW(uncrop(zero, Quadrant{1}, 10, 8), ConfigError);

  // Sum of two uncropped quadrants equals scattering both blocks by index.
  const BevMap s0 = random_map(3, 4, 4, 1, 1.0), s3 = random_map(4, 4, 4, 1, 1.0);
  const BevMap u0 = uncrop(s0, Quadrant{0}, 8, 8), u3 = uncrop(s3, Quadrant{3}, 8, 8);
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) {
      float expected = 0.f;
      if (i >= 4 && j >= 4) expected = s0.at(i - 4, j - 4, 0);
      if (i >= 4 && j < 4) expected = s3.at(i - 4, j, 0);
      ASSERT_EQ(u0.at(i, j, 0) + u3.at(i, j, 0), expected);
    }
  }
}

TEST(Fuse, ChannelLayoutAndInjectivity) {
  const BevMap p = random_map(5, 6, 4, 3);
  const BevMap zero(6, 4, 3);
  const BevMap f = fuse(p, zero);
  EXPECT_EQ(f.c, 6);
  EXPECT_EQ(channel_slice(f, 0, 3).data, p.data);
  EXPECT_TRUE(std::all_of(channel_slice(f, 3, 3).data.begin(), channel_slice(f, 3, 3).data.end(), [](float v) { return v == 0.f; }));

  const BevMap i = random_map(6, 6, 4, 2);
  const BevMap g = fuse(p, i);
  EXPECT_EQ(channel_slice(g, 0, 3).data, p.data);
  EXPECT_EQ(channel_slice(g, 3, 2).data, i.data);
  for (int a = 0; a < 6; ++a) {
    for (int b = 0; b < 4; ++b) EXPECT_EQ(g.occupied(a, b), p.occupied(a, b) || i.occupied(a, b));
  }
  EXPECT_THROW(fuse(p, BevMap(4, 6, 3)), ConfigError);
  EXPECT_THROW(channel_slice(g, 4, 2), ConfigError);
}

TEST(ConvFlops, ClosedForms) {
  const ConvCostSpec one{64, 64, 1, 1, 1, 512, 512, 16};
  EXPECT_EQ(conv_flops(one), 2ULL * 64 * 64 * 512 * 512 * 16);
  EXPECT_EQ(conv_flops(cropped(one)) * 4, conv_flops(one));
  EXPECT_THROW(conv_flops(ConvCostSpec{0, 1, 1, 1, 1, 1, 1, 1}), ConfigError);
}

TEST(ConvFlops, CroppedRatioIsOneQuarter) {
  Rng rng(7);
  for (int k = 0; k < 200; ++k) {
    ConvStage stage{"s", {}};
    const int layers = 1 + static_cast<int>(rng.below(4));
    for (int l = 0; l < layers; ++l) {
      stage.layers.push_back(ConvCostSpec{1 + rng.below(128), 1 + rng.below(128), 1 + rng.below(5), 1 + rng.below(5),
                                          1 + rng.below(5), 2 * (1 + rng.below(300)), 2 * (1 + rng.below(300)),
                                          1 + rng.below(16)});
    }
    EXPECT_DOUBLE_EQ(cost_row(stage).ratio, 0.25);
  }
  const auto row = cost_row(projection_conv_stage(GridSpec{}));
  EXPECT_EQ(row.stage, "3d_convolutions");
  EXPECT_DOUBLE_EQ(row.ratio, 0.25);
  // Reference layer costs 178.9 vs 715.7.
  EXPECT_NEAR(row.ratio, 178.9 / 715.7, 0.001);
}

TEST(ConvFlops, LinearInChannelsAndVolume) {
  const ConvCostSpec base{8, 16, 3, 3, 3, 32, 32, 8};
  ConvCostSpec s = base;
  s.in_channels *= 3;
  EXPECT_EQ(conv_flops(s), 3 * conv_flops(base));
  s = base;
  s.out_channels *= 5;
  EXPECT_EQ(conv_flops(s), 5 * conv_flops(base));
  s = base;
  s.dz *= 2;
  EXPECT_EQ(conv_flops(s), 2 * conv_flops(base));
}
