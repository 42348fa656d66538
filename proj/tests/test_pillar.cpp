#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>

#include "streamfuse/io.hpp"
#include "streamfuse/pillar.hpp"
#include "streamfuse/rng.hpp"

using namespace streamfuse;

namespace {

PointRecord pt(float x, float y, float z, float r = 0.5f, float m = 0.01f, int s = 0) { return {x, y, z, r, m, s}; }

std::vector<PointRecord> cloud(std::uint64_t seed, int n, double extent = 10.0) {
  Rng rng(seed);
  std::vector<PointRecord> out;
  for (int k = 0; k < n; ++k) {
    out.push_back(pt(static_cast<float>(rng.uniform(-extent, extent)), static_cast<float>(rng.uniform(-extent, extent)),
                     static_cast<float>(rng.uniform(-2, 2)), static_cast<float>(rng.uniform()),
                     static_cast<float>(rng.uniform(0, 0.05)), static_cast<int>(rng.below(8))));
  }
  return out;
}

GridSpec small_grid(int c = 8) {
  GridSpec g;
  g.x_min = g.y_min = -12.8;
  g.x_max = g.y_max = 12.8;
  g.cell_xy = 0.4;
  g.channels = c;
  return g;
}

}  // namespace

TEST(GridSpec, DefaultDims) {
  const GridSpec g;
  EXPECT_EQ(g.nx(), 512);
  EXPECT_EQ(g.ny(), 512);
  EXPECT_EQ(g.nz(), 16);
  EXPECT_NO_THROW(g.validate());
  GridSpec bad;
  bad.cell_xy = 0.3;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = GridSpec{};
  bad.channels = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Pillarize, Examples) {
  const GridSpec g;
  const std::vector<PointRecord> pts{pt(0, 0, 0), pt(-51.2f, -51.2f, 0), pt(60, 0, 0)};
  const auto set = pillarize(pts, g);
  EXPECT_EQ(set.dropped, 1u);
  EXPECT_EQ(set.point_count(), 2u);
  EXPECT_TRUE(set.pillars.contains({256, 256}));
  EXPECT_TRUE(set.pillars.contains({0, 0}));
}

TEST(Pillarize, RangeEdgesAreHalfOpen) {
  const GridSpec g;
  const std::vector<PointRecord> pts{pt(51.2f, 0, 0), pt(51.19f, 0, 0), pt(0, 0, 5.0f), pt(0, 0, -3.0f), pt(0, 0, -3.01f)};
  const auto set = pillarize(pts, g);
  EXPECT_EQ(set.dropped, 3u);
  EXPECT_TRUE(set.pillars.contains({511, 256}));
  EXPECT_EQ(set.pillars.at({256, 256}).size(), 1u);
}

TEST(Pillarize, EveryPointLandsInItsFloorCell) {
  const GridSpec g = small_grid();
  const auto pts = cloud(1, 5000, 14.0);
  const auto set = pillarize(pts, g);
  std::size_t inside = 0;
  for (const auto& p : pts) {
    const double fi = std::floor((p.x - g.x_min) / g.cell_xy);
    const double fj = std::floor((p.y - g.y_min) / g.cell_xy);
    if (fi < 0 || fi >= g.nx() || fj < 0 || fj >= g.ny()) continue;
    ++inside;
    const auto& cell = set.pillars.at({static_cast<int>(fi), static_cast<int>(fj)});
    EXPECT_NE(std::find(cell.begin(), cell.end(), p), cell.end());
  }
  EXPECT_EQ(set.point_count(), inside);
  EXPECT_EQ(set.dropped, pts.size() - inside);
}

TEST(ReferenceEncoder, WeightsMatchIndependentGenerator) {
  // tests/oracles/rng_reference.py
  const ReferencePillarEncoder enc(64, 0);
  EXPECT_EQ(enc.weight(0, 0), -0.537363588809967f);
  EXPECT_EQ(enc.weight(0, 1), -0.9676054120063782f);
  EXPECT_EQ(enc.weight(0, 2), 0.16832494735717773f);
  EXPECT_EQ(enc.weight(0, 3), 0.8387399315834045f);
}

TEST(ReferenceEncoder, ShippedFixtureMatchesSeed) {
  const auto path = std::filesystem::path(STREAMFUSE_SOURCE_DIR) / "data" / "pillar_encoder_c64_seed0.bin";
  const auto loaded = io::load_encoder_weights(path);
  const ReferencePillarEncoder fresh(64, 0);
  EXPECT_EQ(loaded.channels(), 64);
  EXPECT_EQ(loaded.seed(), 0u);
  ASSERT_EQ(loaded.weights().size(), fresh.weights().size());
  EXPECT_TRUE(std::equal(loaded.weights().begin(), loaded.weights().end(), fresh.weights().begin()));
}

TEST(EncodePillars, EmptySliceGivesZeroMap) {
  const GridSpec g = small_grid();
  const ReferencePillarEncoder enc(8, 1);
  const auto map = encode_pillars(pillarize(std::vector<PointRecord>{}, g), g, enc);
  EXPECT_TRUE(std::all_of(map.data.begin(), map.data.end(), [](float v) { return v == 0.f; }));
  EXPECT_TRUE(std::all_of(map.mask.begin(), map.mask.end(), [](auto v) { return v == 0; }));
}

TEST(EncodePillars, SinglePointHandEvaluation) {
  const GridSpec g = small_grid();
  const ReferencePillarEncoder enc(8, 2);
  const PointRecord p = pt(1.1f, -2.3f, 0.7f, 0.25f, 0.0125f, 3);
  const auto map = encode_pillars(pillarize(std::vector<PointRecord>{p}, g), g, enc);
  const int i = *g.ix(p.x), j = *g.iy(p.y);
  ASSERT_TRUE(map.occupied(i, j));
  // Inputs: x, y, z, r, m, s, offset to the pillar center, offset to the
  // mean height (zero for a single point).
  const double a[9] = {p.x, p.y, p.z, p.r, p.m, 3.0, p.x - g.x_center(i), p.y - g.y_center(j), 0.0};
  for (int ch = 0; ch < 8; ++ch) {
    double acc = 0.0;
    for (int k = 0; k < 9; ++k) acc += static_cast<double>(enc.weight(ch, k)) * a[k];
    EXPECT_EQ(map.at(i, j, ch), static_cast<float>(std::max(acc, 0.0)));
  }
}

TEST(EncodePillars, PermutationInvariance) {
  const GridSpec g = small_grid();
  const ReferencePillarEncoder enc(8, 3);
  auto pts = cloud(4, 3000, 3.0);  // dense: many points per pillar
  const auto a = encode_pillars(pillarize(pts, g), g, enc);
  Rng rng(5);
  std::shuffle(pts.begin(), pts.end(), rng);
  const auto b = encode_pillars(pillarize(pts, g), g, enc);
  EXPECT_EQ(a, b);
}

TEST(EncodePillars, LocalityOfMovesInsideAPillar) {
  const GridSpec g = small_grid();
  const ReferencePillarEncoder enc(8, 6);
  auto pts = cloud(7, 2000, 5.0);
  const auto before = encode_pillars(pillarize(pts, g), g, enc);
  // Move one point within its own pillar.
  PointRecord& p = pts[123];
  const int i = *g.ix(p.x), j = *g.iy(p.y);
  p.x = static_cast<float>(g.x_center(i) + 0.1);
  p.y = static_cast<float>(g.y_center(j) - 0.1);
  p.z += 0.3f;
  const auto after = encode_pillars(pillarize(pts, g), g, enc);
  for (int a = 0; a < g.nx(); ++a) {
    for (int b = 0; b < g.ny(); ++b) {
      if (a == i && b == j) continue;
      for (int ch = 0; ch < 8; ++ch) ASSERT_EQ(before.at(a, b, ch), after.at(a, b, ch));
    }
  }
  EXPECT_EQ(before.mask, after.mask);
}

TEST(EncodePillars, MaskMatchesOccupancy) {
  const GridSpec g = small_grid();
  const ReferencePillarEncoder enc(8, 8);
  const auto pts = cloud(9, 400, 14.0);
  const auto set = pillarize(pts, g);
  const auto map = encode_pillars(set, g, enc);
  for (int i = 0; i < g.nx(); ++i) {
    for (int j = 0; j < g.ny(); ++j) ASSERT_EQ(map.occupied(i, j), set.pillars.contains({i, j}));
  }
}

TEST(EncodePillars, ChannelMismatchIsConfigError) {
  const GridSpec g = small_grid(8);
  const ReferencePillarEncoder enc(16, 0);
  EXPECT_THROW(encode_pillars(PillarSet{}, g, enc), ConfigError);
  EXPECT_THROW(ReferencePillarEncoder(4, std::vector<float>(35)), ConfigError);
}
