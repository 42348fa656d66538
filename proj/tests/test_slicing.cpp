#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <tuple>

#include "oracles/oracles.hpp"
#include "streamfuse/calib.hpp"
#include "streamfuse/rng.hpp"
#include "streamfuse/slicing.hpp"

using namespace streamfuse;
using namespace oracle;

namespace {

std::vector<PointRecord> random_points(std::uint64_t seed, int n) {
  Rng rng(seed);
  std::vector<PointRecord> pts;
  for (int k = 0; k < n; ++k) {
    pts.push_back(PointRecord{static_cast<float>(rng.uniform(-60, 60)), static_cast<float>(rng.uniform(-60, 60)),
                              static_cast<float>(rng.uniform(-3, 5)), static_cast<float>(rng.uniform()),
                              static_cast<float>(k), 0});
  }
  return pts;
}

}  // namespace

TEST(Azimuth, Examples) {
  EXPECT_DOUBLE_EQ(azimuth_deg(1, 0), 0.0);
  EXPECT_DOUBLE_EQ(azimuth_deg(0, 1), 90.0);
  EXPECT_DOUBLE_EQ(azimuth_deg(-1, -1), 225.0);
  EXPECT_DOUBLE_EQ(azimuth_deg(1, -1e-300), 0.0);
  EXPECT_LT(azimuth_deg(1, -1e-9), 360.0);
  EXPECT_THROW(azimuth_deg(0, 0), std::domain_error);
}

TEST(SliceSpec, PartitionsTheCircle) {
  for (int n : {1, 3, 4, 8, 16}) {
    double prev_end = 0.0;
    for (int k = 0; k < n; ++k) {
      const auto s = SliceSpec::make(n, k);
      EXPECT_DOUBLE_EQ(s.az_start_deg, prev_end);
      EXPECT_NEAR(s.az_end_deg - s.az_start_deg, 360.0 / n, 1e-12);
      prev_end = s.az_end_deg;
    }
    EXPECT_DOUBLE_EQ(prev_end, 360.0);
  }
  EXPECT_THROW(SliceSpec::make(0, 0), ConfigError);
  EXPECT_THROW(SliceSpec::make(4, 4), ConfigError);
}

TEST(SliceSweep, OnePointPerQuadrantSlice) {
  std::vector<PointRecord> pts;
  for (double az : {10.0, 100.0, 190.0, 280.0}) {
    const double a = az * std::numbers::pi / 180.0;
    pts.push_back(PointRecord{static_cast<float>(10 * std::cos(a)), static_cast<float>(10 * std::sin(a)), 0, 0, 0, 0});
  }
  const auto slices = slice_sweep(pts, 4);
  ASSERT_EQ(slices.size(), 4u);
  for (int k = 0; k < 4; ++k) {
    ASSERT_EQ(slices[k].points.size(), 1u);
    EXPECT_EQ(slices[k].points[0].s, k);
  }
}

TEST(SliceSweep, SingleSliceIsIdentity) {
  const auto pts = random_points(1, 500);
  const auto slices = slice_sweep(pts, 1);
  ASSERT_EQ(slices.size(), 1u);
  EXPECT_EQ(slices[0].points, pts);
}

TEST(SliceSweep, BoundaryPointsGoToTheSectorStartingThere) {
  // Exactly on the 90 degree ray and on the +x axis.
  const std::vector<PointRecord> pts{{0, 5, 0, 0, 0, 0}, {5, 0, 0, 0, 0, 0}, {-5, 0, 0, 0, 0, 0}, {0, 0, 1, 0, 0, 0}};
  const auto slices = slice_sweep(pts, 4);
  EXPECT_EQ(slices[0].points.size(), 2u);  // +x axis and the origin return
  EXPECT_EQ(slices[1].points.size(), 1u);
  EXPECT_EQ(slices[2].points.size(), 1u);
  EXPECT_EQ(slices[3].points.size(), 0u);
}

TEST(SliceSweep, RejectsZeroSlices) {
  EXPECT_THROW(slice_sweep({}, 0), ConfigError);
}

TEST(SliceSweep, PartitionAndRefinementProperty) {
  const auto pts = random_points(2, 20000);
  std::map<int, std::vector<int>> slice_of;  // n -> slice per point (by timestamp id)
  for (int n : {1, 2, 4, 8, 16, 32}) {
    const auto slices = slice_sweep(pts, n);
    std::vector<int> owner(pts.size(), -1);
    std::size_t total = 0;
    for (const auto& s : slices) {
      for (const auto& p : s.points) {
        const auto id = static_cast<std::size_t>(p.m);
        ASSERT_EQ(owner[id], -1) << "point in two slices";
        owner[id] = s.spec.index;
        EXPECT_EQ(p.s, s.spec.index);
        ++total;
      }
    }
    ASSERT_EQ(total, pts.size());
    slice_of[n] = owner;
  }
  for (int n : {1, 2, 4, 8, 16}) {
    for (std::size_t k = 0; k < pts.size(); ++k) ASSERT_EQ(slice_of[2 * n][k] / 2, slice_of[n][k]);
  }
}

TEST(BoxCorners, Examples) {
  Box3D b;
  b.dims = {4, 2, 1};
  auto c = box_corners_bev(b);
  EXPECT_EQ(c[0], Eigen::Vector2d(2, 1));
  EXPECT_EQ(c[1], Eigen::Vector2d(-2, 1));
  EXPECT_EQ(c[2], Eigen::Vector2d(-2, -1));
  EXPECT_EQ(c[3], Eigen::Vector2d(2, -1));

  b.yaw = std::numbers::pi / 2;
  c = box_corners_bev(b);
  EXPECT_NEAR((c[0] - Eigen::Vector2d(-1, 2)).norm(), 0, 1e-12);
  EXPECT_NEAR((c[2] - Eigen::Vector2d(1, -2)).norm(), 0, 1e-12);

  b.yaw = std::numbers::pi / 4;
  b.center = {3, -1, 0};
  c = box_corners_bev(b);
  Eigen::Matrix2d r;
  r << std::cos(b.yaw), -std::sin(b.yaw), std::sin(b.yaw), std::cos(b.yaw);
  const Eigen::Vector2d expected = Eigen::Vector2d(3, -1) + r * Eigen::Vector2d(2, 1);
  EXPECT_NEAR((c[0] - expected).norm(), 0, 1e-12);
}

TEST(CornerRule, InsideStraddlingAndThinSector) {
  Box3D inside;
  inside.center = {10, 4, 0};
  inside.dims = {2, 1, 1};
  EXPECT_TRUE(box_touches_slice(inside, SliceSpec::make(8, 0)));
  EXPECT_FALSE(box_touches_slice(inside, SliceSpec::make(8, 1)));

  Box3D straddle;
  straddle.center = {10, 10, 0};  // on the 45 degree boundary
  straddle.dims = {3, 2, 1};
  straddle.yaw = 0.3;
  EXPECT_TRUE(box_touches_slice(straddle, SliceSpec::make(8, 0)));
  EXPECT_TRUE(box_touches_slice(straddle, SliceSpec::make(8, 1)));

  // Close, wide box centered in a 5.625 degree sector whose corners all fall
  // into the two neighboring sectors (half-angle about 5 degrees).
  Box3D wide;
  const double mid = (0.5 * 360.0 / 64) * std::numbers::pi / 180.0;
  wide.center = {5 * std::cos(mid), 5 * std::sin(mid), 0};
  wide.dims = {0.4, 0.9, 1};
  wide.yaw = mid;
  EXPECT_TRUE(SliceSpec::make(64, 0).contains_azimuth(azimuth_deg(wide.center.x(), wide.center.y())));
  EXPECT_FALSE(box_touches_slice(wide, SliceSpec::make(64, 0)));
  EXPECT_TRUE(box_touches_slice(wide, SliceSpec::make(64, 1)));
  EXPECT_TRUE(box_touches_slice(wide, SliceSpec::make(64, 63)));
}

TEST(CornerRule, MatchesBruteForceOracle) {
  Rng rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const Box3D b = random_box(rng);
    for (int n : {4, 8, 16, 32}) {
      for (int k = 0; k < n; ++k) ASSERT_EQ(box_touches_slice(b, SliceSpec::make(n, k)), oracle_touches(b, n, k));
    }
  }
}

TEST(CornerRule, EveryBoxAssignedSomewhere) {
  Rng rng(4);
  std::vector<Box3D> boxes;
  for (int k = 0; k < 300; ++k) boxes.push_back(random_box(rng));
  for (int n : {1, 4, 8, 16, 32}) {
    std::vector<int> hits(boxes.size(), 0);
    for (int k = 0; k < n; ++k) {
      const auto spec = SliceSpec::make(n, k);
      for (std::size_t b = 0; b < boxes.size(); ++b) hits[b] += box_touches_slice(boxes[b], spec);
    }
    for (int h : hits) EXPECT_GE(h, 1);
  }
}

TEST(CornerRule, ConsistentUnderSectorRotation) {
  Rng rng(5);
  const int n = 8;
  const double step = 2.0 * std::numbers::pi / n;
  for (int trial = 0; trial < 200; ++trial) {
    const Box3D b = random_box(rng);
    Box3D r = b;
    r.center.x() = std::cos(step) * b.center.x() - std::sin(step) * b.center.y();
    r.center.y() = std::sin(step) * b.center.x() + std::cos(step) * b.center.y();
    r.yaw = wrap_angle(b.yaw + step);
    for (int k = 0; k < n; ++k) {
      ASSERT_EQ(box_touches_slice(b, SliceSpec::make(n, k)), box_touches_slice(r, SliceSpec::make(n, (k + 1) % n)));
    }
  }
}

TEST(CamerasForSlice, Examples) {
  CameraRig rig;
  rig.cameras.push_back(make_camera(0.0, 70.0, 320, 180));
  rig.cameras.push_back(make_camera(180.0, 70.0, 320, 180));
  const auto cams = cameras_for_slice(SliceSpec::make(8, 0), rig);
  ASSERT_EQ(cams.size(), 1u);
  EXPECT_EQ(cams[0], 0);
}

TEST(CamerasForSlice, SurroundRigCoversEverySector) {
  const CameraRig rig = surround_rig();
  for (int n : {1, 4, 8, 16, 32}) {
    for (int k = 0; k < n; ++k) EXPECT_FALSE(cameras_for_slice(SliceSpec::make(n, k), rig).empty());
  }
  // Sweep: every integer azimuth is inside some camera's arc.
  for (int az = 0; az < 360; ++az) {
    bool covered = false;
    for (const auto& cam : rig.cameras) {
      covered = covered || wrap_deg(az - cam.azimuth_center_deg + 0.5 * cam.fov_deg) <= cam.fov_deg;
    }
    EXPECT_TRUE(covered) << az;
  }
}

TEST(CamerasForSlice, WrapAroundArcs) {
  // Camera centered at 350 spans [315, 25]: touches sector [0, 45) and [315, 360).
  CameraRig rig;
  rig.cameras.push_back(make_camera(350.0, 70.0, 320, 180));
  EXPECT_EQ(cameras_for_slice(SliceSpec::make(8, 0), rig).size(), 1u);
  EXPECT_EQ(cameras_for_slice(SliceSpec::make(8, 7), rig).size(), 1u);
  EXPECT_EQ(cameras_for_slice(SliceSpec::make(8, 1), rig).size(), 0u);
  EXPECT_EQ(cameras_for_slice(SliceSpec::make(8, 6), rig).size(), 0u);
  // Closed camera arc end touching the half-open sector start counts.
  EXPECT_TRUE(arcs_intersect(10, 35, 45, 45));
  EXPECT_FALSE(arcs_intersect(90, 10, 45, 45));
}
