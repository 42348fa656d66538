#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "streamfuse/calib.hpp"
#include "streamfuse/error.hpp"

namespace streamfuse {

/// One LiDAR return: (x, y, z, r, m, s).
struct PointRecord {
  float x = 0.f;
  float y = 0.f;
  float z = 0.f;
  float r = 0.f;  // reflectance [0, 1]
  float m = 0.f;  // relative timestamp (s)
  int s = 0;      // slice index

  friend bool operator==(const PointRecord&, const PointRecord&) = default;
};

struct Box3D {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d dims = Eigen::Vector3d::Ones();  // length (along yaw), width, height
  double yaw = 0.0;                                 // radians, [-pi, pi)
  int class_id = 0;
  double score = 1.0;

  friend bool operator==(const Box3D& a, const Box3D& b) {
    return a.center == b.center && a.dims == b.dims && a.yaw == b.yaw &&
           a.class_id == b.class_id && a.score == b.score;
  }
};

inline double wrap_angle(double a) {
  a = std::fmod(a + std::numbers::pi, 2.0 * std::numbers::pi);
  if (a < 0.0) a += 2.0 * std::numbers::pi;
  a -= std::numbers::pi;
  return a >= std::numbers::pi ? -std::numbers::pi : a;
}

inline double wrap_deg(double a) {
  a = std::fmod(a, 360.0);
  if (a < 0.0) a += 360.0;
  return a >= 360.0 ? 0.0 : a;
}

/// Counterclockwise angle from +x, in [0, 360).
inline double azimuth_deg(double x, double y) {
  if (x == 0.0 && y == 0.0) throw std::domain_error("azimuth_deg: undefined at the origin");
  return wrap_deg(std::atan2(y, x) * kRadToDeg);
}

/// Index of the half-open sector [k*360/n, (k+1)*360/n) containing `az_deg`.
/// Every sector membership test in the library goes through this function so
/// the partition is exact even at floating-point boundaries.
inline int sector_of(double az_deg, int n_slices) {
  const int k = static_cast<int>(std::floor(az_deg * n_slices / 360.0));
  return std::clamp(k, 0, n_slices - 1);
}

struct SliceSpec {
  int n_slices = 1;
  int index = 0;
  double az_start_deg = 0.0;
  double az_end_deg = 360.0;

  static SliceSpec make(int n_slices, int index) {
    if (n_slices < 1) throw ConfigError("slice count must be >= 1");
    if (index < 0 || index >= n_slices) throw ConfigError("slice index out of range");
    const double w = 360.0 / n_slices;
    return SliceSpec{n_slices, index, index * w, (index + 1) * w};
  }

  double width_deg() const { return 360.0 / n_slices; }
  bool contains_azimuth(double az_deg) const { return sector_of(az_deg, n_slices) == index; }
};

struct PointCloudSlice {
  SliceSpec spec;
  std::vector<PointRecord> points;
};

/// Azimuth of a point for slicing purposes. Returns at the ego origin have no
/// azimuth; they are treated as azimuth 0 so that every point is still placed
/// in exactly one slice.
inline double slicing_azimuth(double x, double y) {
  return (x == 0.0 && y == 0.0) ? 0.0 : azimuth_deg(x, y);
}

/// Splits a sweep into n azimuthal slices and stamps each point's slice index.
inline std::vector<PointCloudSlice> slice_sweep(std::span<const PointRecord> points, int n) {
  if (n < 1) throw ConfigError("slice_sweep: n must be >= 1");
  std::vector<PointCloudSlice> slices;
  slices.reserve(n);
  for (int k = 0; k < n; ++k) slices.push_back(PointCloudSlice{SliceSpec::make(n, k), {}});
  for (PointRecord p : points) {
    const int k = sector_of(slicing_azimuth(p.x, p.y), n);
    p.s = k;
    slices[k].points.push_back(p);
  }
  return slices;
}

/// BEV footprint corners, counterclockwise starting at front-left.
inline std::array<Eigen::Vector2d, 4> box_corners_bev(const Box3D& box) {
  const double hl = 0.5 * box.dims.x();
  const double hw = 0.5 * box.dims.y();
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const Eigen::Vector2d ctr(box.center.x(), box.center.y());
  auto corner = [&](double lx, double ly) -> Eigen::Vector2d { return ctr + Eigen::Vector2d(c * lx - s * ly, s * lx + c * ly); };
  return {corner(hl, hw), corner(-hl, hw), corner(-hl, -hw), corner(hl, -hw)};
}

/// Corner rule: a box belongs to a slice if at least one BEV corner lies in
/// the slice sector. A box may therefore belong to several slices.
inline bool box_touches_slice(const Box3D& box, const SliceSpec& spec) {
  for (const auto& c : box_corners_bev(box)) {
    if (spec.contains_azimuth(slicing_azimuth(c.x(), c.y()))) return true;
  }
  return false;
}

inline std::vector<Box3D> assign_boxes_to_slice(std::span<const Box3D> boxes, const SliceSpec& spec) {
  std::vector<Box3D> out;
  for (const auto& b : boxes) {
    if (box_touches_slice(b, spec)) out.push_back(b);
  }
  return out;
}

/// True when the closed arc [a_start, a_start + a_len] and the half-open arc
/// [b_start, b_start + b_len) share a point on the circle.
inline bool arcs_intersect(double a_start, double a_len, double b_start, double b_len) {
  if (a_len >= 360.0 || b_len >= 360.0) return true;
  return wrap_deg(b_start - a_start) <= a_len || wrap_deg(a_start - b_start) < b_len;
}

/// Cameras whose horizontal FoV interval overlaps the slice sector.
inline std::vector<int> cameras_for_slice(const SliceSpec& spec, const CameraRig& rig) {
  std::vector<int> out;
  for (std::size_t k = 0; k < rig.cameras.size(); ++k) {
    const auto& cam = rig.cameras[k];
    if (arcs_intersect(wrap_deg(cam.azimuth_center_deg - 0.5 * cam.fov_deg), cam.fov_deg,
                       spec.az_start_deg, spec.width_deg())) {
      out.push_back(static_cast<int>(k));
    }
  }
  return out;
}

}  // namespace streamfuse
