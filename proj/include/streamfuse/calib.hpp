#pragma once

// Pinhole camera model, rigid ego->camera transforms and calibration noise.
//
// Conventions:
//   ego / LiDAR frame: +x forward, +y left, +z up (meters)
//   camera frame:      +z forward (optical axis), +x right, +y down
//   Extrinsics map ego to camera: p_cam = R * p_ego + t

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "streamfuse/error.hpp"
#include "streamfuse/rng.hpp"

namespace streamfuse {

inline constexpr double kDegToRad = std::numbers::pi / 180.0;
inline constexpr double kRadToDeg = 180.0 / std::numbers::pi;

struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int image_w = 1;
  int image_h = 1;

  void validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) throw ConfigError("intrinsics: focal lengths must be positive");
    if (image_w <= 0 || image_h <= 0) throw ConfigError("intrinsics: image size must be positive");
    if (!(cx >= 0.0 && cx < image_w) || !(cy >= 0.0 && cy < image_h)) {
      throw ConfigError("intrinsics: principal point outside the image");
    }
  }
};

struct Extrinsics {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  /// Camera center expressed in the ego frame.
  Eigen::Vector3d center() const { return -rotation.transpose() * translation; }

  void validate(double tol = 1e-9) const {
    const Eigen::Matrix3d gram = rotation.transpose() * rotation;
    if ((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > tol) {
      throw ConfigError("extrinsics: rotation is not orthonormal");
    }
    if (std::abs(rotation.determinant() - 1.0) > tol) {
      throw ConfigError("extrinsics: rotation determinant is not +1");
    }
  }
};

struct Camera {
  Intrinsics intrinsics;
  Extrinsics extrinsics;
  double fov_deg = 70.0;             // horizontal
  double azimuth_center_deg = 0.0;   // mounting azimuth in the ego frame

  void validate() const {
    intrinsics.validate();
    extrinsics.validate();
    if (!(fov_deg > 0.0 && fov_deg <= 180.0)) throw ConfigError("camera: fov_deg must be in (0, 180]");
    if (!(azimuth_center_deg >= 0.0 && azimuth_center_deg < 360.0)) {
      throw ConfigError("camera: azimuth_center_deg must be in [0, 360)");
    }
  }
};

struct CameraRig {
  std::vector<Camera> cameras;

  std::size_t size() const { return cameras.size(); }
  void validate() const {
    for (const auto& c : cameras) c.validate();
  }
};

/// Uniform per-axis calibration error bounds.
struct CalibNoise {
  double max_angle_deg = 0.0;
  double max_trans_m = 0.0;
  std::uint64_t seed = 0;

  bool is_zero() const { return max_angle_deg == 0.0 && max_trans_m == 0.0; }
};

struct PixelHit {
  double u;
  double v;
  double depth;  // camera-frame z
};

struct Ray {
  Eigen::Vector3d origin;
  Eigen::Vector3d direction;  // unit length

  Eigen::Vector3d at(double t) const { return origin + t * direction; }
  double distance_to(const Eigen::Vector3d& p) const {
    return (p - origin).cross(direction).norm();
  }
};

/// Perspective projection [u, v] = Pi(K (R p + t)). Empty when the point is
/// behind the camera or lands outside [0, w) x [0, h).
inline std::optional<PixelHit> project_point(const Eigen::Vector3d& p, const Intrinsics& intr,
                                             const Extrinsics& extr) {
  const Eigen::Vector3d pc = extr.rotation * p + extr.translation;
  if (!(pc.z() > 0.0)) return std::nullopt;
  const double u = intr.fx * pc.x() / pc.z() + intr.cx;
  const double v = intr.fy * pc.y() / pc.z() + intr.cy;
  if (!(u >= 0.0 && u < intr.image_w && v >= 0.0 && v < intr.image_h)) return std::nullopt;
  return PixelHit{u, v, pc.z()};
}

/// Back-projects a pixel to an ego-frame ray from the camera center. Every
/// point origin + s * direction (s > 0) projects back onto (u, v).
inline Ray cast_pixel_ray(double u, double v, const Intrinsics& intr, const Extrinsics& extr) {
  if (!(u >= 0.0 && u < intr.image_w && v >= 0.0 && v < intr.image_h)) {
    throw std::out_of_range("cast_pixel_ray: pixel (" + std::to_string(u) + ", " +
                            std::to_string(v) + ") outside the image");
  }
  const Eigen::Vector3d dir_cam((u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, 1.0);
  return Ray{extr.center(), (extr.rotation.transpose() * dir_cam).normalized()};
}

/// R = Rz(yaw) * Ry(pitch) * Rx(roll), angles in degrees.
inline Eigen::Matrix3d euler_to_rotation(double roll_deg, double pitch_deg, double yaw_deg) {
  const Eigen::Matrix3d r =
      (Eigen::AngleAxisd(yaw_deg * kDegToRad, Eigen::Vector3d::UnitZ()) *
       Eigen::AngleAxisd(pitch_deg * kDegToRad, Eigen::Vector3d::UnitY()) *
       Eigen::AngleAxisd(roll_deg * kDegToRad, Eigen::Vector3d::UnitX()))
          .toRotationMatrix();
  return r;
}

/// Draws roll, pitch, yaw, tx, ty, tz (in that order) from `rng` and applies
/// them to `extr`: R' = R_noise * R, t' = t + dt.
inline Extrinsics perturb_extrinsics(const Extrinsics& extr, const CalibNoise& noise, Rng& rng) {
  const double roll = rng.symmetric(noise.max_angle_deg);
  const double pitch = rng.symmetric(noise.max_angle_deg);
  const double yaw = rng.symmetric(noise.max_angle_deg);
  const double tx = rng.symmetric(noise.max_trans_m);
  const double ty = rng.symmetric(noise.max_trans_m);
  const double tz = rng.symmetric(noise.max_trans_m);
  const Eigen::Vector3d dt(tx, ty, tz);
  if (noise.is_zero()) return extr;
  Extrinsics out;
  out.rotation = euler_to_rotation(roll, pitch, yaw) * extr.rotation;
  out.translation = extr.translation + dt;
  return out;
}

inline Extrinsics perturb_extrinsics(const Extrinsics& extr, const CalibNoise& noise) {
  Rng rng(noise.seed);
  return perturb_extrinsics(extr, noise, rng);
}

/// Perturbs every camera of a rig. Camera k draws from its own sub-stream so
/// the draw for one camera does not depend on how many cameras precede it, and
/// the unit draws are shared across noise magnitudes for a fixed seed.
inline CameraRig perturb_rig(const CameraRig& rig, const CalibNoise& noise) {
  CameraRig out = rig;
  for (std::size_t k = 0; k < rig.cameras.size(); ++k) {
    Rng rng = Rng::substream(noise.seed, "calib_noise/camera" + std::to_string(k));
    out.cameras[k].extrinsics = perturb_extrinsics(rig.cameras[k].extrinsics, noise, rng);
  }
  return out;
}

/// Extrinsics of a level camera at `position` (ego frame) looking along
/// `azimuth_deg`.
inline Extrinsics look_at_azimuth(double azimuth_deg, const Eigen::Vector3d& position) {
  const double a = azimuth_deg * kDegToRad;
  Eigen::Matrix3d r;
  r.row(0) = Eigen::Vector3d(std::sin(a), -std::cos(a), 0.0);  // camera +x (right)
  r.row(1) = Eigen::Vector3d(0.0, 0.0, -1.0);                  // camera +y (down)
  r.row(2) = Eigen::Vector3d(std::cos(a), std::sin(a), 0.0);   // optical axis
  return Extrinsics{r, -r * position};
}

/// Camera whose horizontal FoV spans `fov_deg` across `image_w` pixels, square
/// pixels, principal point at the image center.
inline Camera make_camera(double azimuth_deg, double fov_deg, int image_w, int image_h,
                          const Eigen::Vector3d& position = Eigen::Vector3d::Zero()) {
  Camera cam;
  const double f = 0.5 * image_w / std::tan(0.5 * fov_deg * kDegToRad);
  cam.intrinsics = Intrinsics{f, f, 0.5 * image_w, 0.5 * image_h, image_w, image_h};
  cam.extrinsics = look_at_azimuth(azimuth_deg, position);
  cam.fov_deg = fov_deg;
  cam.azimuth_center_deg = azimuth_deg;
  return cam;
}

/// Six-camera surround rig: five 70 degree cameras and a 110 degree rear camera.
inline CameraRig surround_rig(int image_w = 320, int image_h = 180) {
  CameraRig rig;
  for (const auto& [az, fov] : {std::pair{0.0, 70.0}, std::pair{55.0, 70.0}, std::pair{110.0, 70.0},
                                std::pair{180.0, 110.0}, std::pair{250.0, 70.0},
                                std::pair{305.0, 70.0}}) {
    rig.cameras.push_back(make_camera(az, fov, image_w, image_h));
  }
  return rig;
}

}  // namespace streamfuse
