// Rigid 6-DOF pose and small geometry helpers shared across the library.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

namespace meshreg {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

inline double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

// Rigid transform mapping model coordinates into camera coordinates:
//
//   p_cam = R * p_model + t
//
// Rotation is stored as fixed-axis (extrinsic) XYZ Euler angles in degrees,
// R = Rz(rz) * Ry(ry) * Rx(rx); translation is in millimeters. This
// convention is used everywhere in the library and in serialized records.
struct RigidPose {
  Vec3 rotation_deg = Vec3::Zero();
  Vec3 translation = Vec3::Zero();

  RigidPose() = default;
  RigidPose(const Vec3& rot_deg, const Vec3& trans)
      : rotation_deg(rot_deg), translation(trans) {}

  Mat3 rotation() const {
    const double rx = deg2rad(rotation_deg.x());
    const double ry = deg2rad(rotation_deg.y());
    const double rz = deg2rad(rotation_deg.z());
    Mat3 Rx, Ry, Rz;
    Rx = Eigen::AngleAxisd(rx, Vec3::UnitX());
    Ry = Eigen::AngleAxisd(ry, Vec3::UnitY());
    Rz = Eigen::AngleAxisd(rz, Vec3::UnitZ());
    return Rz * Ry * Rx;
  }

  Mat4 matrix() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = rotation();
    m.topRightCorner<3, 1>() = translation;
    return m;
  }

  Vec3 apply(const Vec3& p) const { return rotation() * p + translation; }

  RigidPose inverse() const {
    const Mat3 Rt = rotation().transpose();
    return from_matrix(Rt, -Rt * translation);
  }

  // Recovers the Euler XYZ angles from a rotation matrix. At the gimbal
  // singularity (|ry| = 90 deg) rz is fixed to zero.
  static RigidPose from_matrix(const Mat3& R, const Vec3& t) {
    RigidPose p;
    p.translation = t;
    const double sy = -R(2, 0);
    if (std::abs(sy) < 1.0 - 1e-12) {
      p.rotation_deg.x() = rad2deg(std::atan2(R(2, 1), R(2, 2)));
      p.rotation_deg.y() = rad2deg(std::asin(std::clamp(sy, -1.0, 1.0)));
      p.rotation_deg.z() = rad2deg(std::atan2(R(1, 0), R(0, 0)));
    } else {
      const double sign = sy > 0 ? 1.0 : -1.0;
      p.rotation_deg.x() = rad2deg(std::atan2(sign * R(0, 1), R(1, 1)));
      p.rotation_deg.y() = sign * 90.0;
      p.rotation_deg.z() = 0.0;
    }
    return p;
  }
};

// Composition (outer ∘ inner): applies `inner` first, then `outer`.
inline RigidPose compose(const RigidPose& outer, const RigidPose& inner) {
  const Mat3 R = outer.rotation() * inner.rotation();
  const Vec3 t = outer.rotation() * inner.translation + outer.translation;
  return RigidPose::from_matrix(R, t);
}

}  // namespace meshreg
