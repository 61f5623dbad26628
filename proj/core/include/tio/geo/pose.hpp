#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace tio::geo {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

/**
 * \brief Euler angles in the intrinsic Z-Y-X (yaw-pitch-roll) convention.
 *
 * Stored as (roll, pitch, yaw): rotation about body x, y and z respectively,
 * with R = Rz(yaw) * Ry(pitch) * Rx(roll). Every conversion, loss and file
 * boundary in the library uses this single convention.
 */
Mat3 euler_to_rotmat(const Vec3& rpy);

/// Inverse of euler_to_rotmat. Throws GeometryError when R is not a proper rotation
/// (tolerance 1e-9). At gimbal lock (|pitch| = pi/2 within 1e-9) yaw is set to 0.
Vec3 rotmat_to_euler(const Mat3& R);

/// Wraps each component into (-pi, pi].
Vec3 wrap_euler(const Vec3& rpy);

/// Geodesic angle of a rotation matrix, radians in [0, pi].
double rotation_angle(const Mat3& R);

/// Relative or absolute rigid-body pose: translation in meters plus wrapped Euler angles.
class Pose6DoF {
 public:
  Pose6DoF() : t_(Vec3::Zero()), r_(Vec3::Zero()) {}
  Pose6DoF(const Vec3& t, const Vec3& rpy) : t_(t), r_(wrap_euler(rpy)) {}

  static Pose6DoF identity() { return {}; }
  static Pose6DoF from_matrix(const Vec3& t, const Mat3& R) { return {t, rotmat_to_euler(R)}; }
  static Pose6DoF from_quaternion(const Vec3& t, const Quat& q);

  const Vec3& t() const { return t_; }
  const Vec3& r() const { return r_; }
  Mat3 rotation() const { return euler_to_rotmat(r_); }
  Quat quaternion() const;

  Pose6DoF inverse() const;

 private:
  Vec3 t_;
  Vec3 r_;
};

/// parent * relative: R = R_p R_rel, t = R_p t_rel + t_p.
Pose6DoF compose(const Pose6DoF& parent, const Pose6DoF& relative);

/// parent^-1 * child.
Pose6DoF relative(const Pose6DoF& parent, const Pose6DoF& child);

}  // namespace tio::geo
