#include "tio/geo/pose.hpp"

#include <cmath>
#include <numbers>

#include "tio/num/ops.hpp"
#include "tio/util/error.hpp"

namespace tio::geo {

namespace {
constexpr double kRotationTol = 1e-9;
constexpr double kGimbalTol = 1e-9;
}  // namespace

Mat3 euler_to_rotmat(const Vec3& rpy) {
  const double cr = std::cos(rpy.x()), sr = std::sin(rpy.x());
  const double cp = std::cos(rpy.y()), sp = std::sin(rpy.y());
  const double cy = std::cos(rpy.z()), sy = std::sin(rpy.z());
  Mat3 R;
  R << cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr,
       sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr,
       -sp, cp * sr, cp * cr;
  return R;
}

Vec3 rotmat_to_euler(const Mat3& R) {
  if (!R.allFinite()) throw GeometryError("rotation matrix has non-finite entries");
  const double ortho = (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff();
  const double det = R.determinant();
  if (ortho > kRotationTol || std::abs(det - 1.0) > kRotationTol) {
    throw GeometryError("matrix is not a proper rotation (orthonormality error " + std::to_string(ortho) +
                        ", det " + std::to_string(det) + ")");
  }
  const double cos_pitch = std::hypot(R(0, 0), R(1, 0));
  if (cos_pitch < kGimbalTol) {
    // Degenerate branch: yaw fixed to 0, roll absorbs the remaining freedom.
    const double pitch = R(2, 0) < 0 ? std::numbers::pi / 2 : -std::numbers::pi / 2;
    const double roll = std::atan2(-R(1, 2), R(1, 1));
    return wrap_euler(Vec3(roll, pitch, 0.0));
  }
  const double pitch = std::atan2(-R(2, 0), cos_pitch);
  const double yaw = std::atan2(R(1, 0), R(0, 0));
  const double roll = std::atan2(R(2, 1), R(2, 2));
  return wrap_euler(Vec3(roll, pitch, yaw));
}

Vec3 wrap_euler(const Vec3& rpy) {
  return {num::wrap_to_pi(rpy.x()), num::wrap_to_pi(rpy.y()), num::wrap_to_pi(rpy.z())};
}

double rotation_angle(const Mat3& R) {
  const double c = std::clamp((R.trace() - 1.0) * 0.5, -1.0, 1.0);
  return std::acos(c);
}

Pose6DoF Pose6DoF::from_quaternion(const Vec3& t, const Quat& q) {
  return from_matrix(t, q.normalized().toRotationMatrix());
}

Quat Pose6DoF::quaternion() const {
  Quat q(rotation());
  q.normalize();
  // Canonical hemisphere so written files are unambiguous.
  if (q.w() < 0) q.coeffs() *= -1.0;
  return q;
}

Pose6DoF Pose6DoF::inverse() const {
  const Mat3 Rt = rotation().transpose();
  return from_matrix(-(Rt * t_), Rt);
}

Pose6DoF compose(const Pose6DoF& parent, const Pose6DoF& rel) {
  const Mat3 Rp = parent.rotation();
  return Pose6DoF::from_matrix(Rp * rel.t() + parent.t(), Rp * rel.rotation());
}

Pose6DoF relative(const Pose6DoF& parent, const Pose6DoF& child) {
  const Mat3 Rpt = parent.rotation().transpose();
  return Pose6DoF::from_matrix(Rpt * (child.t() - parent.t()), Rpt * child.rotation());
}

}  // namespace tio::geo
