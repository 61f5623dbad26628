#include "tio/sim/imu.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <random>

#include "tio/util/error.hpp"

namespace tio::sim {

namespace {

geo::Vec3 log_so3(const geo::Mat3& R) {
  const Eigen::AngleAxisd aa(R);
  return aa.angle() * aa.axis();
}

geo::Mat3 exp_so3(const geo::Vec3& w) {
  const double angle = w.norm();
  if (angle < 1e-300) return geo::Mat3::Identity();
  return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
}

const geo::Vec3 kGravityVec(0.0, 0.0, -kGravity);

}  // namespace

std::vector<ImuSample> synthesize_imu(const geo::Trajectory& traj, const SensorRig& rig, std::uint64_t seed) {
  const std::size_t n = traj.size();
  if (n < 3) throw ContractError("synthesize_imu needs at least 3 poses, got " + std::to_string(n));
  std::vector<geo::Mat3> R(n);
  for (std::size_t i = 0; i < n; ++i) R[i] = traj[i].pose.rotation();

  std::vector<ImuSample> out(n);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = traj[i].timestamp - traj[i - 1].timestamp;
    const double h1 = traj[i + 1].timestamp - traj[i].timestamp;
    const geo::Vec3& pm = traj[i - 1].pose.t();
    const geo::Vec3& p0 = traj[i].pose.t();
    const geo::Vec3& pp = traj[i + 1].pose.t();
    const geo::Vec3 a = 2.0 * ((pp - p0) / h1 - (p0 - pm) / h0) / (h0 + h1);
    out[i].t = traj[i].timestamp;
    out[i].gyro = log_so3(R[i - 1].transpose() * R[i + 1]) / (h0 + h1);
    out[i].accel = R[i].transpose() * (a - kGravityVec);
  }
  out[0] = out[1];
  out[0].t = traj[0].timestamp;
  out[n - 1] = out[n - 2];
  out[n - 1].t = traj[n - 1].timestamp;

  std::mt19937_64 rng(derive_seed(seed, 0x1b));
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (auto& s : out) {
    for (int k = 0; k < 3; ++k) s.gyro[k] += rig.gyro_bias[k] + rig.gyro_noise * gauss(rng);
    for (int k = 0; k < 3; ++k) s.accel[k] += rig.accel_bias[k] + rig.accel_noise * gauss(rng);
  }
  return out;
}

ImuSample interpolate_imu(const std::vector<ImuSample>& imu, double t) {
  if (imu.empty()) throw ContractError("interpolate_imu on an empty stream");
  if (t <= imu.front().t) return imu.front();
  if (t >= imu.back().t) return imu.back();
  const auto it = std::upper_bound(imu.begin(), imu.end(), t, [](double v, const ImuSample& s) { return v < s.t; });
  const ImuSample& b = *it;
  const ImuSample& a = *(it - 1);
  const double u = (t - a.t) / (b.t - a.t);
  ImuSample s;
  s.t = t;
  s.gyro = (1.0 - u) * a.gyro + u * b.gyro;
  s.accel = (1.0 - u) * a.accel + u * b.accel;
  return s;
}

geo::Trajectory dead_reckon(const std::vector<ImuSample>& imu, const geo::Pose6DoF& initial, const geo::Vec3& v0) {
  if (imu.empty()) throw ContractError("dead_reckon on an empty stream");
  std::vector<geo::TimedPose> poses;
  poses.reserve(imu.size());
  geo::Mat3 R = initial.rotation();
  geo::Vec3 p = initial.t();
  geo::Vec3 v = v0;
  geo::Vec3 a = R * imu[0].accel + kGravityVec;
  poses.push_back({imu[0].t, initial});
  for (std::size_t k = 0; k + 1 < imu.size(); ++k) {
    const double h = imu[k + 1].t - imu[k].t;
    p += v * h + 0.5 * a * h * h;
    R = R * exp_so3(0.5 * (imu[k].gyro + imu[k + 1].gyro) * h);
    const geo::Vec3 a_next = R * imu[k + 1].accel + kGravityVec;
    v += 0.5 * (a + a_next) * h;
    a = a_next;
    poses.push_back({imu[k + 1].t, geo::Pose6DoF::from_matrix(p, R)});
  }
  return geo::Trajectory(std::move(poses));
}

}  // namespace tio::sim
