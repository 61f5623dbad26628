#pragma once

#include <cstdint>
#include <vector>

#include "tio/geo/trajectory.hpp"
#include "tio/sim/world.hpp"

namespace tio::sim {

inline constexpr double kGravity = 9.81;

struct ImuSample {
  double t = 0.0;
  geo::Vec3 gyro = geo::Vec3::Zero();   ///< body angular rate, rad/s
  geo::Vec3 accel = geo::Vec3::Zero();  ///< body specific force, m/s^2
};

/**
 * Body-frame angular velocity and specific force by central differences of
 * a uniformly sampled trajectory, plus the rig's white noise and constant
 * bias. Gravity is 9.81 m/s^2 along world -z, so a resting IMU reads +9.81
 * on its up axis. End samples copy their neighbours. Throws ContractError
 * for fewer than 3 poses.
 */
std::vector<ImuSample> synthesize_imu(const geo::Trajectory& traj, const SensorRig& rig, std::uint64_t seed);

/// Linear interpolation of the stream at time t (clamped to its span).
ImuSample interpolate_imu(const std::vector<ImuSample>& imu, double t);

/**
 * Strapdown integration: R_{k+1} = R_k exp((w_k + w_{k+1}) h / 2), trapezoidal
 * velocity and second-order position updates. With v0 = (p1 - p0)/h - a0 h/2
 * the position recursion undoes synthesize_imu's differencing; what remains is
 * attitude integration error.
 */
geo::Trajectory dead_reckon(const std::vector<ImuSample>& imu, const geo::Pose6DoF& initial, const geo::Vec3& v0);

}  // namespace tio::sim
