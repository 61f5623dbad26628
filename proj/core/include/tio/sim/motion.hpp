#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tio/geo/trajectory.hpp"

namespace tio::sim {

enum class Profile { PlanarWalk, CorridorLoop, RobotSmooth };

/// Throws ConfigError on an unknown name.
Profile parse_profile(const std::string& name);
std::string profile_name(Profile p);

/**
 * \brief Closed-form smooth body motion.
 *
 * Position is a sum of circular terms under a monotone time warp; heading
 * follows the horizontal velocity. Every coordinate is a finite sum of
 * sinusoids, so the pose curve is C-infinity and defined for any t.
 */
class MotionModel {
 public:
  MotionModel(std::uint64_t seed, double duration, Profile profile);

  geo::Pose6DoF pose_at(double t) const;
  geo::Vec3 position_at(double t) const;
  /// World-frame velocity by central difference of position_at.
  geo::Vec3 velocity_at(double t) const;

  Profile profile() const { return profile_; }
  double duration() const { return duration_; }

 private:
  struct Term {
    double amp, rate, phase;
  };

  double warp(double t) const;
  /// Planar point and its derivative at warped time s.
  void planar(double s, double& x, double& y, double& dx, double& dy) const;

  Profile profile_;
  double duration_;
  geo::Vec3 center_{0.0, 0.0, 0.0};
  std::vector<Term> terms_;
  double warp_beta_ = 0.0, warp_rate_ = 1.0, warp_phase_ = 0.0;
  // corridor loop: ellipse with a third harmonic
  double loop_a_ = 0.0, loop_b_ = 0.0, loop_c_ = 0.0, loop_theta0_ = 0.0, loop_speed_ = 0.0;
  // walking oscillations
  double height_ = 0.0, bob_amp_ = 0.0, step_freq_ = 0.0, roll_amp_ = 0.0, pitch_amp_ = 0.0, yaw_sway_ = 0.0;
  double osc_phase_ = 0.0;
};

/// Samples the motion model at imu_rate over [0, duration]. Throws ConfigError when duration <= 0.
geo::Trajectory generate_trajectory(std::uint64_t seed, double duration, Profile profile, double imu_rate = 200.0);

}  // namespace tio::sim
