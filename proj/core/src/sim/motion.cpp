#include "tio/sim/motion.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "tio/sim/world.hpp"
#include "tio/util/error.hpp"

namespace tio::sim {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}  // namespace

Profile parse_profile(const std::string& name) {
  if (name == "planar_walk") return Profile::PlanarWalk;
  if (name == "corridor_loop") return Profile::CorridorLoop;
  if (name == "robot_smooth") return Profile::RobotSmooth;
  throw ConfigError("unknown trajectory profile '" + name + "'");
}

std::string profile_name(Profile p) {
  switch (p) {
    case Profile::PlanarWalk: return "planar_walk";
    case Profile::CorridorLoop: return "corridor_loop";
    case Profile::RobotSmooth: return "robot_smooth";
  }
  return "unknown";
}

MotionModel::MotionModel(std::uint64_t seed, double duration, Profile profile)
    : profile_(profile), duration_(duration) {
  if (!(duration > 0.0)) throw ConfigError("trajectory duration must be positive");
  std::mt19937_64 rng(derive_seed(seed, 0x3a));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto uni = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };

  const bool walking = profile != Profile::RobotSmooth;
  if (walking) {
    height_ = uni(1.3, 1.5);
    bob_amp_ = 0.02;
    step_freq_ = uni(1.6, 2.0);
    roll_amp_ = 0.03;
    pitch_amp_ = 0.02;
    yaw_sway_ = 0.03;
  } else {
    height_ = 0.3;
  }
  osc_phase_ = uni(0.0, kTwoPi);

  if (profile == Profile::CorridorLoop) {
    loop_a_ = uni(6.0, 8.0);
    loop_b_ = uni(3.0, 4.5);
    loop_c_ = 0.06 * loop_a_;
    loop_theta0_ = uni(0.0, kTwoPi);
    const double h = std::pow((loop_a_ - loop_b_) / (loop_a_ + loop_b_), 2);
    const double perimeter = kPi * (loop_a_ + loop_b_) * (1.0 + 3.0 * h / (10.0 + std::sqrt(4.0 - 3.0 * h)));
    const double loops = std::max(1.0, std::round(uni(0.9, 1.3) * duration / perimeter));
    loop_speed_ = kTwoPi * loops / duration;
    const double cycles = std::max(1.0, std::round(duration / 12.0));
    warp_rate_ = kTwoPi * cycles / duration;
    warp_beta_ = 0.2;
    warp_phase_ = 0.0;
    return;
  }

  const double radius = walking ? uni(2.5, 4.5) : uni(2.0, 4.0);
  const double speed = walking ? uni(0.9, 1.3) : uni(0.4, 0.6);
  const double dir = u01(rng) < 0.5 ? -1.0 : 1.0;
  const double base_rate = dir * speed / radius;
  terms_.push_back({radius, base_rate, uni(0.0, kTwoPi)});
  const double multipliers[2] = {-2.0, 3.0};
  for (double m : multipliers) {
    const double frac = walking ? uni(0.05, 0.15) : uni(0.03, 0.08);
    const double rate = base_rate * m;
    terms_.push_back({frac * speed / std::abs(rate), rate, uni(0.0, kTwoPi)});
  }
  center_ = {uni(-1.5, 1.5), uni(-1.5, 1.5), 0.0};
  warp_beta_ = walking ? 0.2 : 0.05;
  warp_rate_ = kTwoPi * uni(0.05, 0.12);
  warp_phase_ = uni(0.0, kTwoPi);
}

double MotionModel::warp(double t) const {
  return t + (warp_beta_ / warp_rate_) * (std::sin(warp_rate_ * t + warp_phase_) - std::sin(warp_phase_));
}

void MotionModel::planar(double s, double& x, double& y, double& dx, double& dy) const {
  if (profile_ == Profile::CorridorLoop) {
    const double th = loop_theta0_ + loop_speed_ * s;
    x = loop_a_ * std::cos(th) + loop_c_ * std::cos(3.0 * th);
    y = loop_b_ * std::sin(th) - loop_c_ * std::sin(3.0 * th);
    dx = -loop_a_ * std::sin(th) - 3.0 * loop_c_ * std::sin(3.0 * th);
    dy = loop_b_ * std::cos(th) - 3.0 * loop_c_ * std::cos(3.0 * th);
    dx *= loop_speed_;
    dy *= loop_speed_;
    return;
  }
  x = center_.x();
  y = center_.y();
  dx = dy = 0.0;
  for (const auto& term : terms_) {
    const double a = term.rate * s + term.phase;
    x += term.amp * std::cos(a);
    y += term.amp * std::sin(a);
    dx -= term.amp * term.rate * std::sin(a);
    dy += term.amp * term.rate * std::cos(a);
  }
}

geo::Vec3 MotionModel::position_at(double t) const {
  double x, y, dx, dy;
  planar(warp(t), x, y, dx, dy);
  const double z = height_ + bob_amp_ * std::sin(kTwoPi * step_freq_ * t + osc_phase_);
  return {x, y, z};
}

geo::Pose6DoF MotionModel::pose_at(double t) const {
  double x, y, dx, dy;
  planar(warp(t), x, y, dx, dy);
  const double gait = kTwoPi * step_freq_ * t + osc_phase_;
  const double z = height_ + bob_amp_ * std::sin(gait);
  const double yaw = std::atan2(dy, dx) + yaw_sway_ * std::sin(0.5 * gait);
  const double roll = roll_amp_ * std::sin(0.5 * gait);
  const double pitch = pitch_amp_ * std::sin(gait + 0.5);
  return {geo::Vec3(x, y, z), geo::Vec3(roll, pitch, yaw)};
}

geo::Vec3 MotionModel::velocity_at(double t) const {
  constexpr double h = 1e-5;
  return (position_at(t + h) - position_at(t - h)) / (2.0 * h);
}

geo::Trajectory generate_trajectory(std::uint64_t seed, double duration, Profile profile, double imu_rate) {
  if (!(imu_rate > 0.0)) throw ConfigError("imu_rate must be positive");
  const MotionModel model(seed, duration, profile);
  const auto n = static_cast<std::size_t>(std::floor(duration * imu_rate + 1e-9)) + 1;
  std::vector<geo::TimedPose> poses;
  poses.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / imu_rate;
    poses.push_back({t, model.pose_at(t)});
  }
  return geo::Trajectory(std::move(poses));
}

}  // namespace tio::sim
