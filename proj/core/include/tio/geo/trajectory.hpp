#pragma once

#include <span>
#include <utility>
#include <vector>

#include "tio/geo/pose.hpp"

namespace tio::geo {

struct TimedPose {
  double timestamp = 0.0;  ///< seconds
  Pose6DoF pose;
};

/// Non-empty sequence of absolute poses with strictly increasing timestamps.
class Trajectory {
 public:
  explicit Trajectory(std::vector<TimedPose> poses);

  std::size_t size() const { return poses_.size(); }
  const TimedPose& operator[](std::size_t i) const { return poses_[i]; }
  const std::vector<TimedPose>& poses() const { return poses_; }
  auto begin() const { return poses_.begin(); }
  auto end() const { return poses_.end(); }

  /// Sum of consecutive position step lengths.
  double path_length() const;

 private:
  std::vector<TimedPose> poses_;
};

/// Cumulative composition of relative poses; requires timestamps.size() == rels.size() + 1.
Trajectory integrate(const Pose6DoF& initial, std::span<const Pose6DoF> rels, std::span<const double> timestamps);

/// Relative poses between consecutive entries: rels[i] = traj[i]^-1 * traj[i+1].
std::vector<Pose6DoF> relative_poses(const Trajectory& traj);

/// Applies x -> T * x to every pose of a trajectory.
Trajectory transform(const Trajectory& traj, const Pose6DoF& T);

using IndexPair = std::pair<std::size_t, std::size_t>;

/**
 * Matches each estimated pose to its nearest-in-time reference pose with
 * |dt| <= max_dt. Pairs are accepted greedily by ascending |dt| so the result
 * is one-to-one; it is returned sorted by estimate index. Throws
 * EmptyAssociationError when nothing matches.
 */
std::vector<IndexPair> associate(const Trajectory& est, const Trajectory& ref, double max_dt = 0.1);

struct RigidTransform {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return R * p + t; }
};

/// Least-squares R, t minimising sum |R est_i + t - ref_i|^2 (closed-form SVD, no scale).
/// Throws AlignmentError for fewer than 3 pairs or a rank-deficient cross-covariance.
RigidTransform horn_align(std::span<const Vec3> est, std::span<const Vec3> ref);

/// Scale of the similarity (Umeyama) alignment; a diagnostic for scale drift, never applied by ate().
double similarity_scale(std::span<const Vec3> est, std::span<const Vec3> ref);

/// RMS of post-alignment position residuals over associated pairs, meters.
double ate(const Trajectory& est, const Trajectory& ref, double max_dt = 0.1);

struct RpeResult {
  double t_rms = 0.0;    ///< meters
  double r_rms = 0.0;    ///< degrees
  std::vector<double> t_errors;  ///< per-window translation error, meters
  std::vector<double> r_errors;  ///< per-window rotation error, degrees
};

/// Relative pose error over windows of `delta` associated frames.
RpeResult rpe(const Trajectory& est, const Trajectory& ref, std::size_t delta = 1, double max_dt = 0.1);

}  // namespace tio::geo
