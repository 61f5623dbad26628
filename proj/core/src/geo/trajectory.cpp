#include "tio/geo/trajectory.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <tuple>

#include "tio/util/error.hpp"

namespace tio::geo {

Trajectory::Trajectory(std::vector<TimedPose> poses) : poses_(std::move(poses)) {
  if (poses_.empty()) throw ContractError("trajectory must contain at least one pose");
  for (std::size_t i = 1; i < poses_.size(); ++i) {
    if (!(poses_[i].timestamp > poses_[i - 1].timestamp)) {
      throw ContractError("trajectory timestamps must be strictly increasing (index " + std::to_string(i) + ")");
    }
  }
}

double Trajectory::path_length() const {
  double len = 0.0;
  for (std::size_t i = 1; i < poses_.size(); ++i) len += (poses_[i].pose.t() - poses_[i - 1].pose.t()).norm();
  return len;
}

Trajectory integrate(const Pose6DoF& initial, std::span<const Pose6DoF> rels, std::span<const double> timestamps) {
  if (timestamps.size() != rels.size() + 1) {
    throw ContractError("integrate: expected " + std::to_string(rels.size() + 1) + " timestamps, got " +
                        std::to_string(timestamps.size()));
  }
  std::vector<TimedPose> out;
  out.reserve(timestamps.size());
  out.push_back({timestamps[0], initial});
  for (std::size_t i = 0; i < rels.size(); ++i) {
    out.push_back({timestamps[i + 1], compose(out.back().pose, rels[i])});
  }
  return Trajectory(std::move(out));
}

std::vector<Pose6DoF> relative_poses(const Trajectory& traj) {
  std::vector<Pose6DoF> rels;
  rels.reserve(traj.size() - 1);
  for (std::size_t i = 1; i < traj.size(); ++i) rels.push_back(relative(traj[i - 1].pose, traj[i].pose));
  return rels;
}

Trajectory transform(const Trajectory& traj, const Pose6DoF& T) {
  std::vector<TimedPose> out;
  out.reserve(traj.size());
  for (const auto& tp : traj) out.push_back({tp.timestamp, compose(T, tp.pose)});
  return Trajectory(std::move(out));
}

std::vector<IndexPair> associate(const Trajectory& est, const Trajectory& ref, double max_dt) {
  // Candidate pairs within max_dt; both timestamp lists are sorted, so a sliding
  // window over ref keeps this linear in the number of candidates.
  std::vector<std::tuple<double, std::size_t, std::size_t>> candidates;
  std::size_t lo = 0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const double te = est[i].timestamp;
    while (lo < ref.size() && ref[lo].timestamp < te - max_dt) ++lo;
    for (std::size_t j = lo; j < ref.size() && ref[j].timestamp <= te + max_dt; ++j) {
      candidates.emplace_back(std::abs(ref[j].timestamp - te), i, j);
    }
  }
  std::sort(candidates.begin(), candidates.end());

  std::vector<bool> est_used(est.size(), false), ref_used(ref.size(), false);
  std::vector<IndexPair> pairs;
  for (const auto& [dt, i, j] : candidates) {
    if (est_used[i] || ref_used[j]) continue;
    est_used[i] = ref_used[j] = true;
    pairs.emplace_back(i, j);
  }
  if (pairs.empty()) throw EmptyAssociationError("no estimated pose lies within max_dt of a reference pose");
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

namespace {

struct Centered {
  Vec3 mean_est, mean_ref;
  Mat3 cross;  // sum (ref_i - mean_ref)(est_i - mean_est)^T
  double var_est = 0.0;
};

Centered center(std::span<const Vec3> est, std::span<const Vec3> ref) {
  if (est.size() != ref.size()) throw ContractError("horn_align: point sets differ in size");
  if (est.size() < 3) throw AlignmentError("horn_align: need at least 3 matched pairs, got " + std::to_string(est.size()));
  Centered c;
  c.mean_est.setZero();
  c.mean_ref.setZero();
  for (std::size_t i = 0; i < est.size(); ++i) {
    c.mean_est += est[i];
    c.mean_ref += ref[i];
  }
  c.mean_est /= static_cast<double>(est.size());
  c.mean_ref /= static_cast<double>(est.size());
  c.cross.setZero();
  for (std::size_t i = 0; i < est.size(); ++i) {
    const Vec3 de = est[i] - c.mean_est;
    c.cross += (ref[i] - c.mean_ref) * de.transpose();
    c.var_est += de.squaredNorm();
  }
  return c;
}

}  // namespace

RigidTransform horn_align(std::span<const Vec3> est, std::span<const Vec3> ref) {
  const Centered c = center(est, ref);
  Eigen::JacobiSVD<Mat3> svd(c.cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 s = svd.singularValues();
  if (!(s(0) > 0.0) || s(1) <= 1e-12 * s(0)) {
    throw AlignmentError("horn_align: cross-covariance is rank deficient (collinear or coincident points)");
  }
  Mat3 D = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0) D(2, 2) = -1.0;
  RigidTransform T;
  T.R = svd.matrixU() * D * svd.matrixV().transpose();
  T.t = c.mean_ref - T.R * c.mean_est;
  return T;
}

double similarity_scale(std::span<const Vec3> est, std::span<const Vec3> ref) {
  const Centered c = center(est, ref);
  Eigen::JacobiSVD<Mat3> svd(c.cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vec3 d(1.0, 1.0, 1.0);
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0) d(2) = -1.0;
  if (!(c.var_est > 0.0)) throw AlignmentError("similarity_scale: estimated points have zero spread");
  return svd.singularValues().dot(d) / c.var_est;
}

double ate(const Trajectory& est, const Trajectory& ref, double max_dt) {
  const auto pairs = associate(est, ref, max_dt);
  std::vector<Vec3> pe, pr;
  pe.reserve(pairs.size());
  pr.reserve(pairs.size());
  for (const auto& [i, j] : pairs) {
    pe.push_back(est[i].pose.t());
    pr.push_back(ref[j].pose.t());
  }
  const RigidTransform T = horn_align(pe, pr);
  double sq = 0.0;
  for (std::size_t k = 0; k < pe.size(); ++k) sq += (T.apply(pe[k]) - pr[k]).squaredNorm();
  return std::sqrt(sq / static_cast<double>(pe.size()));
}

RpeResult rpe(const Trajectory& est, const Trajectory& ref, std::size_t delta, double max_dt) {
  if (delta == 0) throw ContractError("rpe: delta must be at least 1");
  const auto pairs = associate(est, ref, max_dt);
  if (pairs.size() <= delta) {
    throw ContractError("rpe: need more than " + std::to_string(delta) + " associated poses, got " +
                        std::to_string(pairs.size()));
  }
  RpeResult out;
  double t_sq = 0.0, r_sq = 0.0;
  for (std::size_t k = 0; k + delta < pairs.size(); ++k) {
    const auto [ei, rj] = pairs[k];
    const auto [ek, rk] = pairs[k + delta];
    const Pose6DoF est_rel = relative(est[ei].pose, est[ek].pose);
    const Pose6DoF ref_rel = relative(ref[rj].pose, ref[rk].pose);
    const Mat3 Rr = ref_rel.rotation();
    const Vec3 dt = Rr.transpose() * (est_rel.t() - ref_rel.t());
    const Mat3 dR = Rr.transpose() * est_rel.rotation();
    const double te = dt.norm();
    const double re = rotation_angle(dR) * 180.0 / std::numbers::pi;
    out.t_errors.push_back(te);
    out.r_errors.push_back(re);
    t_sq += te * te;
    r_sq += re * re;
  }
  const auto n = static_cast<double>(out.t_errors.size());
  out.t_rms = std::sqrt(t_sq / n);
  out.r_rms = std::sqrt(r_sq / n);
  return out;
}

}  // namespace tio::geo
