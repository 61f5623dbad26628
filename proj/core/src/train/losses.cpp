#include "tio/train/losses.hpp"

#include "tio/util/error.hpp"

namespace tio::train {

namespace {

num::Var constant_vec(num::Tape& tape, const geo::Vec3& v) { return tape.constant(num::Tensor::vector({v.x(), v.y(), v.z()})); }

}  // namespace

num::Var penalty(num::Var x, double delta, LossKind kind) {
  return kind == LossKind::Huber ? num::huber(x, delta) : num::half_square(x);
}

num::Var feature_loss(num::Var a_h, const num::Tensor& a_v, double delta, LossKind kind) {
  if (a_h.size() != a_v.size()) {
    throw ContractError("feature sizes differ: " + std::to_string(a_h.size()) + " vs " + std::to_string(a_v.size()));
  }
  num::Tape& tape = a_h.tape();
  const num::Var target = tape.constant(a_v.reshaped(a_h.shape()));
  return num::sum(penalty(num::sub(a_h, target), delta, kind));
}

num::Var hallucination_loss(std::span<const num::Var> a_h, std::span<const num::Tensor> a_v, double delta,
                            LossKind kind) {
  if (a_h.empty() || a_h.size() != a_v.size()) throw ContractError("hallucination batch sizes differ or are empty");
  num::Var total = feature_loss(a_h[0], a_v[0], delta, kind);
  for (std::size_t i = 1; i < a_h.size(); ++i) total = num::add(total, feature_loss(a_h[i], a_v[i], delta, kind));
  return num::scale(total, 1.0 / static_cast<double>(a_h.size()));
}

num::Var pose_loss(num::Var t_hat, num::Var r_hat, const geo::Pose6DoF& truth, double alpha, double delta,
                   LossKind kind) {
  num::Tape& tape = t_hat.tape();
  const num::Var et = num::sub(t_hat, constant_vec(tape, truth.t()));
  const num::Var er = num::wrap_angle(num::sub(r_hat, constant_vec(tape, truth.r())));
  return num::add(num::sum(penalty(et, delta, kind)), num::scale(num::sum(penalty(er, delta, kind)), alpha));
}

num::Var regression_loss(std::span<const num::Var> t_hat, std::span<const num::Var> r_hat,
                         std::span<const geo::Pose6DoF> truth, double alpha, double delta, LossKind kind) {
  if (t_hat.empty() || t_hat.size() != r_hat.size() || t_hat.size() != truth.size()) {
    throw ContractError("regression batch sizes differ or are empty");
  }
  num::Var total = pose_loss(t_hat[0], r_hat[0], truth[0], alpha, delta, kind);
  for (std::size_t i = 1; i < t_hat.size(); ++i) {
    total = num::add(total, pose_loss(t_hat[i], r_hat[i], truth[i], alpha, delta, kind));
  }
  return num::scale(total, 1.0 / static_cast<double>(t_hat.size()));
}

}  // namespace tio::train
