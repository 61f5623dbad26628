#pragma once

#include <span>

#include "tio/geo/pose.hpp"
#include "tio/num/ops.hpp"
#include "tio/train/config.hpp"

namespace tio::train {

/// Elementwise robust penalty: Huber with knot delta, or 0.5 x^2 for the L2 variant.
num::Var penalty(num::Var x, double delta, LossKind kind = LossKind::Huber);

/// Summed penalty of one feature discrepancy a_h - a_v; a_v is a constant (teacher output).
num::Var feature_loss(num::Var a_h, const num::Tensor& a_v, double delta, LossKind kind = LossKind::Huber);

/**
 * Mean over the batch of summed elementwise penalties on a_H - a_V. The teacher
 * features are taken as constants so no gradient reaches the teacher.
 * Throws ContractError on a batch or feature size mismatch.
 */
num::Var hallucination_loss(std::span<const num::Var> a_h, std::span<const num::Tensor> a_v, double delta,
                            LossKind kind = LossKind::Huber);

/// Unnormalised pose loss of one pair: P(t_hat - t) + alpha * P(wrap(r_hat - r)).
num::Var pose_loss(num::Var t_hat, num::Var r_hat, const geo::Pose6DoF& truth, double alpha, double delta,
                   LossKind kind = LossKind::Huber);

/// Batch mean of pose_loss. Throws ContractError when the spans differ in length or are empty.
num::Var regression_loss(std::span<const num::Var> t_hat, std::span<const num::Var> r_hat,
                         std::span<const geo::Pose6DoF> truth, double alpha, double delta,
                         LossKind kind = LossKind::Huber);

}  // namespace tio::train
