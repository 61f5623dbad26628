#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tio/geo/trajectory.hpp"
#include "tio/model/network.hpp"
#include "tio/train/data.hpp"

namespace tio::train {

struct EvalOptions {
  model::Mode mode = model::Mode::Full;
  double max_dt = 0.1;
  std::size_t rpe_delta = 1;
  std::size_t reset_every = 8;  ///< LSTM state reset interval; match the training subsequence length
};

struct SequenceMetrics {
  std::string sequence;
  double ate = 0.0;    ///< m
  double rpe_t = 0.0;  ///< m
  double rpe_r = 0.0;  ///< deg
};

/// Relative-pose predictions of the student for every sample, in evaluation mode.
std::vector<geo::Pose6DoF> predict(const model::DeepTio& net, const PreparedSequence& seq, const EvalOptions& opt);

/**
 * Teacher predictions. With `features` set, the visual encoder is bypassed and
 * features[i] is used as a_V for sample i (the hallucinated branch).
 */
std::vector<geo::Pose6DoF> predict(const model::Teacher& net, const PreparedSequence& seq, const EvalOptions& opt,
                                   const std::vector<num::Tensor>* features = nullptr);

/// Hallucinated features a_H for every sample of a sequence.
std::vector<num::Tensor> hallucinate(const model::DeepTio& net, const PreparedSequence& seq);

/// Chains relative poses from the sequence's first ground-truth pose at its frame timestamps.
geo::Trajectory integrate_sequence(const sim::Sequence& seq, std::span<const geo::Pose6DoF> rels);

/// ATE and RPE of an estimate against the sequence's frame-rate ground truth.
SequenceMetrics score(const sim::Sequence& seq, const geo::Trajectory& est, const EvalOptions& opt);

/// IMU-only strapdown integration from the true initial pose and velocity.
geo::Trajectory dead_reckoning(const sim::Sequence& seq);

std::vector<SequenceMetrics> evaluate(const model::DeepTio& net, const std::vector<PreparedSequence>& data,
                                      const EvalOptions& opt);
std::vector<SequenceMetrics> evaluate(const model::Teacher& net, const std::vector<PreparedSequence>& data,
                                      const EvalOptions& opt);
std::vector<SequenceMetrics> evaluate_dead_reckoning(const std::vector<PreparedSequence>& data, const EvalOptions& opt);

double mean_ate(std::span<const SequenceMetrics> rows);

}  // namespace tio::train
