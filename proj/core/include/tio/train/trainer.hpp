#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include "tio/model/network.hpp"
#include "tio/train/config.hpp"
#include "tio/train/data.hpp"

namespace tio::train {

struct EpochMetrics {
  std::size_t epoch = 0;  ///< counted from 1
  double loss = 0.0;      ///< mean per-sample training loss
  double val_ate = 0.0;   ///< NaN when not validated this epoch
  double lr = 0.0;
};

struct RunOptions {
  /// Run directory (config.ini, metrics.csv, last.ckpt, epoch_NNNN.ckpt, final.ckpt). Empty: nothing is written.
  std::filesystem::path run_dir;
  /// Continue from run_dir/last.ckpt when it exists.
  bool resume = false;
  /// Stop after this many epochs in total (0: run to the end). Models an interrupted run.
  std::size_t stop_after = 0;
  const std::vector<PreparedSequence>* validation = nullptr;
  std::function<void(const EpochMetrics&)> on_epoch;
};

struct TrainResult {
  std::vector<EpochMetrics> history;
  bool completed = false;
};

/**
 * Trains the visual-inertial teacher (visual encoder, IMU encoder, regressor)
 * on the pose loss with RMSProp and the step decay schedule. The teacher's
 * normalisation must already be set and `data` prepared with it.
 */
TrainResult train_teacher(model::Teacher& teacher, const std::vector<PreparedSequence>& data, const TrainConfig& cfg,
                          const RunOptions& opts = {});

/**
 * Distils the teacher's frozen visual features into the student's
 * hallucination encoder (Adam). Only halluc.* parameters change. The student
 * inherits the teacher's normalisation.
 */
TrainResult train_stage1(const model::Teacher& teacher, model::DeepTio& student,
                         const std::vector<PreparedSequence>& data, const TrainConfig& cfg,
                         const RunOptions& opts = {});

/**
 * Trains the thermal and IMU encoders, fusion and regressor on the pose loss
 * with the hallucination encoder frozen (its features are cached). LSTM states
 * are carried within a subsequence and reset between subsequences.
 */
TrainResult train_stage2(model::DeepTio& student, const std::vector<PreparedSequence>& data, const TrainConfig& cfg,
                         const RunOptions& opts = {});

/// Alternates phases that train only the fusion block and only the regressor.
TrainResult finetune_alternating(model::DeepTio& student, const std::vector<PreparedSequence>& data,
                                 const TrainConfig& cfg, const RunOptions& opts = {});

/// Mean per-sample pose loss in evaluation mode.
double validation_loss(const model::DeepTio& student, const std::vector<PreparedSequence>& data,
                       const TrainConfig& cfg);

/// Mean squared feature discrepancy |a_H - a_V|^2 / d over samples (optionally only unfrozen ones).
double feature_error(const model::Teacher& teacher, const model::DeepTio& student,
                     const std::vector<PreparedSequence>& data, bool clean_only);

/// Teacher visual features for every sample, indexed [sequence][sample].
std::vector<std::vector<num::Tensor>> teacher_features(const model::Teacher& teacher,
                                                       const std::vector<PreparedSequence>& data);

void write_metrics_csv(const std::filesystem::path& path, const std::vector<EpochMetrics>& history);

}  // namespace tio::train
