#pragma once

#include "tio/model/config.hpp"
#include "tio/num/tensor.hpp"
#include "tio/sim/dataset.hpp"

namespace tio::model {

/// Stacks a frame pair into [2c, h, w] and subtracts the per-channel mean (empty mean: no shift).
num::Tensor prepare_pair(const sim::FramePair& pair, const std::vector<double>& mean);

/// Standardises each of the 6 IMU axes.
num::Tensor prepare_imu(const num::Tensor& window, const Normalization& norm);

/// Per-channel frame means and per-axis IMU statistics over every sample of the dataset.
Normalization compute_normalization(const sim::Dataset& dataset);

/// Throws CompatibilityError when the dataset's frames or IMU windows do not fit the model.
void check_compatible(const ModelConfig& cfg, const sim::DatasetConfig& data);

/// ModelConfig whose frame geometry matches the dataset's rig.
ModelConfig config_for(const sim::DatasetConfig& data, ModelConfig base = {});

}  // namespace tio::model
