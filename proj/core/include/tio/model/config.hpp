#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tio/util/config.hpp"

namespace tio::model {

/// Input normalisation: per-channel frame means and per-axis IMU mean/std, estimated on training data.
struct Normalization {
  std::vector<double> thermal_mean;  ///< one per frame channel
  std::vector<double> visual_mean;
  std::vector<double> imu_mean{0, 0, 0, 0, 0, 0};
  std::vector<double> imu_std{1, 1, 1, 1, 1, 1};
};

/**
 * \brief Network geometry shared by the student and the teacher.
 *
 * Feature length of a conv encoder is
 * conv_channels.back() * (h / 2^L) * (w / 2^L) / feature_pool, and the IMU
 * feature is (imu_hidden / imu_pool) * 20.
 */
struct ModelConfig {
  std::size_t width = 16;
  std::size_t height = 16;
  std::size_t channels = 3;
  std::vector<std::size_t> conv_channels{8, 16, 32};
  std::size_t kernel = 3;
  std::size_t stride = 2;
  std::size_t padding = 1;
  std::size_t feature_pool = 2;
  std::size_t imu_hidden = 32;
  std::size_t imu_pool = 4;
  std::size_t imu_steps = 20;
  std::size_t regressor_hidden = 64;
  std::vector<std::size_t> fc_widths{128, 64, 3};
  double dropout = 0.25;
  bool selective_fusion = true;
  std::uint64_t init_seed = 1;
  Normalization norm;

  /// The published layer sizes: 2048-d visual features, 256-unit IMU LSTM, 512-unit regressor.
  static ModelConfig paper_scale();
  /// Frames 8x8, all dims <= 32; used by gradient checks.
  static ModelConfig tiny();

  std::size_t conv_out_height() const;
  std::size_t conv_out_width() const;
  std::size_t feature_dim() const;  ///< d_T = d_H = d_V
  std::size_t imu_dim() const;      ///< d_I
  std::size_t fused_dim() const { return 2 * feature_dim() + imu_dim(); }

  /// Throws ConfigError when the geometry is inconsistent.
  void validate() const;
  void store(util::KeyValueConfig& cfg) const;
  static ModelConfig load(const util::KeyValueConfig& cfg);
  /// Hash of the input geometry only (frame size and IMU window), for dataset compatibility checks.
  std::string input_signature() const;
};

}  // namespace tio::model
