#pragma once

#include <cstdint>
#include <vector>

#include "tio/geo/pose.hpp"
#include "tio/num/tensor.hpp"
#include "tio/util/config.hpp"

namespace tio::sim {

/// splitmix64 mix of a base seed and a stream id.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

struct Landmark {
  geo::Vec3 position;
  double appearance = 0.0;   ///< [0,1], drives the visual channels
  double temperature = 0.0;  ///< [0,1], drives the thermal channel
};

struct WorldConfig {
  std::size_t landmark_count = 400;
  std::size_t min_landmarks = 200;
  double extent = 12.0;  ///< half-width of the square floor area, m
  double min_height = 0.0;
  double max_height = 3.0;
  double hot_fraction = 0.15;

  void validate() const;
  void store(util::KeyValueConfig& cfg) const;
  static WorldConfig load(const util::KeyValueConfig& cfg);
};

/// Point landmarks. Appearance and temperature are independent draws.
struct World {
  std::vector<Landmark> landmarks;
  double extent = 12.0;
};

World generate_world(std::uint64_t seed, const WorldConfig& cfg = {});

/**
 * \brief Camera, thermal-sensor and IMU parameters shared by all sequences.
 *
 * Frames are rendered as [c, h, w] tensors. NUC freezes start at
 * nuc_offset + k * nuc_period (k >= 0) and last nuc_freeze seconds.
 */
struct SensorRig {
  std::size_t width = 16;
  std::size_t height = 16;
  std::size_t channels = 3;
  double imu_rate = 200.0;
  double frame_rate = 60.0;

  double fpn_sigma = 0.01;
  std::uint64_t fpn_seed = 17;
  double thermal_gain = 0.5;  ///< dynamic-range compression of temperature contrast

  bool nuc_enabled = false;
  double nuc_period = 30.0;
  double nuc_freeze = 1.0;
  double nuc_offset = 15.0;

  double time_misalignment = 0.0;

  double gyro_noise = 0.004;   ///< rad/s per sample
  double accel_noise = 0.04;   ///< m/s^2 per sample
  geo::Vec3 gyro_bias{0.004, -0.003, 0.002};
  geo::Vec3 accel_bias{0.08, -0.06, 0.05};

  double focal() const { return 0.5 * static_cast<double>(width); }
  bool in_nuc_freeze(double t) const;
  /// Per-pixel thermal offsets, [h, w].
  num::Tensor fixed_pattern() const;
  /// Copy with all IMU noise and bias set to zero.
  SensorRig noiseless() const;

  void validate() const;
  void store(util::KeyValueConfig& cfg) const;
  static SensorRig load(const util::KeyValueConfig& cfg);
};

}  // namespace tio::sim
