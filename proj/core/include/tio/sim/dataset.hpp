#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "tio/geo/trajectory.hpp"
#include "tio/sim/imu.hpp"
#include "tio/sim/motion.hpp"
#include "tio/sim/render.hpp"
#include "tio/sim/world.hpp"

namespace tio::sim {

inline constexpr std::size_t kImuWindow = 20;
inline constexpr std::size_t kImuChannels = 6;

using FramePtr = std::shared_ptr<const Frame>;

struct FramePair {
  FramePtr first;
  FramePtr second;
};

struct Sample {
  FramePair thermal_pair;
  FramePair visual_pair;
  num::Tensor imu_window;  ///< [20, 6] time-major rows: gx gy gz ax ay az
  geo::Pose6DoF rel_pose_gt;
  double t0 = 0.0;
  double t1 = 0.0;
  bool thermal_frozen = false;  ///< both thermal frames bit-identical (NUC freeze)
};

struct Sequence {
  std::string name;
  Profile profile = Profile::PlanarWalk;
  std::vector<double> frame_times;
  geo::Trajectory gt{{geo::TimedPose{}}};      ///< at frame timestamps
  geo::Trajectory gt_imu{{geo::TimedPose{}}};  ///< at imu_rate
  std::vector<ImuSample> imu;
  std::vector<FramePtr> thermal;
  std::vector<FramePtr> visual;
  std::vector<Sample> samples;
};

struct DatasetConfig {
  std::uint64_t world_seed = 1;
  std::uint64_t sequence_seed = 100;
  std::size_t n_sequences = 10;
  double duration = 60.0;
  double subsample_fps = 4.5;
  std::vector<std::string> profiles{"planar_walk", "corridor_loop", "robot_smooth"};
  /// When false, windows may be linearly upsampled from fewer than 20 raw IMU samples.
  bool enforce_imu_ratio = true;
  WorldConfig world;
  SensorRig rig;

  void validate() const;
  void store(util::KeyValueConfig& cfg) const;
  static DatasetConfig load(const util::KeyValueConfig& cfg);
  /// FNV-1a of the stored configuration text.
  std::string hash() const;
};

struct Dataset {
  DatasetConfig config;
  std::vector<Sequence> sequences;

  std::size_t sample_count() const;
};

/// Stamps of the frames kept when subsampling a frame_rate stream to fps: round(k * frame_rate / fps) / frame_rate.
std::vector<double> subsample_times(double frame_rate, double fps, double duration);

Dataset make_dataset(const DatasetConfig& cfg);
Dataset make_dataset(std::uint64_t world_seed, const SensorRig& rig, std::size_t n_sequences, double duration,
                     double subsample_fps = 4.5);

/// Rebuilds seq.samples from its frames, IMU stream and ground truth.
void build_samples(Sequence& seq);

/// Writes manifest.ini plus one directory per sequence.
void write_dataset(const std::filesystem::path& dir, const Dataset& dataset);
Dataset read_dataset(const std::filesystem::path& dir);

/// Binary frame container: magic "TIOFRM01", u32 w, h, c, u64 count, little-endian f64 pixels.
void write_frames(const std::filesystem::path& path, const std::vector<FramePtr>& frames);
std::vector<FramePtr> read_frames(const std::filesystem::path& path);

/// CSV with header `timestamp,gx,gy,gz,ax,ay,az`.
void write_imu_csv(const std::filesystem::path& path, const std::vector<ImuSample>& imu);
std::vector<ImuSample> read_imu_csv(const std::filesystem::path& path);

}  // namespace tio::sim
