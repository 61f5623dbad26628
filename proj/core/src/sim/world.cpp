#include "tio/sim/world.hpp"

#include <cmath>
#include <random>

#include "tio/util/error.hpp"

namespace tio::sim {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void WorldConfig::validate() const {
  if (landmark_count < min_landmarks) {
    throw ConfigError("world.landmark_count " + std::to_string(landmark_count) + " below minimum " +
                      std::to_string(min_landmarks));
  }
  if (!(extent > 0.0)) throw ConfigError("world.extent must be positive");
  if (!(max_height >= min_height)) throw ConfigError("world.max_height must be >= world.min_height");
  if (!(hot_fraction >= 0.0 && hot_fraction <= 1.0)) throw ConfigError("world.hot_fraction must lie in [0,1]");
}

void WorldConfig::store(util::KeyValueConfig& cfg) const {
  cfg.set("world.landmark_count", static_cast<std::uint64_t>(landmark_count));
  cfg.set("world.min_landmarks", static_cast<std::uint64_t>(min_landmarks));
  cfg.set("world.extent", extent);
  cfg.set("world.min_height", min_height);
  cfg.set("world.max_height", max_height);
  cfg.set("world.hot_fraction", hot_fraction);
}

WorldConfig WorldConfig::load(const util::KeyValueConfig& cfg) {
  WorldConfig w;
  w.landmark_count = cfg.get_uint("world.landmark_count", w.landmark_count);
  w.min_landmarks = cfg.get_uint("world.min_landmarks", w.min_landmarks);
  w.extent = cfg.get_double("world.extent", w.extent);
  w.min_height = cfg.get_double("world.min_height", w.min_height);
  w.max_height = cfg.get_double("world.max_height", w.max_height);
  w.hot_fraction = cfg.get_double("world.hot_fraction", w.hot_fraction);
  w.validate();
  return w;
}

World generate_world(std::uint64_t seed, const WorldConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(derive_seed(seed, 0x77));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  World world;
  world.extent = cfg.extent;
  world.landmarks.reserve(cfg.landmark_count);
  for (std::size_t i = 0; i < cfg.landmark_count; ++i) {
    Landmark lm;
    lm.position = {cfg.extent * (2.0 * u01(rng) - 1.0), cfg.extent * (2.0 * u01(rng) - 1.0),
                   cfg.min_height + (cfg.max_height - cfg.min_height) * u01(rng)};
    lm.appearance = u01(rng);
    const bool hot = u01(rng) < cfg.hot_fraction;
    const double v = u01(rng);
    lm.temperature = hot ? 0.7 + 0.3 * v : 0.45 + 0.1 * v;
    world.landmarks.push_back(lm);
  }
  return world;
}

bool SensorRig::in_nuc_freeze(double t) const {
  if (!nuc_enabled || t < nuc_offset) return false;
  const double phase = std::fmod(t - nuc_offset, nuc_period);
  return phase < nuc_freeze;
}

num::Tensor SensorRig::fixed_pattern() const {
  num::Tensor fpn({height, width});
  if (fpn_sigma == 0.0) return fpn;
  std::mt19937_64 rng(derive_seed(fpn_seed, 0xf9));
  std::normal_distribution<double> n(0.0, fpn_sigma);
  for (auto& v : fpn.data()) v = n(rng);
  return fpn;
}

SensorRig SensorRig::noiseless() const {
  SensorRig r = *this;
  r.gyro_noise = r.accel_noise = 0.0;
  r.gyro_bias.setZero();
  r.accel_bias.setZero();
  return r;
}

void SensorRig::validate() const {
  if (width == 0 || height == 0 || channels == 0) throw ConfigError("rig.width, rig.height, rig.channels must be positive");
  if (!(imu_rate > 0.0)) throw ConfigError("rig.imu_rate must be positive");
  if (!(frame_rate > 0.0)) throw ConfigError("rig.frame_rate must be positive");
  if (fpn_sigma < 0.0) throw ConfigError("rig.fpn_sigma must be non-negative");
  if (!(thermal_gain > 0.0)) throw ConfigError("rig.thermal_gain must be positive");
  if (nuc_enabled) {
    if (nuc_freeze < 0.5 || nuc_freeze > 1.0) throw ConfigError("rig.nuc_freeze must lie in [0.5, 1.0] s");
    if (!(nuc_period > nuc_freeze)) throw ConfigError("rig.nuc_period must exceed rig.nuc_freeze");
  }
  if (gyro_noise < 0.0 || accel_noise < 0.0) throw ConfigError("rig noise sigmas must be non-negative");
}

namespace {

void put_vec(util::KeyValueConfig& cfg, const std::string& key, const geo::Vec3& v) {
  cfg.set(key, std::vector<double>{v.x(), v.y(), v.z()});
}

geo::Vec3 get_vec(const util::KeyValueConfig& cfg, const std::string& key, const geo::Vec3& fallback) {
  const auto v = cfg.get_doubles(key, {fallback.x(), fallback.y(), fallback.z()});
  if (v.size() != 3) throw ConfigError("key '" + key + "' needs 3 values");
  return {v[0], v[1], v[2]};
}

}  // namespace

void SensorRig::store(util::KeyValueConfig& cfg) const {
  cfg.set("rig.width", static_cast<std::uint64_t>(width));
  cfg.set("rig.height", static_cast<std::uint64_t>(height));
  cfg.set("rig.channels", static_cast<std::uint64_t>(channels));
  cfg.set("rig.imu_rate", imu_rate);
  cfg.set("rig.frame_rate", frame_rate);
  cfg.set("rig.fpn_sigma", fpn_sigma);
  cfg.set("rig.fpn_seed", fpn_seed);
  cfg.set("rig.thermal_gain", thermal_gain);
  cfg.set("rig.nuc_enabled", nuc_enabled);
  cfg.set("rig.nuc_period", nuc_period);
  cfg.set("rig.nuc_freeze", nuc_freeze);
  cfg.set("rig.nuc_offset", nuc_offset);
  cfg.set("rig.time_misalignment", time_misalignment);
  cfg.set("rig.gyro_noise", gyro_noise);
  cfg.set("rig.accel_noise", accel_noise);
  put_vec(cfg, "rig.gyro_bias", gyro_bias);
  put_vec(cfg, "rig.accel_bias", accel_bias);
}

SensorRig SensorRig::load(const util::KeyValueConfig& cfg) {
  SensorRig r;
  r.width = cfg.get_uint("rig.width", r.width);
  r.height = cfg.get_uint("rig.height", r.height);
  r.channels = cfg.get_uint("rig.channels", r.channels);
  r.imu_rate = cfg.get_double("rig.imu_rate", r.imu_rate);
  r.frame_rate = cfg.get_double("rig.frame_rate", r.frame_rate);
  r.fpn_sigma = cfg.get_double("rig.fpn_sigma", r.fpn_sigma);
  r.fpn_seed = cfg.get_uint("rig.fpn_seed", r.fpn_seed);
  r.thermal_gain = cfg.get_double("rig.thermal_gain", r.thermal_gain);
  r.nuc_enabled = cfg.get_bool("rig.nuc_enabled", r.nuc_enabled);
  r.nuc_period = cfg.get_double("rig.nuc_period", r.nuc_period);
  r.nuc_freeze = cfg.get_double("rig.nuc_freeze", r.nuc_freeze);
  r.nuc_offset = cfg.get_double("rig.nuc_offset", r.nuc_offset);
  r.time_misalignment = cfg.get_double("rig.time_misalignment", r.time_misalignment);
  r.gyro_noise = cfg.get_double("rig.gyro_noise", r.gyro_noise);
  r.accel_noise = cfg.get_double("rig.accel_noise", r.accel_noise);
  r.gyro_bias = get_vec(cfg, "rig.gyro_bias", r.gyro_bias);
  r.accel_bias = get_vec(cfg, "rig.accel_bias", r.accel_bias);
  r.validate();
  return r;
}

}  // namespace tio::sim
