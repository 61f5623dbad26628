#include "tio/model/config.hpp"

#include <fmt/format.h>

#include "tio/util/error.hpp"

namespace tio::model {

ModelConfig ModelConfig::paper_scale() {
  ModelConfig c;
  c.width = 64;
  c.height = 64;
  c.conv_channels = {64, 128, 256, 512};
  c.feature_pool = 4;
  c.imu_hidden = 256;
  c.imu_pool = 1;
  c.regressor_hidden = 512;
  return c;
}

ModelConfig ModelConfig::tiny() {
  ModelConfig c;
  c.width = 8;
  c.height = 8;
  c.conv_channels = {4, 8};
  c.feature_pool = 2;
  c.imu_hidden = 8;
  c.imu_pool = 8;
  c.imu_steps = 20;
  c.regressor_hidden = 8;
  c.fc_widths = {8, 6, 3};
  return c;
}

namespace {

std::size_t conv_out(std::size_t in, const ModelConfig& c) {
  std::size_t x = in;
  for (std::size_t i = 0; i < c.conv_channels.size(); ++i) {
    if (x + 2 * c.padding < c.kernel) return 0;
    x = (x + 2 * c.padding - c.kernel) / c.stride + 1;
  }
  return x;
}

}  // namespace

std::size_t ModelConfig::conv_out_height() const { return conv_out(height, *this); }
std::size_t ModelConfig::conv_out_width() const { return conv_out(width, *this); }

std::size_t ModelConfig::feature_dim() const {
  return conv_channels.back() * conv_out_height() * conv_out_width() / feature_pool;
}

std::size_t ModelConfig::imu_dim() const { return imu_hidden / imu_pool * imu_steps; }

void ModelConfig::validate() const {
  if (width == 0 || height == 0 || channels == 0) throw ConfigError("model frame size must be positive");
  if (conv_channels.empty()) throw ConfigError("model.conv_channels must not be empty");
  if (kernel == 0 || stride == 0) throw ConfigError("model.kernel and model.stride must be positive");
  if (conv_out_height() == 0 || conv_out_width() == 0) throw ConfigError("conv stack collapses the frame to nothing");
  const std::size_t flat = conv_channels.back() * conv_out_height() * conv_out_width();
  if (feature_pool == 0 || flat % feature_pool != 0) {
    throw ConfigError(fmt::format("model.feature_pool {} does not divide the conv output length {}", feature_pool, flat));
  }
  if (imu_pool == 0 || imu_hidden % imu_pool != 0) {
    throw ConfigError(fmt::format("model.imu_pool {} does not divide model.imu_hidden {}", imu_pool, imu_hidden));
  }
  if (imu_steps == 0 || regressor_hidden == 0) throw ConfigError("model.imu_steps and model.regressor_hidden must be positive");
  if (fc_widths.empty() || fc_widths.back() != 3) throw ConfigError("model.fc_widths must end in 3");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("model.dropout must lie in [0, 1)");
  if (!norm.thermal_mean.empty() && norm.thermal_mean.size() != channels) {
    throw ConfigError("model.thermal_mean needs one value per channel");
  }
  if (!norm.visual_mean.empty() && norm.visual_mean.size() != channels) {
    throw ConfigError("model.visual_mean needs one value per channel");
  }
  if (norm.imu_mean.size() != 6 || norm.imu_std.size() != 6) throw ConfigError("model.imu_mean and model.imu_std need 6 values");
  for (double s : norm.imu_std) {
    if (!(s > 0.0)) throw ConfigError("model.imu_std entries must be positive");
  }
}

void ModelConfig::store(util::KeyValueConfig& cfg) const {
  cfg.set("model.width", static_cast<std::uint64_t>(width));
  cfg.set("model.height", static_cast<std::uint64_t>(height));
  cfg.set("model.channels", static_cast<std::uint64_t>(channels));
  cfg.set_sizes("model.conv_channels", conv_channels);
  cfg.set("model.kernel", static_cast<std::uint64_t>(kernel));
  cfg.set("model.stride", static_cast<std::uint64_t>(stride));
  cfg.set("model.padding", static_cast<std::uint64_t>(padding));
  cfg.set("model.feature_pool", static_cast<std::uint64_t>(feature_pool));
  cfg.set("model.imu_hidden", static_cast<std::uint64_t>(imu_hidden));
  cfg.set("model.imu_pool", static_cast<std::uint64_t>(imu_pool));
  cfg.set("model.imu_steps", static_cast<std::uint64_t>(imu_steps));
  cfg.set("model.regressor_hidden", static_cast<std::uint64_t>(regressor_hidden));
  cfg.set_sizes("model.fc_widths", fc_widths);
  cfg.set("model.dropout", dropout);
  cfg.set("model.selective_fusion", selective_fusion);
  cfg.set("model.init_seed", init_seed);
  cfg.set("model.thermal_mean", norm.thermal_mean);
  cfg.set("model.visual_mean", norm.visual_mean);
  cfg.set("model.imu_mean", norm.imu_mean);
  cfg.set("model.imu_std", norm.imu_std);
}

ModelConfig ModelConfig::load(const util::KeyValueConfig& cfg) {
  ModelConfig c;
  c.width = cfg.get_uint("model.width", c.width);
  c.height = cfg.get_uint("model.height", c.height);
  c.channels = cfg.get_uint("model.channels", c.channels);
  c.conv_channels = cfg.get_sizes("model.conv_channels", c.conv_channels);
  c.kernel = cfg.get_uint("model.kernel", c.kernel);
  c.stride = cfg.get_uint("model.stride", c.stride);
  c.padding = cfg.get_uint("model.padding", c.padding);
  c.feature_pool = cfg.get_uint("model.feature_pool", c.feature_pool);
  c.imu_hidden = cfg.get_uint("model.imu_hidden", c.imu_hidden);
  c.imu_pool = cfg.get_uint("model.imu_pool", c.imu_pool);
  c.imu_steps = cfg.get_uint("model.imu_steps", c.imu_steps);
  c.regressor_hidden = cfg.get_uint("model.regressor_hidden", c.regressor_hidden);
  c.fc_widths = cfg.get_sizes("model.fc_widths", c.fc_widths);
  c.dropout = cfg.get_double("model.dropout", c.dropout);
  c.selective_fusion = cfg.get_bool("model.selective_fusion", c.selective_fusion);
  c.init_seed = cfg.get_uint("model.init_seed", c.init_seed);
  c.norm.thermal_mean = cfg.get_doubles("model.thermal_mean", c.norm.thermal_mean);
  c.norm.visual_mean = cfg.get_doubles("model.visual_mean", c.norm.visual_mean);
  c.norm.imu_mean = cfg.get_doubles("model.imu_mean", c.norm.imu_mean);
  c.norm.imu_std = cfg.get_doubles("model.imu_std", c.norm.imu_std);
  c.validate();
  return c;
}

std::string ModelConfig::input_signature() const {
  return util::fnv1a_hex(fmt::format("frame {}x{}x{} imu {}x6", channels, height, width, imu_steps));
}

}  // namespace tio::model
