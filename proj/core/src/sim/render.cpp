#include "tio/sim/render.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tio::sim {

namespace {

constexpr double kNear = 0.3;
constexpr double kLandmarkRadius = 0.35;  // m
constexpr double kVisualBackground = 0.3;
constexpr double kAmbient = 0.5;

void colour(double a, double out[3]) {
  out[0] = a;
  out[1] = 1.0 - a;
  out[2] = std::abs(std::sin(3.0 * std::numbers::pi * a));
}

}  // namespace

Frame render(const World& world, const geo::Pose6DoF& pose, Channel channel, const SensorRig& rig) {
  const std::size_t w = rig.width, h = rig.height, c = rig.channels;
  const bool thermal = channel == Channel::Thermal;
  const std::size_t planes = thermal ? 1 : 3;
  std::vector<double> acc(planes * h * w, 0.0);

  const geo::Mat3 Rt = pose.rotation().transpose();
  const double f = rig.focal();
  const double cx = 0.5 * (static_cast<double>(w) - 1.0);
  const double cy = 0.5 * (static_cast<double>(h) - 1.0);

  for (const auto& lm : world.landmarks) {
    const geo::Vec3 p = Rt * (lm.position - pose.t());
    if (p.x() <= kNear) continue;
    const double depth = p.norm();
    const double u = cx - f * p.y() / p.x();
    const double v = cy - f * p.z() / p.x();
    const double sigma = std::clamp(f * kLandmarkRadius / p.x(), 0.5, 3.0);
    const double reach = 3.0 * sigma;
    if (u < -reach || u > static_cast<double>(w) - 1.0 + reach) continue;
    if (v < -reach || v > static_cast<double>(h) - 1.0 + reach) continue;

    const double atten = 1.0 / (1.0 + (depth / 6.0) * (depth / 6.0));
    double value[3];
    if (thermal) {
      value[0] = rig.thermal_gain * (lm.temperature - kAmbient);
    } else {
      colour(lm.appearance, value);
    }
    const auto c0 = static_cast<long>(std::max(0.0, std::floor(u - reach)));
    const auto c1 = static_cast<long>(std::min(static_cast<double>(w) - 1.0, std::ceil(u + reach)));
    const auto r0 = static_cast<long>(std::max(0.0, std::floor(v - reach)));
    const auto r1 = static_cast<long>(std::min(static_cast<double>(h) - 1.0, std::ceil(v + reach)));
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (long r = r0; r <= r1; ++r) {
      for (long col = c0; col <= c1; ++col) {
        const double du = static_cast<double>(col) - u, dv = static_cast<double>(r) - v;
        const double g = atten * std::exp(-(du * du + dv * dv) * inv);
        for (std::size_t k = 0; k < planes; ++k) acc[(k * h + static_cast<std::size_t>(r)) * w + static_cast<std::size_t>(col)] += g * value[k];
      }
    }
  }

  Frame frame({c, h, w});
  auto out = frame.data();
  if (thermal) {
    const num::Tensor fpn = rig.fixed_pattern();
    for (std::size_t i = 0; i < h * w; ++i) {
      const double px = kAmbient + acc[i] + fpn[i];
      for (std::size_t k = 0; k < c; ++k) out[k * h * w + i] = px;
    }
  } else {
    for (std::size_t k = 0; k < c; ++k) {
      const std::size_t src = k % 3;
      for (std::size_t i = 0; i < h * w; ++i) out[k * h * w + i] = kVisualBackground + acc[src * h * w + i];
    }
  }
  return frame;
}

ThermalStream::ThermalStream(const World& world, const SensorRig& rig) : world_(world), rig_(rig) {}

Frame ThermalStream::render(const geo::Pose6DoF& pose, double time) {
  if (last_ && rig_.in_nuc_freeze(time)) return *last_;
  last_ = sim::render(world_, pose, Channel::Thermal, rig_);
  return *last_;
}

}  // namespace tio::sim
