#pragma once

#include <optional>

#include "tio/geo/pose.hpp"
#include "tio/num/tensor.hpp"
#include "tio/sim/world.hpp"

namespace tio::sim {

enum class Channel { Thermal, Visual };

/// Frames are [c, h, w] tensors.
using Frame = num::Tensor;

/**
 * Projects every landmark in front of the camera as a Gaussian splat.
 * The camera looks along body +x with image right = body -y and image
 * up = body +z. Thermal frames add the rig's fixed-pattern offsets and
 * replicate one intensity channel; this function ignores NUC freezes.
 */
Frame render(const World& world, const geo::Pose6DoF& pose, Channel channel, const SensorRig& rig);

/// Thermal renderer that honours NUC freeze windows: inside a window the
/// previously rendered frame is returned verbatim.
class ThermalStream {
 public:
  ThermalStream(const World& world, const SensorRig& rig);

  Frame render(const geo::Pose6DoF& pose, double time);

 private:
  const World& world_;
  const SensorRig& rig_;
  std::optional<Frame> last_;
};

}  // namespace tio::sim
