#include "tio/model/inputs.hpp"

#include <cmath>

#include "tio/util/error.hpp"

namespace tio::model {

num::Tensor prepare_pair(const sim::FramePair& pair, const std::vector<double>& mean) {
  const auto& a = *pair.first;
  const auto& b = *pair.second;
  if (a.shape() != b.shape() || a.rank() != 3) throw ContractError("frame pair members must share a [c,h,w] shape");
  const std::size_t c = a.dim(0), plane = a.dim(1) * a.dim(2);
  if (!mean.empty() && mean.size() != c) throw ContractError("frame mean needs one value per channel");
  num::Tensor out({2 * c, a.dim(1), a.dim(2)});
  auto dst = out.data();
  for (std::size_t k = 0; k < c; ++k) {
    const double m = mean.empty() ? 0.0 : mean[k];
    for (std::size_t i = 0; i < plane; ++i) {
      dst[k * plane + i] = a[k * plane + i] - m;
      dst[(c + k) * plane + i] = b[k * plane + i] - m;
    }
  }
  return out;
}

num::Tensor prepare_imu(const num::Tensor& window, const Normalization& norm) {
  if (window.rank() != 2 || window.dim(1) != 6) throw ContractError("IMU window must be [steps x 6]");
  num::Tensor out = window;
  for (std::size_t r = 0; r < window.dim(0); ++r) {
    for (std::size_t k = 0; k < 6; ++k) out.at(r, k) = (window.at(r, k) - norm.imu_mean[k]) / norm.imu_std[k];
  }
  return out;
}

Normalization compute_normalization(const sim::Dataset& dataset) {
  Normalization n;
  const std::size_t c = dataset.config.rig.channels;
  n.thermal_mean.assign(c, 0.0);
  n.visual_mean.assign(c, 0.0);
  std::vector<double> sum(6, 0.0), sq(6, 0.0);
  double frames = 0.0, rows = 0.0;
  for (const auto& seq : dataset.sequences) {
    for (std::size_t f = 0; f < seq.thermal.size(); ++f) {
      const std::size_t plane = seq.thermal[f]->size() / c;
      for (std::size_t k = 0; k < c; ++k) {
        double st = 0.0, sv = 0.0;
        for (std::size_t i = 0; i < plane; ++i) {
          st += (*seq.thermal[f])[k * plane + i];
          sv += (*seq.visual[f])[k * plane + i];
        }
        n.thermal_mean[k] += st / static_cast<double>(plane);
        n.visual_mean[k] += sv / static_cast<double>(plane);
      }
      frames += 1.0;
    }
    for (const auto& s : seq.samples) {
      for (std::size_t r = 0; r < s.imu_window.dim(0); ++r) {
        for (std::size_t k = 0; k < 6; ++k) {
          const double v = s.imu_window.at(r, k);
          sum[k] += v;
          sq[k] += v * v;
        }
        rows += 1.0;
      }
    }
  }
  if (frames == 0.0 || rows == 0.0) throw ContractError("cannot normalise an empty dataset");
  for (std::size_t k = 0; k < c; ++k) {
    n.thermal_mean[k] /= frames;
    n.visual_mean[k] /= frames;
  }
  for (std::size_t k = 0; k < 6; ++k) {
    n.imu_mean[k] = sum[k] / rows;
    const double var = sq[k] / rows - n.imu_mean[k] * n.imu_mean[k];
    n.imu_std[k] = std::sqrt(std::max(var, 1e-12));
  }
  return n;
}

void check_compatible(const ModelConfig& cfg, const sim::DatasetConfig& data) {
  const auto& rig = data.rig;
  if (rig.width != cfg.width || rig.height != cfg.height || rig.channels != cfg.channels) {
    throw CompatibilityError("dataset frames are " + std::to_string(rig.channels) + "x" + std::to_string(rig.height) +
                             "x" + std::to_string(rig.width) + " but the model expects " +
                             std::to_string(cfg.channels) + "x" + std::to_string(cfg.height) + "x" +
                             std::to_string(cfg.width) + " (input signature " + cfg.input_signature() + ")");
  }
  if (cfg.imu_steps != sim::kImuWindow) throw CompatibilityError("model IMU window length differs from the dataset's");
}

ModelConfig config_for(const sim::DatasetConfig& data, ModelConfig base) {
  base.width = data.rig.width;
  base.height = data.rig.height;
  base.channels = data.rig.channels;
  base.imu_steps = sim::kImuWindow;
  base.validate();
  return base;
}

}  // namespace tio::model
