#include "tio/train/data.hpp"

#include <algorithm>

#include "tio/model/inputs.hpp"
#include "tio/util/error.hpp"

namespace tio::train {

std::vector<PreparedSequence> prepare(const sim::Dataset& dataset, const model::Normalization& norm) {
  if (norm.thermal_mean.empty() || norm.visual_mean.empty()) throw ContractError("normalisation is not set");
  std::vector<PreparedSequence> out;
  out.reserve(dataset.sequences.size());
  for (const auto& seq : dataset.sequences) {
    PreparedSequence ps;
    ps.source = &seq;
    ps.samples.reserve(seq.samples.size());
    for (const auto& s : seq.samples) {
      ps.samples.push_back({model::prepare_pair(s.thermal_pair, norm.thermal_mean),
                            model::prepare_pair(s.visual_pair, norm.visual_mean), model::prepare_imu(s.imu_window, norm),
                            s.rel_pose_gt, s.thermal_frozen});
    }
    out.push_back(std::move(ps));
  }
  return out;
}

std::vector<Chunk> make_chunks(const std::vector<PreparedSequence>& data, std::size_t length) {
  if (length == 0) throw ContractError("chunk length must be positive");
  std::vector<Chunk> chunks;
  for (std::size_t s = 0; s < data.size(); ++s) {
    const std::size_t n = data[s].samples.size();
    for (std::size_t b = 0; b < n; b += length) chunks.push_back({s, b, std::min(length, n - b)});
  }
  return chunks;
}

}  // namespace tio::train
