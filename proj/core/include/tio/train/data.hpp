#pragma once

#include <vector>

#include "tio/geo/pose.hpp"
#include "tio/model/config.hpp"
#include "tio/sim/dataset.hpp"

namespace tio::train {

/// One normalised training pair.
struct PreparedSample {
  num::Tensor thermal;  ///< [2c, h, w]
  num::Tensor visual;   ///< [2c, h, w]
  num::Tensor imu;      ///< [steps, 6]
  geo::Pose6DoF rel;
  bool frozen = false;  ///< thermal pair captured inside a NUC freeze
};

/// Normalised samples of one sequence; `source` must outlive this object.
struct PreparedSequence {
  const sim::Sequence* source = nullptr;
  std::vector<PreparedSample> samples;
};

std::vector<PreparedSequence> prepare(const sim::Dataset& dataset, const model::Normalization& norm);

/// A run of consecutive samples inside one sequence.
struct Chunk {
  std::size_t sequence = 0, begin = 0, length = 0;
};

/// Splits every sequence into consecutive, non-overlapping chunks of at most `length` samples.
std::vector<Chunk> make_chunks(const std::vector<PreparedSequence>& data, std::size_t length);

}  // namespace tio::train
