#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "tio/model/network.hpp"
#include "tio/util/config.hpp"

namespace tio::model {

/**
 * \brief Versioned binary container of named tensors plus configuration text.
 *
 * Layout (little-endian): magic "TIOCKPT1", u32 version, then length-prefixed
 * strings for kind, config and rng state, u64 tensor count, and per tensor a
 * name, u32 rank, u64 extents and raw f64 values. Round trips are bit-exact.
 */
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::string kind;  ///< "deeptio" or "teacher"
  util::KeyValueConfig config;
  std::string rng_state;
  std::vector<std::pair<std::string, num::Tensor>> tensors;

  const num::Tensor* find(const std::string& name) const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
/// Throws FormatError on a corrupt or foreign file, CompatibilityError on a newer version.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Packs every parameter (plus the model config) into a checkpoint.
Checkpoint to_checkpoint(const DeepTio& model);
Checkpoint to_checkpoint(const Teacher& model);

/// Throws CompatibilityError when the kind, names or shapes do not match.
DeepTio student_from_checkpoint(const Checkpoint& ck);
Teacher teacher_from_checkpoint(const Checkpoint& ck);

/// Overwrites the store's values from equally named checkpoint tensors; all must be present.
void load_params(const Checkpoint& ck, ParamStore& store);

}  // namespace tio::model
