#pragma once

#include <cstdint>
#include <string>

#include "tio/model/network.hpp"
#include "tio/util/config.hpp"

namespace tio::train {

enum class LossKind { Huber, L2 };

LossKind parse_loss(const std::string& name);
std::string loss_name(LossKind kind);

/// Hyperparameters shared by every training stage. Keys live under "train.".
struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 8;    ///< subsequences per batch
  std::size_t subsequence = 8;   ///< consecutive pairs per subsequence; LSTM state resets between them
  double delta = 1.0;
  double alpha = 0.001;
  LossKind loss = LossKind::Huber;

  double adam_lr = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double rmsprop_lr = 1e-3;
  double rmsprop_rho = 0.9;
  double eps = 1e-8;
  double lr_decay = 0.75;
  std::size_t decay_every = 25;

  std::size_t finetune_epochs = 10;  ///< per phase
  std::size_t finetune_rounds = 2;
  double finetune_lr = 1e-4;

  model::Mode mode = model::Mode::Full;
  std::uint64_t seed = 1;
  std::size_t checkpoint_every = 10;
  std::size_t val_every = 1;  ///< 0 validates only after the last epoch

  /// Throws ConfigError naming the offending key.
  void validate() const;
  void store(util::KeyValueConfig& kv) const;
  static TrainConfig load(const util::KeyValueConfig& kv);
};

/// Piecewise-constant decay: base * decay^floor((epoch - 1) / every), epochs counted from 1.
double step_lr(double base, double decay, std::size_t every, std::size_t epoch);

}  // namespace tio::train
