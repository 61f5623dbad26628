#include "tio/train/config.hpp"

#include "tio/util/error.hpp"

namespace tio::train {

LossKind parse_loss(const std::string& name) {
  if (name == "huber") return LossKind::Huber;
  if (name == "l2") return LossKind::L2;
  throw ConfigError("train.loss must be 'huber' or 'l2', got '" + name + "'");
}

std::string loss_name(LossKind kind) { return kind == LossKind::Huber ? "huber" : "l2"; }

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* key, const char* what) {
    if (!ok) throw ConfigError(std::string(key) + " " + what);
  };
  require(epochs > 0, "train.epochs", "must be positive");
  require(batch_size > 0, "train.batch_size", "must be positive");
  require(subsequence > 0, "train.subsequence", "must be positive");
  require(delta > 0.0, "train.delta", "must be positive");
  require(alpha > 0.0, "train.alpha", "must be positive");
  require(adam_lr > 0.0, "train.adam_lr", "must be positive");
  require(rmsprop_lr > 0.0, "train.rmsprop_lr", "must be positive");
  require(finetune_lr > 0.0, "train.finetune_lr", "must be positive");
  require(adam_beta1 >= 0.0 && adam_beta1 < 1.0, "train.adam_beta1", "must lie in [0, 1)");
  require(adam_beta2 >= 0.0 && adam_beta2 < 1.0, "train.adam_beta2", "must lie in [0, 1)");
  require(rmsprop_rho >= 0.0 && rmsprop_rho < 1.0, "train.rmsprop_rho", "must lie in [0, 1)");
  require(eps > 0.0, "train.eps", "must be positive");
  require(lr_decay > 0.0 && lr_decay < 1.0, "train.lr_decay", "must lie in (0, 1)");
  require(decay_every > 0, "train.decay_every", "must be positive");
  require(checkpoint_every > 0, "train.checkpoint_every", "must be positive");
}

void TrainConfig::store(util::KeyValueConfig& kv) const {
  kv.set("train.epochs", static_cast<std::uint64_t>(epochs));
  kv.set("train.batch_size", static_cast<std::uint64_t>(batch_size));
  kv.set("train.subsequence", static_cast<std::uint64_t>(subsequence));
  kv.set("train.delta", delta);
  kv.set("train.alpha", alpha);
  kv.set("train.loss", loss_name(loss));
  kv.set("train.adam_lr", adam_lr);
  kv.set("train.adam_beta1", adam_beta1);
  kv.set("train.adam_beta2", adam_beta2);
  kv.set("train.rmsprop_lr", rmsprop_lr);
  kv.set("train.rmsprop_rho", rmsprop_rho);
  kv.set("train.eps", eps);
  kv.set("train.lr_decay", lr_decay);
  kv.set("train.decay_every", static_cast<std::uint64_t>(decay_every));
  kv.set("train.finetune_epochs", static_cast<std::uint64_t>(finetune_epochs));
  kv.set("train.finetune_rounds", static_cast<std::uint64_t>(finetune_rounds));
  kv.set("train.finetune_lr", finetune_lr);
  kv.set("train.mode", model::mode_name(mode));
  kv.set("train.seed", seed);
  kv.set("train.checkpoint_every", static_cast<std::uint64_t>(checkpoint_every));
  kv.set("train.val_every", static_cast<std::uint64_t>(val_every));
}

TrainConfig TrainConfig::load(const util::KeyValueConfig& kv) {
  TrainConfig c;
  c.epochs = kv.get_uint("train.epochs", c.epochs);
  c.batch_size = kv.get_uint("train.batch_size", c.batch_size);
  c.subsequence = kv.get_uint("train.subsequence", c.subsequence);
  c.delta = kv.get_double("train.delta", c.delta);
  c.alpha = kv.get_double("train.alpha", c.alpha);
  c.loss = parse_loss(kv.get_string("train.loss", loss_name(c.loss)));
  c.adam_lr = kv.get_double("train.adam_lr", c.adam_lr);
  c.adam_beta1 = kv.get_double("train.adam_beta1", c.adam_beta1);
  c.adam_beta2 = kv.get_double("train.adam_beta2", c.adam_beta2);
  c.rmsprop_lr = kv.get_double("train.rmsprop_lr", c.rmsprop_lr);
  c.rmsprop_rho = kv.get_double("train.rmsprop_rho", c.rmsprop_rho);
  c.eps = kv.get_double("train.eps", c.eps);
  c.lr_decay = kv.get_double("train.lr_decay", c.lr_decay);
  c.decay_every = kv.get_uint("train.decay_every", c.decay_every);
  c.finetune_epochs = kv.get_uint("train.finetune_epochs", c.finetune_epochs);
  c.finetune_rounds = kv.get_uint("train.finetune_rounds", c.finetune_rounds);
  c.finetune_lr = kv.get_double("train.finetune_lr", c.finetune_lr);
  c.mode = model::parse_mode(kv.get_string("train.mode", model::mode_name(c.mode)));
  c.seed = kv.get_uint("train.seed", c.seed);
  c.checkpoint_every = kv.get_uint("train.checkpoint_every", c.checkpoint_every);
  c.val_every = kv.get_uint("train.val_every", c.val_every);
  c.validate();
  return c;
}

double step_lr(double base, double decay, std::size_t every, std::size_t epoch) {
  const std::size_t drops = epoch == 0 ? 0 : (epoch - 1) / every;
  double lr = base;
  for (std::size_t i = 0; i < drops; ++i) lr *= decay;
  return lr;
}

}  // namespace tio::train
