#include "tio/exp/config.hpp"

#include "tio/model/inputs.hpp"
#include "tio/util/error.hpp"

namespace tio::exp {

void ExperimentConfig::validate() const {
  data.validate();
  model.validate();
  train.validate();
  if (test_sequences == 0) throw ConfigError("experiment.test_sequences must be positive");
  if (teacher_epochs == 0 || hallucination_epochs == 0 || odometry_epochs == 0) {
    throw ConfigError("experiment epoch budgets must be positive");
  }
  if (seeds.empty()) throw ConfigError("experiment.seeds must not be empty");
  if (max_dt <= 0.0) throw ConfigError("experiment.max_dt must be positive");
  if (rpe_delta == 0) throw ConfigError("experiment.rpe_delta must be positive");
}

void ExperimentConfig::store(util::KeyValueConfig& kv) const {
  data.store(kv);
  model.store(kv);
  train.store(kv);
  kv.set("experiment.test_sequences", static_cast<std::uint64_t>(test_sequences));
  kv.set("experiment.test_seed", test_seed);
  kv.set("experiment.teacher_epochs", static_cast<std::uint64_t>(teacher_epochs));
  kv.set("experiment.hallucination_epochs", static_cast<std::uint64_t>(hallucination_epochs));
  kv.set("experiment.odometry_epochs", static_cast<std::uint64_t>(odometry_epochs));
  kv.set("experiment.finetune", finetune);
  std::vector<std::size_t> s(seeds.begin(), seeds.end());
  kv.set_sizes("experiment.seeds", s);
  kv.set("experiment.max_dt", max_dt);
  kv.set("experiment.rpe_delta", static_cast<std::uint64_t>(rpe_delta));
}

ExperimentConfig ExperimentConfig::load(const util::KeyValueConfig& kv) {
  ExperimentConfig c;
  c.data = sim::DatasetConfig::load(kv);
  c.model = model::config_for(c.data, model::ModelConfig::load(kv));
  c.train = train::TrainConfig::load(kv);
  c.test_sequences = kv.get_uint("experiment.test_sequences", c.test_sequences);
  c.test_seed = kv.get_uint("experiment.test_seed", c.test_seed);
  c.teacher_epochs = kv.get_uint("experiment.teacher_epochs", c.teacher_epochs);
  c.hallucination_epochs = kv.get_uint("experiment.hallucination_epochs", c.hallucination_epochs);
  c.odometry_epochs = kv.get_uint("experiment.odometry_epochs", c.odometry_epochs);
  c.finetune = kv.get_bool("experiment.finetune", c.finetune);
  if (kv.contains("experiment.seeds")) {
    const auto s = kv.get_sizes("experiment.seeds", {});
    c.seeds.assign(s.begin(), s.end());
  }
  c.max_dt = kv.get_double("experiment.max_dt", c.max_dt);
  c.rpe_delta = kv.get_uint("experiment.rpe_delta", c.rpe_delta);
  c.validate();
  return c;
}

std::string ExperimentConfig::hash() const {
  util::KeyValueConfig kv;
  store(kv);
  return util::fnv1a_hex(kv.str());
}

sim::DatasetConfig ExperimentConfig::test_data() const {
  sim::DatasetConfig t = data;
  t.n_sequences = test_sequences;
  t.sequence_seed = test_seed;
  return t;
}

train::EvalOptions ExperimentConfig::eval(model::Mode mode) const {
  train::EvalOptions e;
  e.mode = mode;
  e.max_dt = max_dt;
  e.rpe_delta = rpe_delta;
  e.reset_every = train.subsequence;
  return e;
}

Corpus make_corpus(const ExperimentConfig& cfg) {
  Corpus c;
  c.train_set = sim::make_dataset(cfg.data);
  c.test_set = sim::make_dataset(cfg.test_data());
  c.norm = model::compute_normalization(c.train_set);
  c.train = train::prepare(c.train_set, c.norm);
  c.test = train::prepare(c.test_set, c.norm);
  return c;
}

}  // namespace tio::exp
