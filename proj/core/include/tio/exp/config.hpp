#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tio/model/config.hpp"
#include "tio/sim/dataset.hpp"
#include "tio/train/config.hpp"
#include "tio/train/data.hpp"
#include "tio/train/evaluate.hpp"

namespace tio::exp {

/**
 * \brief Shared setup of every experiment: training corpus, held-out test set,
 * model and training hyperparameters, per-stage epoch budgets and seeds.
 *
 * A seed s sets both the model initialisation and the training order; the
 * datasets stay fixed across seeds. Keys live under "experiment." next to the
 * dataset, model and train sections.
 */
struct ExperimentConfig {
  sim::DatasetConfig data;
  std::size_t test_sequences = 3;
  std::uint64_t test_seed = 900;  ///< sequence seed of the held-out set
  model::ModelConfig model;
  train::TrainConfig train;
  std::size_t teacher_epochs = 30;
  std::size_t hallucination_epochs = 30;
  std::size_t odometry_epochs = 30;
  bool finetune = false;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  double max_dt = 0.1;
  std::size_t rpe_delta = 1;

  void validate() const;
  void store(util::KeyValueConfig& kv) const;
  static ExperimentConfig load(const util::KeyValueConfig& kv);
  std::string hash() const;

  sim::DatasetConfig test_data() const;
  train::EvalOptions eval(model::Mode mode = model::Mode::Full) const;
};

/// Training and test sets prepared with the training set's normalisation. Not copyable.
struct Corpus {
  sim::Dataset train_set, test_set;
  model::Normalization norm;
  std::vector<train::PreparedSequence> train, test;

  Corpus() = default;
  Corpus(const Corpus&) = delete;
  Corpus& operator=(const Corpus&) = delete;
  Corpus(Corpus&&) = default;
};

Corpus make_corpus(const ExperimentConfig& cfg);

}  // namespace tio::exp
