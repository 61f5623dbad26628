#pragma once

#include <string>
#include <vector>

#include "tio/exp/config.hpp"
#include "tio/model/network.hpp"

namespace tio::exp {

/// Per-seed model and training configurations derived from an experiment.
model::ModelConfig model_for(const ExperimentConfig& cfg, const Corpus& corpus, std::uint64_t seed);
train::TrainConfig train_for(const ExperimentConfig& cfg, std::uint64_t seed, std::size_t epochs);

model::Teacher train_teacher(const Corpus& corpus, const ExperimentConfig& cfg, std::uint64_t seed);

/// Stage-one student. With `drop_frozen` the NUC-frozen pairs are removed from its training set.
model::DeepTio distill(const model::Teacher& teacher, const Corpus& corpus, const ExperimentConfig& cfg,
                       std::uint64_t seed, train::LossKind loss = train::LossKind::Huber, bool drop_frozen = false);

/**
 * Stage two (plus the alternating fine-tune when enabled) for one feature set,
 * starting from a fresh student that shares the stage-one hallucination encoder.
 */
model::DeepTio train_odometry(const model::DeepTio& distilled, const Corpus& corpus, const ExperimentConfig& cfg,
                              std::uint64_t seed, model::Mode mode, bool selective_fusion);

struct ValidationReport {
  std::vector<double> real_t, fake_t;  ///< per-window translation RPE, m
  std::vector<double> real_r, fake_r;  ///< per-window rotation RPE, deg
  double ks_t = 0.0, ks_r = 0.0;
  double real_ate = 0.0, fake_ate = 0.0;
  std::string config_hash;

  double ks() const { return std::max(ks_t, ks_r); }
};

/**
 * Runs the frozen teacher twice on every test sample, once with its own visual
 * features and once with the student's hallucinated ones, and compares the
 * resulting per-window RPE distributions.
 */
ValidationReport validate_hallucination(const model::Teacher& teacher, const model::DeepTio& student,
                                        const std::vector<train::PreparedSequence>& test,
                                        const train::EvalOptions& opt);

struct Variant {
  model::Mode mode = model::Mode::Full;
  bool selective_fusion = true;
};

/// Table-style feature set name, e.g. "imu+thermal+fake_rgb".
std::string feature_set(model::Mode mode);
/// Parses "set" or "set:on|off" entries separated by commas; a bare set yields both fusion settings.
std::vector<Variant> parse_variants(const std::string& text);

struct AblationRow {
  Variant variant;
  std::uint64_t seed = 0;
  double rpe_t = 0.0, rpe_r = 0.0, ate = 0.0;
  bool failed = false;
  std::string error;
};

struct AblationReport {
  std::vector<AblationRow> rows;
  std::vector<std::uint64_t> seeds;
  std::string config_hash;

  /// Row of a variant for a seed, or nullptr.
  const AblationRow* find(const Variant& v, std::uint64_t seed) const;
};

/// Trains every variant under every seed; a failing row is recorded and the others continue.
AblationReport ablate_modalities(const Corpus& corpus, const ExperimentConfig& cfg,
                                 const std::vector<Variant>& variants);

struct FpsPoint {
  double fps = 0.0;
  double ate = 0.0, rpe_t = 0.0, rpe_r = 0.0;
};

struct FpsCurve {
  double training_fps = 0.0;
  std::vector<FpsPoint> points;
  std::string config_hash;
};

/// Re-subsamples the held-out sequences at each rate and evaluates the model. Throws ConfigError above the raw rate.
FpsCurve fps_sensitivity(const model::DeepTio& student, const ExperimentConfig& cfg, const std::vector<double>& rates,
                         model::Mode mode = model::Mode::Full);

struct HuberRow {
  std::uint64_t seed = 0;
  bool outliers = true;  ///< false for the control run without frozen pairs
  double huber_feature_error = 0.0, l2_feature_error = 0.0;  ///< clean held-out subset
  double huber_rpe_t = 0.0, l2_rpe_t = 0.0;
  double huber_rpe_r = 0.0, l2_rpe_r = 0.0;
};

struct HuberReport {
  double outlier_fraction = 0.0;  ///< frozen pairs in the training set
  std::vector<HuberRow> rows;
  std::string config_hash;
};

/**
 * Distils two students per seed that differ only in the stage-one loss. With
 * `control` a second row per seed repeats the comparison without frozen pairs.
 * Throws ConfigError unless NUC is enabled.
 */
HuberReport huber_vs_l2(const Corpus& corpus, const ExperimentConfig& cfg, bool control = true);

/// Outcome of a directional claim.
struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

Check check_fusion_benefit(const AblationReport& r, model::Mode mode);
/// thermal-only worse than imu+thermal, and imu+thermal+fake_rgb no worse than imu+thermal (fusion on).
std::vector<Check> check_modality_ordering(const AblationReport& r);
Check check_validation(const ValidationReport& r, double max_ks = 0.15);
Check check_fps_minimum(const FpsCurve& c);
Check check_huber(const HuberReport& r);

}  // namespace tio::exp
