#pragma once

#include <optional>
#include <string>

#include "tio/model/blocks.hpp"
#include "tio/model/config.hpp"

namespace tio::model {

/// Feature sets of the ablation study. NoHallucination is an alias of ImuThermal.
enum class Mode { Full, NoHallucination, ThermalOnly, ImuOnly, ImuThermal, ImuFakeRgb };

Mode parse_mode(const std::string& name);
std::string mode_name(Mode mode);

struct ModeChannels {
  bool thermal, hallucination, imu;
};
ModeChannels mode_channels(Mode mode);

struct HiddenState {
  LstmState imu;
  LstmState regressor;
};

struct StepOptions {
  Mode mode = Mode::Full;
  bool training = false;
  std::uint64_t dropout_seed = 0;
};

struct StepResult {
  num::Var t, r;            ///< relative translation (m) and Euler angles (rad)
  num::Var m_t, m_h, m_i;   ///< fusion masks (all ones when fusion is disabled)
  num::Var fused;
  num::Var a_t, a_h, a_i;  ///< the teacher reports its visual feature in a_h
};

/// Inputs are already normalised: frame pairs [2c, h, w], IMU windows [steps, 6].
struct StudentInput {
  std::optional<num::Tensor> thermal;
  std::optional<num::Tensor> imu;
  /// Precomputed (frozen) hallucination feature; replaces running the encoder.
  std::optional<num::Tensor> a_h;
};

/**
 * \brief Student network: thermal, hallucination and IMU encoders, selective
 * fusion and the recurrent pose regressor.
 *
 * Excluded channels of an ablation mode are replaced by zero vectors so the
 * regressor input width never changes. Parameter name prefixes: thermal.,
 * halluc., imu., fusion., regressor.
 */
class DeepTio {
 public:
  explicit DeepTio(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }
  ModelConfig& config() { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  HiddenState zero_state(num::Tape& tape) const;

  num::Var encode_thermal(Binder& bind, num::Var pair) const;
  num::Var encode_hallucination(Binder& bind, num::Var pair) const;
  num::Var encode_imu(Binder& bind, num::Var window, LstmState& state) const;
  /// Selective fusion, or plain concatenation with unit masks when config().selective_fusion is off.
  FusionResult fuse(Binder& bind, num::Var a_t, num::Var a_h, num::Var a_i) const;
  PoseOutput regress(Binder& bind, num::Var fused, LstmState& state, bool training, std::uint64_t seed) const;

  /// One frame pair. Throws ConfigError when the mode needs an input that is absent.
  StepResult step(Binder& bind, const StudentInput& in, HiddenState& state, const StepOptions& opt) const;

 private:
  ModelConfig cfg_;
  ParamStore params_;
  ConvEncoder thermal_, halluc_;
  ImuEncoder imu_;
  SelectiveFusion fusion_;
  PoseRegressor regressor_;
};

struct TeacherInput {
  std::optional<num::Tensor> visual;
  std::optional<num::Tensor> imu;
  /// Replaces the visual feature (e.g. with a hallucinated one).
  std::optional<num::Tensor> a_v;
};

/// VINet-style teacher: visual encoder, IMU encoder and regressor, no fusion block.
/// Parameter name prefixes: visual., imu., regressor.
class Teacher {
 public:
  explicit Teacher(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }
  ModelConfig& config() { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  HiddenState zero_state(num::Tape& tape) const;
  num::Var encode_visual(Binder& bind, num::Var pair) const;
  StepResult step(Binder& bind, const TeacherInput& in, HiddenState& state, const StepOptions& opt) const;

 private:
  ModelConfig cfg_;
  ParamStore params_;
  ConvEncoder visual_;
  ImuEncoder imu_;
  PoseRegressor regressor_;
};

/// Copies the teacher's visual encoder weights into the student's hallucination encoder.
void copy_visual_to_hallucination(const Teacher& teacher, DeepTio& student);

/// Copies values of equally named and shaped parameters; returns how many were copied.
std::size_t copy_matching(const ParamStore& from, ParamStore& to, const std::string& prefix = "");

}  // namespace tio::model
