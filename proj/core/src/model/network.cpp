#include "tio/model/network.hpp"

#include "tio/sim/world.hpp"
#include "tio/util/error.hpp"

namespace tio::model {

using num::Var;

Mode parse_mode(const std::string& name) {
  if (name == "full") return Mode::Full;
  if (name == "no_hallucination") return Mode::NoHallucination;
  if (name == "thermal_only" || name == "thermal") return Mode::ThermalOnly;
  if (name == "imu_only" || name == "imu") return Mode::ImuOnly;
  if (name == "imu_thermal" || name == "imu+thermal") return Mode::ImuThermal;
  if (name == "imu_fake_rgb" || name == "imu+fake_rgb") return Mode::ImuFakeRgb;
  if (name == "imu+thermal+fake_rgb") return Mode::Full;
  throw ConfigError("unknown mode '" + name + "'");
}

std::string mode_name(Mode mode) {
  switch (mode) {
    case Mode::Full: return "full";
    case Mode::NoHallucination: return "no_hallucination";
    case Mode::ThermalOnly: return "thermal_only";
    case Mode::ImuOnly: return "imu_only";
    case Mode::ImuThermal: return "imu_thermal";
    case Mode::ImuFakeRgb: return "imu_fake_rgb";
  }
  return "unknown";
}

ModeChannels mode_channels(Mode mode) {
  switch (mode) {
    case Mode::Full: return {true, true, true};
    case Mode::NoHallucination:
    case Mode::ImuThermal: return {true, false, true};
    case Mode::ThermalOnly: return {true, false, false};
    case Mode::ImuOnly: return {false, false, true};
    case Mode::ImuFakeRgb: return {false, true, true};
  }
  return {true, true, true};
}

namespace {

void check_pair(const ModelConfig& cfg, const Var& pair) {
  const num::Shape want{2 * cfg.channels, cfg.height, cfg.width};
  if (pair.shape() != want) {
    throw ConfigError("frame pair has shape " + num::shape_string(pair.shape()) + ", model expects " +
                      num::shape_string(want));
  }
}

std::mt19937_64 block_rng(const ModelConfig& cfg, std::uint64_t stream) {
  return std::mt19937_64(sim::derive_seed(cfg.init_seed, stream));
}

}  // namespace

DeepTio::DeepTio(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  auto r1 = block_rng(cfg_, 1), r2 = block_rng(cfg_, 2), r3 = block_rng(cfg_, 3), r4 = block_rng(cfg_, 4),
       r5 = block_rng(cfg_, 5);
  thermal_ = ConvEncoder::create(params_, "thermal", cfg_, 2 * cfg_.channels, r1);
  halluc_ = ConvEncoder::create(params_, "halluc", cfg_, 2 * cfg_.channels, r2);
  imu_ = ImuEncoder::create(params_, "imu", cfg_, r3);
  fusion_ = SelectiveFusion::create(params_, "fusion", cfg_, r4);
  regressor_ = PoseRegressor::create(params_, "regressor", cfg_, cfg_.fused_dim(), r5);
}

HiddenState DeepTio::zero_state(num::Tape& tape) const {
  return {imu_.cell.zero_state(tape), regressor_.cell.zero_state(tape)};
}

Var DeepTio::encode_thermal(Binder& bind, Var pair) const {
  check_pair(cfg_, pair);
  return thermal_.forward(bind, pair);
}

Var DeepTio::encode_hallucination(Binder& bind, Var pair) const {
  check_pair(cfg_, pair);
  return halluc_.forward(bind, pair);
}

Var DeepTio::encode_imu(Binder& bind, Var window, LstmState& state) const { return imu_.forward(bind, window, state); }

FusionResult DeepTio::fuse(Binder& bind, Var a_t, Var a_h, Var a_i) const {
  if (cfg_.selective_fusion) return fusion_.forward(bind, a_t, a_h, a_i);
  if (a_t.size() != cfg_.feature_dim() || a_h.size() != cfg_.feature_dim() || a_i.size() != cfg_.imu_dim()) {
    throw ConfigError("feature lengths do not match the model configuration");
  }
  auto& tape = bind.tape();
  FusionResult r;
  r.m_t = tape.constant(num::Tensor::ones({cfg_.feature_dim()}));
  r.m_h = tape.constant(num::Tensor::ones({cfg_.feature_dim()}));
  r.m_i = tape.constant(num::Tensor::ones({cfg_.imu_dim()}));
  r.fused = num::concat({a_t, a_h, a_i});
  return r;
}

PoseOutput DeepTio::regress(Binder& bind, Var fused, LstmState& state, bool training, std::uint64_t seed) const {
  return regressor_.forward(bind, fused, state, training, seed);
}

StepResult DeepTio::step(Binder& bind, const StudentInput& in, HiddenState& state, const StepOptions& opt) const {
  auto& tape = bind.tape();
  const ModeChannels ch = mode_channels(opt.mode);
  const std::string mode = mode_name(opt.mode);
  StepResult out;
  if (ch.thermal) {
    if (!in.thermal) throw ConfigError("mode " + mode + " needs thermal frames");
    out.a_t = encode_thermal(bind, tape.constant(*in.thermal));
  } else {
    out.a_t = tape.constant(num::Tensor({cfg_.feature_dim()}));
  }
  if (ch.hallucination) {
    if (in.a_h) {
      if (in.a_h->size() != cfg_.feature_dim()) throw ConfigError("precomputed hallucination feature has wrong length");
      out.a_h = tape.constant(*in.a_h);
    } else {
      if (!in.thermal) throw ConfigError("mode " + mode + " needs thermal frames for hallucination");
      out.a_h = encode_hallucination(bind, tape.constant(*in.thermal));
    }
  } else {
    out.a_h = tape.constant(num::Tensor({cfg_.feature_dim()}));
  }
  if (ch.imu) {
    if (!in.imu) throw ConfigError("mode " + mode + " needs an IMU window");
    out.a_i = encode_imu(bind, tape.constant(*in.imu), state.imu);
  } else {
    out.a_i = tape.constant(num::Tensor({cfg_.imu_dim()}));
  }
  const FusionResult f = fuse(bind, out.a_t, out.a_h, out.a_i);
  out.m_t = f.m_t;
  out.m_h = f.m_h;
  out.m_i = f.m_i;
  out.fused = f.fused;
  const PoseOutput pose = regress(bind, f.fused, state.regressor, opt.training, opt.dropout_seed);
  out.t = pose.t;
  out.r = pose.r;
  return out;
}

Teacher::Teacher(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  auto r6 = block_rng(cfg_, 6), r7 = block_rng(cfg_, 7), r8 = block_rng(cfg_, 8);
  visual_ = ConvEncoder::create(params_, "visual", cfg_, 2 * cfg_.channels, r6);
  imu_ = ImuEncoder::create(params_, "imu", cfg_, r7);
  regressor_ = PoseRegressor::create(params_, "regressor", cfg_, cfg_.feature_dim() + cfg_.imu_dim(), r8);
}

HiddenState Teacher::zero_state(num::Tape& tape) const {
  return {imu_.cell.zero_state(tape), regressor_.cell.zero_state(tape)};
}

Var Teacher::encode_visual(Binder& bind, Var pair) const {
  check_pair(cfg_, pair);
  return visual_.forward(bind, pair);
}

StepResult Teacher::step(Binder& bind, const TeacherInput& in, HiddenState& state, const StepOptions& opt) const {
  auto& tape = bind.tape();
  StepResult out;
  if (in.a_v) {
    if (in.a_v->size() != cfg_.feature_dim()) throw ConfigError("substituted visual feature has wrong length");
    out.a_h = tape.constant(*in.a_v);
  } else {
    if (!in.visual) throw ConfigError("teacher needs visual frames or a substituted feature");
    out.a_h = encode_visual(bind, tape.constant(*in.visual));
  }
  if (!in.imu) throw ConfigError("teacher needs an IMU window");
  out.a_i = imu_.forward(bind, tape.constant(*in.imu), state.imu);
  out.fused = num::concat({out.a_h, out.a_i});
  const PoseOutput pose = regressor_.forward(bind, out.fused, state.regressor, opt.training, opt.dropout_seed);
  out.t = pose.t;
  out.r = pose.r;
  return out;
}

std::size_t copy_matching(const ParamStore& from, ParamStore& to, const std::string& prefix) {
  std::size_t copied = 0;
  for (std::size_t i : to.with_prefix(prefix)) {
    for (const auto& p : from.all()) {
      if (p.name == to[i].name && p.value.shape() == to[i].value.shape()) {
        to[i].value = p.value;
        ++copied;
        break;
      }
    }
  }
  return copied;
}

void copy_visual_to_hallucination(const Teacher& teacher, DeepTio& student) {
  const auto src = teacher.params().with_prefix("visual.");
  const auto dst = student.params().with_prefix("halluc.");
  if (src.size() != dst.size()) throw ContractError("teacher and student encoders differ in depth");
  for (std::size_t k = 0; k < src.size(); ++k) {
    const auto& from = teacher.params()[src[k]].value;
    auto& to = student.params()[dst[k]].value;
    if (from.shape() != to.shape()) throw ContractError("teacher and student encoder shapes differ");
    to = from;
  }
}

}  // namespace tio::model
