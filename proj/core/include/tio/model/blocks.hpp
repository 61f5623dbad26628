#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tio/model/config.hpp"
#include "tio/num/ops.hpp"

namespace tio::model {

/// Ordered, named parameters. Blocks refer to entries by index so a store can be copied freely.
class ParamStore {
 public:
  std::size_t add(std::string name, num::Tensor value);

  num::Parameter& operator[](std::size_t i) { return params_[i]; }
  const num::Parameter& operator[](std::size_t i) const { return params_[i]; }
  std::size_t size() const { return params_.size(); }
  std::vector<num::Parameter>& all() { return params_; }
  const std::vector<num::Parameter>& all() const { return params_; }

  /// Throws ContractError for an unknown name.
  std::size_t index_of(const std::string& name) const;
  /// Indices of parameters whose names start with `prefix`.
  std::vector<std::size_t> with_prefix(const std::string& prefix) const;
  /// Sets the trainable flag of every parameter under `prefix`.
  void set_trainable(const std::string& prefix, bool trainable);
  void zero_grad();
  /// FNV-1a over names, shapes and value bits of the parameters under `prefix`.
  std::uint64_t checksum(const std::string& prefix = "") const;
  std::size_t count_values(const std::string& prefix = "") const;

 private:
  std::vector<num::Parameter> params_;
};

/// Binds store parameters to one tape, each at most once.
class Binder {
 public:
  Binder(num::Tape& tape, ParamStore& store) : tape_(tape), store_(store), cache_(store.size()) {}

  num::Var operator()(std::size_t index);
  num::Tape& tape() { return tape_; }

 private:
  num::Tape& tape_;
  ParamStore& store_;
  std::vector<num::Var> cache_;
};

/// Uniform(+-1/sqrt(fan_in)) initialiser.
num::Tensor uniform_init(num::Shape shape, std::size_t fan_in, std::mt19937_64& rng);

struct ConvEncoder {
  std::vector<std::size_t> weights, biases;
  std::size_t stride = 2, padding = 1, pool = 1;

  static ConvEncoder create(ParamStore& store, const std::string& prefix, const ModelConfig& cfg,
                            std::size_t in_channels, std::mt19937_64& rng);
  /// [C, H, W] input -> leaky-relu conv stack -> flatten -> average pool.
  num::Var forward(Binder& bind, num::Var input) const;
};

struct LstmState {
  num::Var h, c;
};

/// Gates stacked [i; f; g; o] in a single [4H, in+H] matrix.
struct LstmCell {
  std::size_t weight = 0, bias = 0;
  std::size_t input = 0, hidden = 0;

  static LstmCell create(ParamStore& store, const std::string& prefix, std::size_t input, std::size_t hidden,
                         std::mt19937_64& rng);
  LstmState step(Binder& bind, num::Var x, const LstmState& state) const;
  LstmState zero_state(num::Tape& tape) const;
};

/// LSTM over the rows of a [steps, 6] window; output is the concatenation of the pooled hidden states.
struct ImuEncoder {
  LstmCell cell;
  std::size_t pool = 1, steps = 20;

  static ImuEncoder create(ParamStore& store, const std::string& prefix, const ModelConfig& cfg, std::mt19937_64& rng);
  num::Var forward(Binder& bind, num::Var window, LstmState& state) const;
};

struct FusionResult {
  num::Var m_t, m_h, m_i;
  num::Var fused;
};

/// m_X = sigmoid(W_X [a_T; a_H; a_I]); fused = [a_T*m_T; a_H*m_H; a_I*m_I].
struct SelectiveFusion {
  std::size_t w_t = 0, w_h = 0, w_i = 0;

  static SelectiveFusion create(ParamStore& store, const std::string& prefix, const ModelConfig& cfg,
                                std::mt19937_64& rng);
  FusionResult forward(Binder& bind, num::Var a_t, num::Var a_h, num::Var a_i) const;
};

struct PoseOutput {
  num::Var t, r;
};

/// One LSTM step followed by separate translation and rotation FC stacks.
struct PoseRegressor {
  LstmCell cell;
  std::vector<std::size_t> t_weights, t_biases, r_weights, r_biases;
  double dropout = 0.25;

  static PoseRegressor create(ParamStore& store, const std::string& prefix, const ModelConfig& cfg,
                              std::size_t input, std::mt19937_64& rng);
  PoseOutput forward(Binder& bind, num::Var features, LstmState& state, bool training, std::uint64_t seed) const;
};

}  // namespace tio::model
