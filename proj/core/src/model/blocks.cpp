#include "tio/model/blocks.hpp"

#include <bit>
#include <cmath>

#include "tio/util/error.hpp"

namespace tio::model {

using num::Var;

std::size_t ParamStore::add(std::string name, num::Tensor value) {
  for (const auto& p : params_) {
    if (p.name == name) throw ContractError("duplicate parameter name " + name);
  }
  params_.emplace_back(std::move(name), std::move(value));
  return params_.size() - 1;
}

std::size_t ParamStore::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  throw ContractError("no parameter named " + name);
}

std::vector<std::size_t> ParamStore::with_prefix(const std::string& prefix) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name.rfind(prefix, 0) == 0) out.push_back(i);
  }
  return out;
}

void ParamStore::set_trainable(const std::string& prefix, bool trainable) {
  for (std::size_t i : with_prefix(prefix)) params_[i].trainable = trainable;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

std::uint64_t ParamStore::checksum(const std::string& prefix) const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int k = 0; k < 8; ++k) {
      h ^= (v >> (8 * k)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  for (std::size_t i : with_prefix(prefix)) {
    const auto& p = params_[i];
    for (char c : p.name) mix(static_cast<unsigned char>(c));
    for (std::size_t d : p.value.shape()) mix(d);
    for (double v : p.value.data()) mix(std::bit_cast<std::uint64_t>(v));
  }
  return h;
}

std::size_t ParamStore::count_values(const std::string& prefix) const {
  std::size_t n = 0;
  for (std::size_t i : with_prefix(prefix)) n += params_[i].value.size();
  return n;
}

Var Binder::operator()(std::size_t index) {
  if (!cache_.at(index).valid()) cache_[index] = tape_.parameter(store_[index]);
  return cache_[index];
}

num::Tensor uniform_init(num::Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
  num::Tensor t(std::move(shape));
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

ConvEncoder ConvEncoder::create(ParamStore& store, const std::string& prefix, const ModelConfig& cfg,
                                std::size_t in_channels, std::mt19937_64& rng) {
  ConvEncoder enc;
  enc.stride = cfg.stride;
  enc.padding = cfg.padding;
  enc.pool = cfg.feature_pool;
  std::size_t c_in = in_channels;
  for (std::size_t l = 0; l < cfg.conv_channels.size(); ++l) {
    const std::size_t c_out = cfg.conv_channels[l];
    const std::size_t fan_in = c_in * cfg.kernel * cfg.kernel;
    enc.weights.push_back(store.add(prefix + ".conv" + std::to_string(l) + ".w",
                                    uniform_init({c_out, c_in, cfg.kernel, cfg.kernel}, fan_in, rng)));
    enc.biases.push_back(store.add(prefix + ".conv" + std::to_string(l) + ".b", uniform_init({c_out}, fan_in, rng)));
    c_in = c_out;
  }
  return enc;
}

Var ConvEncoder::forward(Binder& bind, Var input) const {
  Var x = input;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    x = num::leaky_relu(num::conv2d(x, bind(weights[l]), bind(biases[l]), stride, padding));
  }
  return num::avg_pool(num::flatten(x), pool);
}

LstmCell LstmCell::create(ParamStore& store, const std::string& prefix, std::size_t input, std::size_t hidden,
                          std::mt19937_64& rng) {
  LstmCell cell;
  cell.input = input;
  cell.hidden = hidden;
  const std::size_t fan_in = input + hidden;
  cell.weight = store.add(prefix + ".w", uniform_init({4 * hidden, fan_in}, fan_in, rng));
  num::Tensor b = uniform_init({4 * hidden}, fan_in, rng);
  for (std::size_t k = hidden; k < 2 * hidden; ++k) b[k] = 1.0;
  cell.bias = store.add(prefix + ".b", std::move(b));
  return cell;
}

LstmState LstmCell::step(Binder& bind, Var x, const LstmState& state) const {
  if (x.size() != input) {
    throw ContractError("LSTM input has " + std::to_string(x.size()) + " values, expected " + std::to_string(input));
  }
  const Var z = num::add(num::matmul(bind(weight), num::concat({num::flatten(x), state.h})), bind(bias));
  const Var i = num::sigmoid(num::slice(z, 0, hidden));
  const Var f = num::sigmoid(num::slice(z, hidden, hidden));
  const Var g = num::tanh(num::slice(z, 2 * hidden, hidden));
  const Var o = num::sigmoid(num::slice(z, 3 * hidden, hidden));
  const Var c = num::add(num::mul(f, state.c), num::mul(i, g));
  return {num::mul(o, num::tanh(c)), c};
}

LstmState LstmCell::zero_state(num::Tape& tape) const {
  return {tape.constant(num::Tensor({hidden})), tape.constant(num::Tensor({hidden}))};
}

ImuEncoder ImuEncoder::create(ParamStore& store, const std::string& prefix, const ModelConfig& cfg,
                              std::mt19937_64& rng) {
  ImuEncoder enc;
  enc.cell = LstmCell::create(store, prefix + ".lstm", 6, cfg.imu_hidden, rng);
  enc.pool = cfg.imu_pool;
  enc.steps = cfg.imu_steps;
  return enc;
}

Var ImuEncoder::forward(Binder& bind, Var window, LstmState& state) const {
  if (window.shape() != num::Shape{steps, 6}) {
    throw ContractError("IMU window must be [" + std::to_string(steps) + "x6], got " + num::shape_string(window.shape()));
  }
  std::vector<Var> outputs;
  outputs.reserve(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    state = cell.step(bind, num::slice(window, 6 * k, 6), state);
    outputs.push_back(pool == 1 ? state.h : num::avg_pool(state.h, pool));
  }
  return num::concat(outputs);
}

SelectiveFusion SelectiveFusion::create(ParamStore& store, const std::string& prefix, const ModelConfig& cfg,
                                        std::mt19937_64& rng) {
  SelectiveFusion sf;
  const std::size_t n = cfg.fused_dim();
  sf.w_t = store.add(prefix + ".w_t", uniform_init({cfg.feature_dim(), n}, n, rng));
  sf.w_h = store.add(prefix + ".w_h", uniform_init({cfg.feature_dim(), n}, n, rng));
  sf.w_i = store.add(prefix + ".w_i", uniform_init({cfg.imu_dim(), n}, n, rng));
  return sf;
}

FusionResult SelectiveFusion::forward(Binder& bind, Var a_t, Var a_h, Var a_i) const {
  const Var wt = bind(w_t), wh = bind(w_h), wi = bind(w_i);
  if (a_t.size() != wt.shape()[0] || a_h.size() != wh.shape()[0] || a_i.size() != wi.shape()[0]) {
    throw ConfigError("fusion feature lengths " + std::to_string(a_t.size()) + "/" + std::to_string(a_h.size()) + "/" +
                      std::to_string(a_i.size()) + " do not match the fusion weights");
  }
  const Var all = num::concat({a_t, a_h, a_i});
  FusionResult r;
  r.m_t = num::sigmoid(num::matmul(wt, all));
  r.m_h = num::sigmoid(num::matmul(wh, all));
  r.m_i = num::sigmoid(num::matmul(wi, all));
  r.fused = num::concat({num::mul(a_t, r.m_t), num::mul(a_h, r.m_h), num::mul(a_i, r.m_i)});
  return r;
}

PoseRegressor PoseRegressor::create(ParamStore& store, const std::string& prefix, const ModelConfig& cfg,
                                    std::size_t input, std::mt19937_64& rng) {
  PoseRegressor reg;
  reg.dropout = cfg.dropout;
  reg.cell = LstmCell::create(store, prefix + ".lstm", input, cfg.regressor_hidden, rng);
  for (const char* branch : {"t", "r"}) {
    auto& ws = std::string(branch) == "t" ? reg.t_weights : reg.r_weights;
    auto& bs = std::string(branch) == "t" ? reg.t_biases : reg.r_biases;
    std::size_t in = cfg.regressor_hidden;
    for (std::size_t l = 0; l < cfg.fc_widths.size(); ++l) {
      const std::size_t out = cfg.fc_widths[l];
      const std::string base = prefix + ".fc_" + branch + std::to_string(l);
      ws.push_back(store.add(base + ".w", uniform_init({out, in}, in, rng)));
      bs.push_back(store.add(base + ".b", uniform_init({out}, in, rng)));
      in = out;
    }
  }
  return reg;
}

PoseOutput PoseRegressor::forward(Binder& bind, Var features, LstmState& state, bool training,
                                  std::uint64_t seed) const {
  state = cell.step(bind, features, state);
  auto branch = [&](const std::vector<std::size_t>& ws, const std::vector<std::size_t>& bs, std::uint64_t stream) {
    Var x = state.h;
    for (std::size_t l = 0; l < ws.size(); ++l) {
      if (l > 0) x = num::dropout(x, dropout, training, seed * 0x9e3779b97f4a7c15ULL + stream * 16 + l);
      x = num::add(num::matmul(bind(ws[l]), x), bind(bs[l]));
      if (l + 1 < ws.size()) x = num::leaky_relu(x);
    }
    return x;
  };
  return {branch(t_weights, t_biases, 1), branch(r_weights, r_biases, 2)};
}

}  // namespace tio::model
