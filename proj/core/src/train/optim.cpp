#include "tio/train/optim.hpp"

#include <cmath>

#include "tio/util/error.hpp"

namespace tio::train {

Optimizer::Optimizer(const model::ParamStore& params, std::size_t slots) : slots_(slots) {
  for (const auto& p : params.all()) {
    names_.push_back(p.name);
    for (auto& s : slots_) s.push_back(num::Tensor::zeros_like(p.value));
  }
}

void Optimizer::check_finite(const model::ParamStore& params) const {
  if (params.size() != names_.size()) throw ContractError("optimizer state does not match the parameter store");
  for (const auto& p : params.all()) {
    if (p.trainable && !p.grad.all_finite()) {
      throw NumericError("non-finite gradient in " + p.name + " at optimizer step " + std::to_string(steps_ + 1));
    }
  }
}

void Optimizer::save(model::Checkpoint& ck) const {
  ck.tensors.emplace_back("opt.steps", num::Tensor::scalar(static_cast<double>(steps_)));
  for (std::size_t s = 0; s < slots_.size(); ++s) {
    for (std::size_t i = 0; i < names_.size(); ++i) {
      ck.tensors.emplace_back("opt." + std::to_string(s) + "." + names_[i], slots_[s][i]);
    }
  }
}

void Optimizer::load(const model::Checkpoint& ck) {
  const num::Tensor* st = ck.find("opt.steps");
  if (!st) throw CompatibilityError("checkpoint has no optimizer state");
  steps_ = static_cast<std::size_t>(st->item());
  for (std::size_t s = 0; s < slots_.size(); ++s) {
    for (std::size_t i = 0; i < names_.size(); ++i) {
      const num::Tensor* t = ck.find("opt." + std::to_string(s) + "." + names_[i]);
      if (!t || t->shape() != slots_[s][i].shape()) {
        throw CompatibilityError("optimizer state for " + names_[i] + " is missing or misshapen");
      }
      slots_[s][i] = *t;
    }
  }
}

Adam::Adam(const model::ParamStore& params, double beta1, double beta2, double eps)
    : Optimizer(params, 2), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step(model::ParamStore& params, double lr) {
  check_finite(params);
  ++steps_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    if (!p.trainable) continue;
    auto m = slots_[0][i].data();
    auto v = slots_[1][i].data();
    auto w = p.value.data();
    const auto g = p.grad.data();
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = beta1_ * m[k] + (1.0 - beta1_) * g[k];
      v[k] = beta2_ * v[k] + (1.0 - beta2_) * g[k] * g[k];
      w[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps_);
    }
  }
}

RmsProp::RmsProp(const model::ParamStore& params, double rho, double eps)
    : Optimizer(params, 1), rho_(rho), eps_(eps) {}

void RmsProp::step(model::ParamStore& params, double lr) {
  check_finite(params);
  ++steps_;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    if (!p.trainable) continue;
    auto s = slots_[0][i].data();
    auto w = p.value.data();
    const auto g = p.grad.data();
    for (std::size_t k = 0; k < w.size(); ++k) {
      s[k] = rho_ * s[k] + (1.0 - rho_) * g[k] * g[k];
      w[k] -= lr * g[k] / (std::sqrt(s[k]) + eps_);
    }
  }
}

}  // namespace tio::train
