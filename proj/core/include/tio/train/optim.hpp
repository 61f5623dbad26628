#pragma once

#include <string>
#include <vector>

#include "tio/model/blocks.hpp"
#include "tio/model/checkpoint.hpp"

namespace tio::train {

/**
 * \brief First-order optimiser over a ParamStore.
 *
 * Only trainable parameters move; their accumulators mirror the parameter
 * shapes. step() throws NumericError naming the parameter when a gradient is
 * non-finite, before any value is modified.
 */
class Optimizer {
 public:
  virtual ~Optimizer() = default;

  virtual void step(model::ParamStore& params, double lr) = 0;
  std::size_t steps() const { return steps_; }

  /// Adds "opt.*" tensors to a checkpoint and restores them.
  void save(model::Checkpoint& ck) const;
  void load(const model::Checkpoint& ck);

 protected:
  Optimizer(const model::ParamStore& params, std::size_t slots);
  void check_finite(const model::ParamStore& params) const;

  std::size_t steps_ = 0;
  std::vector<std::string> names_;
  std::vector<std::vector<num::Tensor>> slots_;  ///< [slot][param]
};

class Adam final : public Optimizer {
 public:
  explicit Adam(const model::ParamStore& params, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(model::ParamStore& params, double lr) override;

 private:
  double beta1_, beta2_, eps_;
};

class RmsProp final : public Optimizer {
 public:
  explicit RmsProp(const model::ParamStore& params, double rho = 0.9, double eps = 1e-8);
  void step(model::ParamStore& params, double lr) override;

 private:
  double rho_, eps_;
};

}  // namespace tio::train
