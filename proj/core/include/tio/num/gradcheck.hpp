#pragma once

#include <functional>
#include <span>

#include "tio/num/tape.hpp"

namespace tio::num {

/// Builds a scalar loss on a fresh tape from parameters bound with Tape::parameter.
using LossBuilder = std::function<Var(Tape&)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  std::size_t coordinates = 0;
};

/**
 * Compares reverse-mode gradients against central differences for every
 * coordinate of every parameter in `params`. The error per coordinate is
 * |g_ad - g_fd| / max(1, |g_fd|). Parameter values are restored afterwards.
 * Throws NumericError if any loss evaluation is non-finite.
 */
GradCheckResult finite_diff_check(const LossBuilder& f, std::span<Parameter* const> params, double eps = 1e-5);

/// Runs one forward/backward pass and returns the loss; gradients land in each p.grad (zeroed first).
double evaluate_with_gradients(const LossBuilder& f, std::span<Parameter* const> params);

}  // namespace tio::num
