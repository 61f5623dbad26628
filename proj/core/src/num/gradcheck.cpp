#include "tio/num/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "tio/util/error.hpp"

namespace tio::num {

namespace {

double eval_loss(const LossBuilder& f) {
  Tape tape;
  const double v = f(tape).value().item();
  if (!std::isfinite(v)) throw NumericError("finite_diff_check: loss evaluation is not finite");
  return v;
}

}  // namespace

double evaluate_with_gradients(const LossBuilder& f, std::span<Parameter* const> params) {
  for (Parameter* p : params) p->zero_grad();
  Tape tape;
  Var loss = f(tape);
  const double v = loss.value().item();
  if (!std::isfinite(v)) throw NumericError("loss evaluation is not finite");
  tape.backward(loss);
  return v;
}

GradCheckResult finite_diff_check(const LossBuilder& f, std::span<Parameter* const> params, double eps) {
  if (!(eps > 0.0)) throw ParameterError("finite_diff_check: eps must be positive");
  evaluate_with_gradients(f, params);

  GradCheckResult result;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Parameter& p = *params[pi];
    auto values = p.value.data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + eps;
      const double plus = eval_loss(f);
      values[i] = saved - eps;
      const double minus = eval_loss(f);
      values[i] = saved;

      const double g_fd = (plus - minus) / (2.0 * eps);
      const double g_ad = p.trainable ? p.grad[i] : 0.0;
      const double err = std::abs(g_ad - g_fd) / std::max(1.0, std::abs(g_fd));
      if (err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst_param = pi;
        result.worst_index = i;
      }
      ++result.coordinates;
    }
  }
  return result;
}

}  // namespace tio::num
