#include "tio/num/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "tio/util/error.hpp"

namespace tio::num {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

constexpr double kOpenLow = std::numeric_limits<double>::denorm_min();
constexpr double kOpenHigh = 1.0 - 0x1.0p-53;

bool needs(Tape& t, std::uint32_t id) { return t.node(id).needs_grad; }

[[noreturn]] void mismatch(const char* op, const Shape& a, const Shape& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " + shape_string(a) + " and " + shape_string(b));
}

enum class Broadcast { None, LeftScalar, RightScalar };

Broadcast broadcast_kind(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) return Broadcast::None;
  if (a.is_scalar()) return Broadcast::LeftScalar;
  if (b.is_scalar()) return Broadcast::RightScalar;
  mismatch(op, a.shape(), b.shape());
}

const Shape& result_shape(Broadcast kind, const Tensor& a, const Tensor& b) {
  return kind == Broadcast::LeftScalar ? b.shape() : a.shape();
}

/// Reduces an incoming full-size gradient onto an operand, summing when it was broadcast.
Tensor reduce_to(const Tensor& g, const Tensor& operand) {
  if (g.shape() == operand.shape()) return g;
  double s = 0.0;
  for (double v : g.data()) s += v;
  return Tensor(operand.shape(), std::vector<double>(operand.size(), s));
}

template <class F>
Var unary(Var x, F&& f, Tape::BackwardFn bw) {
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  auto od = out.data();
  auto xd = xv.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] = f(xd[i]);
  return x.tape().record(std::move(out), {x}, std::move(bw));
}

}  // namespace

double wrap_to_pi(double angle) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(angle + std::numbers::pi, two_pi);
  if (r < 0) r += two_pi;
  r -= std::numbers::pi;
  // fmod maps +pi to -pi; the interval is (-pi, pi].
  if (r <= -std::numbers::pi) r += two_pi;
  return r;
}

Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || (bv.rank() != 2 && bv.rank() != 1)) mismatch("matmul", av.shape(), bv.shape());
  const std::size_t m = av.dim(0), k = av.dim(1);
  const bool vec = bv.rank() == 1;
  const std::size_t n = vec ? 1 : bv.dim(1);
  if (bv.dim(0) != k) mismatch("matmul", av.shape(), bv.shape());

  Tensor out(vec ? Shape{m} : Shape{m, n});
  {
    ConstMapMat A(av.data().data(), m, k);
    ConstMapMat B(bv.data().data(), k, n);
    MapMat C(out.data().data(), m, n);
    C.noalias() = A * B;
  }
  return a.tape().record(std::move(out), {a, b}, [m, k, n](Tape& t, std::uint32_t self) {
    const auto ia = t.node(self).parents[0];
    const auto ib = t.node(self).parents[1];
    ConstMapMat G(t.node(self).grad.data().data(), m, n);
    if (needs(t, ia)) {
      Tensor& ga = t.grad_slot(ia);
      ConstMapMat B(t.node(ib).value.data().data(), k, n);
      MapMat GA(ga.data().data(), m, k);
      GA.noalias() += G * B.transpose();
    }
    if (needs(t, ib)) {
      Tensor& gb = t.grad_slot(ib);
      ConstMapMat A(t.node(ia).value.data().data(), m, k);
      MapMat GB(gb.data().data(), k, n);
      GB.noalias() += A.transpose() * G;
    }
  });
}

static Var binary_linear(const char* op, Var a, Var b, double sign_b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const auto kind = broadcast_kind(op, av, bv);
  Tensor out(result_shape(kind, av, bv));
  auto od = out.data();
  auto ad = av.data();
  auto bd = bv.data();
  for (std::size_t i = 0; i < od.size(); ++i) {
    const double x = kind == Broadcast::LeftScalar ? ad[0] : ad[i];
    const double y = kind == Broadcast::RightScalar ? bd[0] : bd[i];
    od[i] = x + sign_b * y;
  }
  return a.tape().record(std::move(out), {a, b}, [sign_b](Tape& t, std::uint32_t self) {
    const auto ia = t.node(self).parents[0];
    const auto ib = t.node(self).parents[1];
    const Tensor& g = t.node(self).grad;
    if (needs(t, ia)) t.accumulate(ia, reduce_to(g, t.node(ia).value));
    if (needs(t, ib)) {
      Tensor gb = reduce_to(g, t.node(ib).value);
      if (sign_b != 1.0) {
        for (double& v : gb.data()) v *= sign_b;
      }
      t.accumulate(ib, gb);
    }
  });
}

Var add(Var a, Var b) { return binary_linear("add", a, b, 1.0); }
Var sub(Var a, Var b) { return binary_linear("sub", a, b, -1.0); }

Var mul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const auto kind = broadcast_kind("mul", av, bv);
  Tensor out(result_shape(kind, av, bv));
  auto od = out.data();
  auto ad = av.data();
  auto bd = bv.data();
  for (std::size_t i = 0; i < od.size(); ++i) {
    const double x = kind == Broadcast::LeftScalar ? ad[0] : ad[i];
    const double y = kind == Broadcast::RightScalar ? bd[0] : bd[i];
    od[i] = x * y;
  }
  return a.tape().record(std::move(out), {a, b}, [kind](Tape& t, std::uint32_t self) {
    const auto ia = t.node(self).parents[0];
    const auto ib = t.node(self).parents[1];
    auto g = t.node(self).grad.data();
    auto ad = t.node(ia).value.data();
    auto bd = t.node(ib).value.data();
    if (needs(t, ia)) {
      Tensor& ga = t.grad_slot(ia);
      auto gad = ga.data();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double y = kind == Broadcast::RightScalar ? bd[0] : bd[i];
        gad[kind == Broadcast::LeftScalar ? 0 : i] += g[i] * y;
      }
    }
    if (needs(t, ib)) {
      Tensor& gb = t.grad_slot(ib);
      auto gbd = gb.data();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = kind == Broadcast::LeftScalar ? ad[0] : ad[i];
        gbd[kind == Broadcast::RightScalar ? 0 : i] += g[i] * x;
      }
    }
  });
}

Var scale(Var a, double factor) {
  return unary(a, [factor](double x) { return factor * x; }, [factor](Tape& t, std::uint32_t self) {
    const auto ia = t.node(self).parents[0];
    auto g = t.node(self).grad.data();
    auto ga = t.grad_slot(ia).data();
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += factor * g[i];
  });
}

Var sigmoid(Var x) {
  return unary(
      x,
      [](double v) {
        // Split by sign so exp never overflows; clamp keeps the result inside (0, 1).
        double y;
        if (v >= 0) {
          y = 1.0 / (1.0 + std::exp(-v));
        } else {
          const double e = std::exp(v);
          y = e / (1.0 + e);
        }
        return std::clamp(y, kOpenLow, kOpenHigh);
      },
      [](Tape& t, std::uint32_t self) {
        const auto ia = t.node(self).parents[0];
        auto g = t.node(self).grad.data();
        auto y = t.node(self).value.data();
        auto ga = t.grad_slot(ia).data();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
      });
}

Var tanh(Var x) {
  return unary(
      x, [](double v) { return std::clamp(std::tanh(v), -kOpenHigh, kOpenHigh); },
      [](Tape& t, std::uint32_t self) {
        const auto ia = t.node(self).parents[0];
        auto g = t.node(self).grad.data();
        auto y = t.node(self).value.data();
        auto ga = t.grad_slot(ia).data();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
      });
}

Var leaky_relu(Var x, double slope) {
  return unary(
      x, [slope](double v) { return v > 0 ? v : slope * v; },
      [slope](Tape& t, std::uint32_t self) {
        const auto ia = t.node(self).parents[0];
        auto g = t.node(self).grad.data();
        auto xv = t.node(ia).value.data();
        auto ga = t.grad_slot(ia).data();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += xv[i] > 0 ? g[i] : slope * g[i];
      });
}

Var relu(Var x) { return leaky_relu(x, 0.0); }

Var concat(std::initializer_list<Var> parts, std::size_t axis) {
  return concat(std::span<const Var>(parts.begin(), parts.size()), axis);
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw DimensionError("concat: no operands");
  const Shape& first = parts[0].shape();
  if (axis >= first.size()) throw DimensionError("concat: axis out of range for shape " + shape_string(first));
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const Var& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != first.size()) mismatch("concat", first, s);
    for (std::size_t d = 0; d < s.size(); ++d) {
      if (d != axis && s[d] != first[d]) mismatch("concat", first, s);
    }
    out_shape[axis] += s[axis];
  }
  // outer = product of extents before axis; inner = product after axis.
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= first[d];
  for (std::size_t d = axis + 1; d < first.size(); ++d) inner *= first[d];

  Tensor out(out_shape);
  auto od = out.data();
  std::vector<std::size_t> widths;
  widths.reserve(parts.size());
  for (const Var& p : parts) widths.push_back(p.shape()[axis] * inner);
  const std::size_t row = out_shape[axis] * inner;
  std::size_t col = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    auto pd = parts[k].value().data();
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(pd.begin() + static_cast<std::ptrdiff_t>(o * widths[k]), widths[k],
                  od.begin() + static_cast<std::ptrdiff_t>(o * row + col));
    }
    col += widths[k];
  }
  return parts[0].tape().record(std::move(out), parts, [outer, row, widths](Tape& t, std::uint32_t self) {
    const auto parents = t.node(self).parents;
    auto g = t.node(self).grad.data();
    std::size_t col = 0;
    for (std::size_t k = 0; k < parents.size(); ++k) {
      if (needs(t, parents[k])) {
        auto gp = t.grad_slot(parents[k]).data();
        for (std::size_t o = 0; o < outer; ++o) {
          for (std::size_t i = 0; i < widths[k]; ++i) gp[o * widths[k] + i] += g[o * row + col + i];
        }
      }
      col += widths[k];
    }
  });
}

Var slice(Var x, std::size_t offset, std::size_t length) {
  const Tensor& xv = x.value();
  if (length == 0 || offset + length > xv.size()) {
    throw DimensionError("slice [" + std::to_string(offset) + ", " + std::to_string(offset + length) +
                         ") out of range for shape " + shape_string(xv.shape()));
  }
  auto xd = xv.data();
  std::vector<double> vals(xd.begin() + static_cast<std::ptrdiff_t>(offset),
                           xd.begin() + static_cast<std::ptrdiff_t>(offset + length));
  return x.tape().record(Tensor::vector(std::move(vals)), {x}, [offset, length](Tape& t, std::uint32_t self) {
    const auto ia = t.node(self).parents[0];
    auto g = t.node(self).grad.data();
    auto ga = t.grad_slot(ia).data();
    for (std::size_t i = 0; i < length; ++i) ga[offset + i] += g[i];
  });
}

Var reshape(Var x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  return x.tape().record(std::move(out), {x}, [](Tape& t, std::uint32_t self) {
    const auto ia = t.node(self).parents[0];
    auto g = t.node(self).grad.data();
    auto ga = t.grad_slot(ia).data();
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Var flatten(Var x) { return reshape(x, Shape{x.size()}); }

Var avg_pool(Var x, std::size_t factor) {
  const Tensor& xv = x.value();
  if (factor == 0) throw InvalidPoolError("avg_pool: factor must be positive");
  if (xv.rank() == 0) throw InvalidPoolError("avg_pool: cannot pool a scalar");
  const std::size_t last = xv.shape().back();
  if (last % factor != 0) {
    throw InvalidPoolError("avg_pool: extent " + std::to_string(last) + " is not divisible by factor " +
                           std::to_string(factor));
  }
  Shape out_shape = xv.shape();
  out_shape.back() = last / factor;
  Tensor out(out_shape);
  auto xd = xv.data();
  auto od = out.data();
  const double inv = 1.0 / static_cast<double>(factor);
  for (std::size_t o = 0; o < od.size(); ++o) {
    double s = 0.0;
    for (std::size_t j = 0; j < factor; ++j) s += xd[o * factor + j];
    od[o] = s * inv;
  }
  return x.tape().record(std::move(out), {x}, [factor, inv](Tape& t, std::uint32_t self) {
    const auto ia = t.node(self).parents[0];
    auto g = t.node(self).grad.data();
    auto ga = t.grad_slot(ia).data();
    for (std::size_t o = 0; o < g.size(); ++o) {
      for (std::size_t j = 0; j < factor; ++j) ga[o * factor + j] += g[o] * inv;
    }
  });
}

Var dropout(Var x, double rate, bool training, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ParameterError("dropout: rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (!training || rate == 0.0) return scale(x, 1.0);
  std::mt19937_64 rng(seed);
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(x.size());
  for (double& m : mask) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    m = u < rate ? 0.0 : keep_scale;
  }
  Tensor out(x.shape());
  auto od = out.data();
  auto xd = x.value().data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] = xd[i] * mask[i];
  return x.tape().record(std::move(out), {x}, [mask = std::move(mask)](Tape& t, std::uint32_t self) {
    const auto ia = t.node(self).parents[0];
    auto g = t.node(self).grad.data();
    auto ga = t.grad_slot(ia).data();
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * mask[i];
  });
}

Var conv2d(Var input, Var weight, Var bias, std::size_t stride, std::size_t padding) {
  const Tensor& xv = input.value();
  const Tensor& wv = weight.value();
  const Tensor& bv = bias.value();
  if (xv.rank() != 3 || wv.rank() != 4 || wv.dim(1) != xv.dim(0) || wv.dim(2) != wv.dim(3)) {
    mismatch("conv2d", xv.shape(), wv.shape());
  }
  if (bv.rank() != 1 || bv.dim(0) != wv.dim(0)) mismatch("conv2d", wv.shape(), bv.shape());
  if (stride == 0) throw ParameterError("conv2d: stride must be positive");
  const std::size_t C = xv.dim(0), H = xv.dim(1), W = xv.dim(2);
  const std::size_t O = wv.dim(0), K = wv.dim(2);
  if (H + 2 * padding < K || W + 2 * padding < K) mismatch("conv2d", xv.shape(), wv.shape());
  const std::size_t Ho = (H + 2 * padding - K) / stride + 1;
  const std::size_t Wo = (W + 2 * padding - K) / stride + 1;

  Tensor out(Shape{O, Ho, Wo});
  auto xd = xv.data();
  auto wd = wv.data();
  auto bd = bv.data();
  auto od = out.data();
  const auto pad = static_cast<std::ptrdiff_t>(padding);
  for (std::size_t o = 0; o < O; ++o) {
    for (std::size_t i = 0; i < Ho; ++i) {
      for (std::size_t j = 0; j < Wo; ++j) {
        double acc = bd[o];
        for (std::size_t c = 0; c < C; ++c) {
          for (std::size_t ki = 0; ki < K; ++ki) {
            const auto y = static_cast<std::ptrdiff_t>(i * stride + ki) - pad;
            if (y < 0 || y >= static_cast<std::ptrdiff_t>(H)) continue;
            for (std::size_t kj = 0; kj < K; ++kj) {
              const auto x = static_cast<std::ptrdiff_t>(j * stride + kj) - pad;
              if (x < 0 || x >= static_cast<std::ptrdiff_t>(W)) continue;
              acc += wd[((o * C + c) * K + ki) * K + kj] * xd[(c * H + static_cast<std::size_t>(y)) * W + static_cast<std::size_t>(x)];
            }
          }
        }
        od[(o * Ho + i) * Wo + j] = acc;
      }
    }
  }
  return input.tape().record(
      std::move(out), {input, weight, bias}, [C, H, W, O, K, Ho, Wo, stride, pad](Tape& t, std::uint32_t self) {
        const auto ix = t.node(self).parents[0];
        const auto iw = t.node(self).parents[1];
        const auto ib = t.node(self).parents[2];
        auto g = t.node(self).grad.data();
        auto xd = t.node(ix).value.data();
        auto wd = t.node(iw).value.data();
        const bool gx = needs(t, ix), gw = needs(t, iw), gb = needs(t, ib);
        std::span<double> gxd, gwd, gbd;
        if (gx) gxd = t.grad_slot(ix).data();
        if (gw) gwd = t.grad_slot(iw).data();
        if (gb) gbd = t.grad_slot(ib).data();
        for (std::size_t o = 0; o < O; ++o) {
          for (std::size_t i = 0; i < Ho; ++i) {
            for (std::size_t j = 0; j < Wo; ++j) {
              const double go = g[(o * Ho + i) * Wo + j];
              if (gb) gbd[o] += go;
              if (!gx && !gw) continue;
              for (std::size_t c = 0; c < C; ++c) {
                for (std::size_t ki = 0; ki < K; ++ki) {
                  const auto y = static_cast<std::ptrdiff_t>(i * stride + ki) - pad;
                  if (y < 0 || y >= static_cast<std::ptrdiff_t>(H)) continue;
                  for (std::size_t kj = 0; kj < K; ++kj) {
                    const auto x = static_cast<std::ptrdiff_t>(j * stride + kj) - pad;
                    if (x < 0 || x >= static_cast<std::ptrdiff_t>(W)) continue;
                    const std::size_t widx = ((o * C + c) * K + ki) * K + kj;
                    const std::size_t xidx = (c * H + static_cast<std::size_t>(y)) * W + static_cast<std::size_t>(x);
                    if (gw) gwd[widx] += go * xd[xidx];
                    if (gx) gxd[xidx] += go * wd[widx];
                  }
                }
              }
            }
          }
        }
      });
}

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  return x.tape().record(Tensor::scalar(s), {x}, [](Tape& t, std::uint32_t self) {
    const auto ia = t.node(self).parents[0];
    const double g = t.node(self).grad[0];
    for (double& v : t.grad_slot(ia).data()) v += g;
  });
}

Var mean(Var x) { return scale(sum(x), 1.0 / static_cast<double>(x.size())); }

Var huber(Var x, double delta) {
  if (!(delta > 0.0)) throw ParameterError("huber: delta must be positive");
  return unary(
      x,
      [delta](double v) {
        const double a = std::abs(v);
        return a <= delta ? 0.5 * v * v : delta * (a - 0.5 * delta);
      },
      [delta](Tape& t, std::uint32_t self) {
        const auto ia = t.node(self).parents[0];
        auto g = t.node(self).grad.data();
        auto xv = t.node(ia).value.data();
        auto ga = t.grad_slot(ia).data();
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double d = std::abs(xv[i]) <= delta ? xv[i] : (xv[i] > 0 ? delta : -delta);
          ga[i] += g[i] * d;
        }
      });
}

Var half_square(Var x) {
  return unary(
      x, [](double v) { return 0.5 * v * v; },
      [](Tape& t, std::uint32_t self) {
        const auto ia = t.node(self).parents[0];
        auto g = t.node(self).grad.data();
        auto xv = t.node(ia).value.data();
        auto ga = t.grad_slot(ia).data();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * xv[i];
      });
}

Var wrap_angle(Var x) {
  return unary(x, [](double v) { return wrap_to_pi(v); }, [](Tape& t, std::uint32_t self) {
    const auto ia = t.node(self).parents[0];
    auto g = t.node(self).grad.data();
    auto ga = t.grad_slot(ia).data();
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Var detach(Var x) { return x.tape().constant(x.value()); }

}  // namespace tio::num
