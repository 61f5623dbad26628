#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tio/num/tape.hpp"

namespace tio::num {

// Every op appends one node to the tape of its operands. Shape mismatches throw
// DimensionError. Only scalar-tensor broadcasting is supported.

/// [m x k] * [k x n] -> [m x n]; a rank-1 right operand of length k yields a length-m vector.
Var matmul(Var a, Var b);

Var add(Var a, Var b);
Var sub(Var a, Var b);
/// Elementwise (Hadamard) product.
Var mul(Var a, Var b);
Var scale(Var a, double factor);

/// Elementwise logistic function; results are clamped to the representable interior of (0, 1).
Var sigmoid(Var x);
Var tanh(Var x);
Var relu(Var x);
Var leaky_relu(Var x, double slope = 0.01);

/// Concatenates along `axis`; all other extents must agree.
Var concat(std::span<const Var> parts, std::size_t axis = 0);
Var concat(std::initializer_list<Var> parts, std::size_t axis = 0);

/// Contiguous slice [offset, offset+length) of the flattened data, as a rank-1 tensor.
Var slice(Var x, std::size_t offset, std::size_t length);
Var reshape(Var x, Shape shape);
Var flatten(Var x);

/// Mean over non-overlapping windows of `factor` along the last axis.
Var avg_pool(Var x, std::size_t factor);

/**
 * Inverted dropout. In training mode each element is zeroed with probability
 * `rate` using a generator seeded from `seed`, and survivors are scaled by
 * 1/(1-rate). Evaluation mode is the identity. Throws ParameterError unless
 * 0 <= rate < 1.
 */
Var dropout(Var x, double rate, bool training, std::uint64_t seed);

/// 2-D convolution: input [C x H x W], weight [O x C x K x K], bias [O] -> [O x Ho x Wo].
Var conv2d(Var input, Var weight, Var bias, std::size_t stride, std::size_t padding);

Var sum(Var x);
Var mean(Var x);

/// Elementwise Huber: 0.5 x^2 for |x| <= delta, delta (|x| - delta/2) otherwise.
Var huber(Var x, double delta);
/// Elementwise 0.5 x^2.
Var half_square(Var x);

/// Wraps every element into (-pi, pi]. The gradient passes through unchanged.
Var wrap_angle(Var x);

/// Copies the value onto the tape as a constant, cutting gradient flow.
Var detach(Var x);

/// Scalar helper used by several ops and tests.
double wrap_to_pi(double angle);

}  // namespace tio::num
