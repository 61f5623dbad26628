#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "tio/num/tensor.hpp"

namespace tio::num {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
  bool needs_grad() const;
  Tape& tape() const { return *tape_; }
  std::uint32_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

/**
 * \brief Records operations in execution order for reverse-mode differentiation.
 *
 * Nodes are appended as ops run, so every node's parents precede it. backward()
 * sweeps the nodes once in reverse. A tape has one writer; independent tapes can
 * run on different threads.
 */
class Tape {
 public:
  struct Node;
  using BackwardFn = std::function<void(Tape&, std::uint32_t self)>;

  struct Node {
    Tensor value;
    Tensor grad;
    bool has_grad = false;
    bool needs_grad = false;
    std::vector<std::uint32_t> parents;
    BackwardFn backward;
    Parameter* param = nullptr;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that never receives gradients.
  Var constant(Tensor value);
  /// Leaf whose gradient is tracked when value.requires_grad() is set.
  Var leaf(Tensor value);
  /// Leaf bound to a parameter; backward() adds its gradient into p.grad when p.trainable.
  Var parameter(Parameter& p);

  /// Appends an op node. `backward` may be empty when no parent needs gradients.
  Var record(Tensor value, std::initializer_list<Var> parents, BackwardFn backward);
  Var record(Tensor value, std::span<const Var> parents, BackwardFn backward);

  /// Reverse sweep from a scalar loss. Parameter gradients accumulate (sum) across calls.
  void backward(Var loss);

  /// Gradient of the last backward() with respect to v; zeros if v was unreachable.
  Tensor grad(Var v) const;

  const Node& node(std::uint32_t id) const { return nodes_[id]; }
  Node& node(std::uint32_t id) { return nodes_[id]; }
  std::size_t size() const { return nodes_.size(); }

  /// Adds `delta` into the gradient slot of node `id`, allocating it on first use.
  void accumulate(std::uint32_t id, const Tensor& delta);
  /// Returns the gradient slot of node `id`, zero-initialised on first use.
  Tensor& grad_slot(std::uint32_t id);

 private:
  std::deque<Node> nodes_;  // deque keeps references stable as nodes are appended
};

}  // namespace tio::num
