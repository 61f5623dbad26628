#include "tio/num/tape.hpp"

#include "tio/util/error.hpp"

namespace tio::num {

const Tensor& Var::value() const { return tape_->node(id_).value; }

bool Var::needs_grad() const { return tape_->node(id_).needs_grad; }

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.value.set_requires_grad(false);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::leaf(Tensor value) {
  Node n;
  n.needs_grad = value.requires_grad();
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::parameter(Parameter& p) {
  Node n;
  n.value = p.value;
  n.needs_grad = p.trainable;
  n.param = p.trainable ? &p : nullptr;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::record(Tensor value, std::initializer_list<Var> parents, BackwardFn backward) {
  return record(std::move(value), std::span<const Var>(parents.begin(), parents.size()), std::move(backward));
}

Var Tape::record(Tensor value, std::span<const Var> parents, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  n.parents.reserve(parents.size());
  for (const Var& p : parents) {
    if (&p.tape() != this) throw ContractError("operands belong to different tapes");
    n.parents.push_back(p.id());
    n.needs_grad = n.needs_grad || nodes_[p.id()].needs_grad;
  }
  if (n.needs_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Tensor& Tape::grad_slot(std::uint32_t id) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    n.grad = Tensor::zeros_like(n.value);
    n.has_grad = true;
  }
  return n.grad;
}

void Tape::accumulate(std::uint32_t id, const Tensor& delta) {
  Tensor& g = grad_slot(id);
  auto gd = g.data();
  auto dd = delta.data();
  if (gd.size() != dd.size()) throw DimensionError("gradient shape mismatch during accumulation");
  for (std::size_t i = 0; i < gd.size(); ++i) gd[i] += dd[i];
}

void Tape::backward(Var loss) {
  if (&loss.tape() != this) throw ContractError("loss belongs to a different tape");
  if (loss.value().size() != 1) {
    throw ContractError("backward requires a scalar loss, got shape " + shape_string(loss.shape()));
  }
  for (auto& n : nodes_) {
    n.has_grad = false;
    n.grad = Tensor();
  }
  grad_slot(loss.id()).data()[0] = 1.0;
  for (std::int64_t i = loss.id(); i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.has_grad || !n.needs_grad) continue;
    if (n.backward) n.backward(*this, static_cast<std::uint32_t>(i));
    if (n.param != nullptr) {
      auto pg = n.param->grad.data();
      auto ng = nodes_[static_cast<std::size_t>(i)].grad.data();
      for (std::size_t k = 0; k < pg.size(); ++k) pg[k] += ng[k];
    }
  }
}

Tensor Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.id());
  if (!n.has_grad) return Tensor::zeros_like(n.value);
  return n.grad;
}

}  // namespace tio::num
