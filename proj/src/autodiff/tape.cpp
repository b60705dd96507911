// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ndal/tape.hpp"

#include <spdlog/spdlog.h>

#include "ndal/error.hpp"

NDAL_CORE_NAMESPACE_BEGIN

const Tensor& Var::value() const { return tape_->value(id_); }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::leaf(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  n.is_leaf = true;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::watch(Parameter& param) {
  if (auto it = watched_.find(&param); it != watched_.end()) {
    return Var(this, it->second);
  }
  Node n;
  n.value = param.value;
  n.requires_grad = param.trainable;
  n.is_leaf = true;
  n.param = &param;
  nodes_.push_back(std::move(n));
  const int id = static_cast<int>(nodes_.size() - 1);
  watched_.emplace(&param, id);
  return Var(this, id);
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs,
                 BackwardFn fn) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(fn));
}

Var Tape::record(Tensor value, std::span<const Var> inputs, BackwardFn fn) {
  if (!value.all_finite()) {
    fail(ErrorCode::kNonFinite, "op output of shape " + shape_str(value.shape()) +
                                    " contains NaN/Inf");
  }
  bool needs_grad = false;
  for (const Var& v : inputs) {
    if (&v.tape() != this) {
      fail(ErrorCode::kInvalidArgument, "op inputs recorded on different tapes");
    }
    needs_grad = needs_grad || requires_grad(v.id());
  }
  Node n;
  n.value = std::move(value);
  n.requires_grad = needs_grad;
  if (needs_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Tensor* Tape::sink(const Var& v) {
  Node& n = nodes_.at(v.id());
  if (!n.requires_grad) return nullptr;
  if (n.grad.empty() || n.grad.shape() != n.value.shape()) n.grad = Tensor(n.value.shape());
  return &n.grad;
}

std::size_t Tape::recorded() const {
  std::size_t count = 0;
  for (const Node& n : nodes_) {
    if (n.backward) ++count;
  }
  return count;
}

Gradients Tape::backward(const Var& loss) {
  if (&loss.tape() != this) {
    fail(ErrorCode::kInvalidArgument, "loss belongs to a different tape");
  }
  Node& root = nodes_.at(loss.id());
  if (root.value.numel() != 1) {
    fail(ErrorCode::kNotScalar,
         "backward from non-scalar of shape " + shape_str(root.value.shape()));
  }
  if (!root.requires_grad) {
    spdlog::warn("backward: loss does not depend on any leaf; gradients are zero");
  } else {
    root.grad = Tensor(root.value.shape(), Real(1));
    for (int id = loss.id(); id >= 0; --id) {
      Node& n = nodes_[id];
      if (!n.backward || n.grad.empty()) continue;
      n.backward(*this, n.grad);
    }
  }

  Gradients grads;
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    Node& n = nodes_[id];
    if (!n.is_leaf) continue;
    Tensor g = n.grad.empty() ? Tensor(n.value.shape()) : std::move(n.grad);
    if (n.param == nullptr) {
      grads.emplace(static_cast<int>(id), std::move(g));
    } else if (n.param->trainable) {
      n.param->grad = std::move(g);
    }
  }
  clear();
  return grads;
}

void Tape::clear() {
  nodes_.clear();
  watched_.clear();
}

NDAL_CORE_NAMESPACE_END
