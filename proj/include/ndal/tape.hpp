// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <deque>
#include <functional>
#include <initializer_list>
#include <unordered_map>

#include "ndal/parameter.hpp"
#include "ndal/tensor.hpp"

NDAL_CORE_NAMESPACE_BEGIN

class Tape;

/// Handle to a value recorded on a tape. Invalidated by Tape::clear().
class Var {
 public:
  Var() = default;

  bool valid() const { return tape_ != nullptr; }
  int id() const { return id_; }
  Tape& tape() const { return *tape_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

/// Gradients of leaf variables produced by Tape::backward, keyed by Var id.
using Gradients = std::unordered_map<int, Tensor>;

/// Linear record of a computation. Nodes are appended in evaluation order, so
/// the record is topologically sorted and backward is a single reverse sweep.
/// A tape is owned by one thread; independent tapes share no state.
class Tape {
 public:
  /// Propagates the node's output gradient into its inputs via Tape::sink.
  using BackwardFn = std::function<void(Tape&, const Tensor& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var leaf(Tensor value);
  /// Leaf bound to a parameter; repeated calls return the same node. On
  /// backward the parameter's grad is overwritten with the result.
  Var watch(Parameter& param);

  /// Appends an op output. The backward closure is kept only when some input
  /// requires grad; otherwise the node is a constant.
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn);
  Var record(Tensor value, std::span<const Var> inputs, BackwardFn fn);

  const Tensor& value(int id) const { return nodes_.at(id).value; }
  bool requires_grad(int id) const { return nodes_.at(id).requires_grad; }
  /// Gradient accumulator of `v`, allocated as zeros on first use; nullptr
  /// when `v` does not require grad.
  Tensor* sink(const Var& v);

  /// Reverse sweep from a scalar loss. Every recorded node is visited exactly
  /// once. Watched parameters receive their gradient (zero when not reached),
  /// leaf gradients are returned, and the tape is cleared.
  Gradients backward(const Var& loss);

  void clear();
  std::size_t size() const { return nodes_.size(); }
  /// Number of nodes holding a backward closure.
  std::size_t recorded() const;

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool is_leaf = false;
    Parameter* param = nullptr;
    BackwardFn backward;
  };

  std::deque<Node> nodes_;
  std::unordered_map<const Parameter*, int> watched_;
};

NDAL_CORE_NAMESPACE_END
