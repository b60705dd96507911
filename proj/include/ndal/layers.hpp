// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "ndal/ops.hpp"
#include "ndal/parameter.hpp"
#include "ndal/rng.hpp"

NDAL_CORE_NAMESPACE_BEGIN

/// Fan-in scaled uniform init, U(-sqrt(6/fan_in), sqrt(6/fan_in)).
Tensor kaiming_uniform(Shape shape, std::size_t fan_in, Rng& rng);

class Linear {
 public:
  Linear() = default;
  Linear(ParameterStore& store, const std::string& name, std::size_t in,
         std::size_t out, Rng& rng);
  Var operator()(Tape& tape, const Var& x) const;

  Parameter* weight = nullptr;
  Parameter* bias = nullptr;
};

class Conv1d {
 public:
  Conv1d() = default;
  /// "Same" padding: dilation*(kernel-1)/2 on each side (kernel must be odd).
  Conv1d(ParameterStore& store, const std::string& name, std::size_t in,
         std::size_t out, std::size_t kernel, std::size_t dilation, Rng& rng);
  Var operator()(Tape& tape, const Var& x) const;

  Parameter* weight = nullptr;
  Parameter* bias = nullptr;
  std::size_t dilation = 1;
  std::size_t padding = 0;
};

class BatchNorm1d {
 public:
  BatchNorm1d() = default;
  BatchNorm1d(ParameterStore& store, const std::string& name, std::size_t channels);
  /// Training mode updates the running statistics in place.
  Var operator()(Tape& tape, const Var& x, bool training) const;

  Parameter* gamma = nullptr;
  Parameter* beta = nullptr;
  Parameter* running_mean = nullptr;
  Parameter* running_var = nullptr;
};

/// Two linear layers with a relu between them.
class Mlp {
 public:
  Mlp() = default;
  Mlp(ParameterStore& store, const std::string& name, std::size_t in,
      std::size_t hidden, std::size_t out, Rng& rng);
  Var operator()(Tape& tape, const Var& x) const;

  Linear fc0;
  Linear fc1;
};

/// Channel-wise attentive statistics pooling over time. A 1x1-conv MLP
/// (channels -> hidden -> channels, tanh) scores every frame per channel, a
/// softmax over time turns the scores into weights, and the output is the
/// weighted mean followed by the weighted standard deviation,
/// sqrt(max(E[h^2] - mean^2, 1e-4)).
class AttentiveStatsPool {
 public:
  static constexpr double kVarianceFloor = 1e-4;

  AttentiveStatsPool() = default;
  AttentiveStatsPool(ParameterStore& store, const std::string& name,
                     std::size_t channels, std::size_t hidden, Rng& rng);
  /// h [n,c,t] -> attention weights [n,c,t]; throws DegenerateTime for t < 2.
  Var attention(Tape& tape, const Var& h) const;
  /// h [n,c,t] -> [n,2c]
  Var operator()(Tape& tape, const Var& h) const;

  Conv1d score0;
  Conv1d score1;
};

NDAL_CORE_NAMESPACE_END
