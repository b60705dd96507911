// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>

#include "ndal/parameter.hpp"

NDAL_CORE_NAMESPACE_BEGIN

enum class OptimizerKind { kAdam, kSgd };

struct OptimizerOptions {
  OptimizerKind kind = OptimizerKind::kAdam;
  double lr = 1e-3;
  double weight_decay = 2e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct Moments {
  Tensor first;
  Tensor second;
};

/// Adam with decoupled weight decay, or plain descent
/// p <- p - lr*(g + weight_decay*p). State is keyed by parameter name.
class Optimizer {
 public:
  explicit Optimizer(OptimizerOptions options = {}) : options_(options) {}

  /// Creates zeroed moments for every parameter (idempotent per name).
  void init(std::span<Parameter* const> params);
  /// One update of every parameter from its grad; increments the step count.
  /// Throws MissingGrad when a grad is absent or mis-shaped and StaleState
  /// when the stored moments do not match a parameter.
  void step(std::span<Parameter* const> params);

  const OptimizerOptions& options() const { return options_; }
  double lr() const { return options_.lr; }
  void set_lr(double lr) { options_.lr = lr; }
  std::uint64_t step_count() const { return step_count_; }
  void set_step_count(std::uint64_t n) { step_count_ = n; }

  std::map<std::string, Moments>& moments() { return moments_; }
  const std::map<std::string, Moments>& moments() const { return moments_; }

 private:
  OptimizerOptions options_;
  std::uint64_t step_count_ = 0;
  std::map<std::string, Moments> moments_;
};

NDAL_CORE_NAMESPACE_END
