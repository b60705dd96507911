// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ndal/optim.hpp"

#include <cmath>

#include "ndal/error.hpp"

NDAL_CORE_NAMESPACE_BEGIN

void Optimizer::init(std::span<Parameter* const> params) {
  for (Parameter* p : params) {
    if (moments_.contains(p->name)) continue;
    moments_.emplace(p->name, Moments{Tensor(p->value.shape()), Tensor(p->value.shape())});
  }
}

void Optimizer::step(std::span<Parameter* const> params) {
  for (const Parameter* p : params) {
    if (p->grad.numel() != p->value.numel() || p->grad.shape() != p->value.shape()) {
      fail(ErrorCode::kMissingGrad, "no gradient for " + p->name);
    }
    if (options_.kind == OptimizerKind::kAdam) {
      auto it = moments_.find(p->name);
      if (it == moments_.end() || it->second.first.shape() != p->value.shape() ||
          it->second.second.shape() != p->value.shape()) {
        fail(ErrorCode::kStaleState, "optimizer state does not match " + p->name);
      }
    }
  }

  const std::uint64_t t = step_count_ + 1;
  const double lr = options_.lr, wd = options_.weight_decay;
  if (options_.kind == OptimizerKind::kSgd) {
    for (Parameter* p : params) {
      for (std::size_t i = 0; i < p->value.numel(); ++i) {
        const double w = p->value[i];
        p->value[i] = static_cast<Real>(w - lr * (p->grad[i] + wd * w));
      }
    }
  } else {
    const double b1 = options_.beta1, b2 = options_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
    for (Parameter* p : params) {
      Moments& mo = moments_.at(p->name);
      for (std::size_t i = 0; i < p->value.numel(); ++i) {
        const double g = p->grad[i];
        const double m = b1 * mo.first[i] + (1.0 - b1) * g;
        const double v = b2 * mo.second[i] + (1.0 - b2) * g * g;
        mo.first[i] = static_cast<Real>(m);
        mo.second[i] = static_cast<Real>(v);
        const double update = (m / c1) / (std::sqrt(v / c2) + options_.eps);
        const double w = p->value[i];
        p->value[i] = static_cast<Real>(w - lr * (update + wd * w));
      }
    }
  }
  step_count_ = t;
}

NDAL_CORE_NAMESPACE_END
