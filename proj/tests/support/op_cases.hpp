// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

// Random, finite-difference-friendly inputs for every op kind. Compiled into
// both the 32-bit and the 64-bit test binaries.

#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "ndal/gradcheck.hpp"
#include "ndal/ops.hpp"
#include "ndal/rng.hpp"

namespace ndal::test {

struct OpCase {
  OpKind kind;
  std::vector<Tensor> inputs;
  OpAttrs attrs;
  // Running statistics for batchnorm cases; attrs point into these.
  std::unique_ptr<Tensor> running_mean;
  std::unique_ptr<Tensor> running_var;
};

inline std::size_t dim(Rng& rng, std::size_t lo = 3, std::size_t hi = 8) {
  return static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(lo),
                                                  static_cast<std::int64_t>(hi)));
}

inline Tensor randn(Shape shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (Real& v : t.data()) v = static_cast<Real>(scale * rng.normal());
  return t;
}

/// Normal values pushed at least `gap` away from `center` (for kinked ops).
inline Tensor randn_away(Shape shape, Rng& rng, double center, double gap) {
  Tensor t(std::move(shape));
  for (Real& v : t.data()) {
    double x;
    do {
      x = center + rng.normal();
    } while (std::abs(x - center) < gap);
    v = static_cast<Real>(x);
  }
  return t;
}

inline Tensor uniform(Shape shape, Rng& rng, double lo, double hi) {
  Tensor t(std::move(shape));
  for (Real& v : t.data()) v = static_cast<Real>(rng.uniform(lo, hi));
  return t;
}

inline std::vector<std::int64_t> labels(std::size_t n, std::size_t classes, Rng& rng) {
  std::vector<std::int64_t> out(n);
  for (auto& y : out) y = rng.uniform_int(0, static_cast<std::int64_t>(classes) - 1);
  return out;
}

inline OpCase make_case(OpKind kind, Rng& rng) {
  OpCase c;
  c.kind = kind;
  switch (kind) {
    case OpKind::kMatmul: {
      const std::size_t m = dim(rng), k = dim(rng), n = dim(rng);
      c.inputs = {randn({m, k}, rng), randn({k, n}, rng)};
      break;
    }
    case OpKind::kLinear: {
      const std::size_t n = dim(rng), in = dim(rng), out = dim(rng);
      c.inputs = {randn({n, in}, rng), randn({out, in}, rng), randn({out}, rng)};
      break;
    }
    case OpKind::kConv1d: {
      const std::size_t n = dim(rng), cin = dim(rng), cout = dim(rng), t = dim(rng);
      const std::size_t kernel = 2 * static_cast<std::size_t>(rng.uniform_int(0, 2)) + 1;
      c.attrs.dilation = static_cast<std::size_t>(rng.uniform_int(1, 2));
      c.attrs.padding = rng.uniform() < 0.5 ? 0 : c.attrs.dilation * (kernel - 1) / 2;
      const std::size_t steps = std::max(t, c.attrs.dilation * (kernel - 1) + 1);
      c.inputs = {randn({n, cin, steps}, rng), randn({cout, cin, kernel}, rng, 0.5),
                  randn({cout}, rng)};
      break;
    }
    case OpKind::kRelu:
      c.inputs = {randn_away({dim(rng), dim(rng)}, rng, 0.0, 0.1)};
      break;
    case OpKind::kTanh:
      c.inputs = {randn({dim(rng), dim(rng)}, rng)};
      break;
    case OpKind::kSqrt:
      c.inputs = {uniform({dim(rng), dim(rng)}, rng, 0.5, 2.0)};
      break;
    case OpKind::kClampMin:
      c.attrs.scalar = 0.25;
      c.inputs = {randn_away({dim(rng), dim(rng)}, rng, 0.25, 0.1)};
      break;
    case OpKind::kBatchnorm1d: {
      const std::size_t n = dim(rng), ch = dim(rng);
      Shape shape = rng.uniform() < 0.5 ? Shape{n, ch} : Shape{n, ch, dim(rng)};
      c.inputs = {randn(shape, rng, 2.0), uniform({ch}, rng, 0.5, 1.5), randn({ch}, rng)};
      c.running_mean = std::make_unique<Tensor>(randn({ch}, rng));
      c.running_var = std::make_unique<Tensor>(uniform({ch}, rng, 0.5, 2.0));
      c.attrs.batchnorm.running_mean = c.running_mean.get();
      c.attrs.batchnorm.running_var = c.running_var.get();
      c.attrs.batchnorm.training = rng.uniform() < 0.75;
      break;
    }
    case OpKind::kSoftmax:
    case OpKind::kLogSoftmax:
    case OpKind::kL2Normalize:
    case OpKind::kMean:
    case OpKind::kSumLast:
    case OpKind::kSquare:
      c.inputs = {randn({dim(rng), dim(rng)}, rng)};
      break;
    case OpKind::kConcat: {
      const std::size_t a = dim(rng), b = dim(rng), parts = dim(rng, 2, 3);
      c.attrs.axis = static_cast<std::size_t>(rng.uniform_int(0, 1));
      for (std::size_t i = 0; i < parts; ++i) {
        const std::size_t own = dim(rng);
        c.inputs.push_back(randn(c.attrs.axis == 0 ? Shape{own, b} : Shape{a, own}, rng));
      }
      break;
    }
    case OpKind::kSliceRows: {
      const std::size_t rows = dim(rng);
      c.attrs.begin = static_cast<std::size_t>(rng.uniform_int(0, 1));
      c.attrs.end = rows - static_cast<std::size_t>(rng.uniform_int(0, 1));
      c.inputs = {randn({rows, dim(rng), dim(rng)}, rng)};
      break;
    }
    case OpKind::kAdd:
    case OpKind::kSub:
    case OpKind::kMul: {
      const std::size_t a = dim(rng), b = dim(rng);
      const bool broadcast = rng.uniform() < 0.5;
      c.inputs = {randn({a, b}, rng), broadcast ? randn({b}, rng) : randn({a, b}, rng)};
      break;
    }
    case OpKind::kMulScalar:
      c.attrs.scalar = rng.uniform(-3.0, 3.0);
      c.inputs = {randn({dim(rng), dim(rng)}, rng)};
      break;
    case OpKind::kPick: {
      const std::size_t n = dim(rng), classes = dim(rng);
      c.attrs.labels = labels(n, classes, rng);
      c.inputs = {randn({n, classes}, rng)};
      break;
    }
    case OpKind::kAngularMargin: {
      const std::size_t n = dim(rng), classes = dim(rng);
      c.attrs.labels = labels(n, classes, rng);
      c.attrs.margin = 0.2;
      c.attrs.scale = 3.0;
      c.inputs = {uniform({n, classes}, rng, -0.9, 0.9)};
      break;
    }
    case OpKind::kGradReverse:
      c.attrs.scalar = rng.uniform(0.1, 10.0);
      c.inputs = {randn({dim(rng), dim(rng)}, rng)};
      break;
  }
  return c;
}

/// Scalar probe sum((op(inputs) - op(inputs_0)) * R) with a fixed random R,
/// so every output element contributes to the checked gradient. Centering on
/// the unperturbed output keeps the probe near zero, so its rounding error
/// stays far below the finite-difference signal.
inline GradCheckReport check_op(OpCase& c, std::uint64_t seed, const GradCheckOptions& options) {
  const OpAttrs& attrs = c.attrs;
  const OpKind kind = c.kind;
  std::shared_ptr<Tensor> probe, baseline;
  TensorProgram f = [&, seed](Tape& tape, std::span<const Var> in) {
    const Var out = apply(kind, in, attrs);
    if (!probe) {
      Rng r(seed);
      probe = std::make_shared<Tensor>(randn(out.shape(), r));
      baseline = std::make_shared<Tensor>(out.value());
    }
    const double count = static_cast<double>(out.value().numel());
    const Var centered = sub(out, tape.constant(*baseline));
    return mul_scalar(mean(mul(centered, tape.constant(*probe))), count);
  };
  GradCheckReport report = grad_check(f, c.inputs, options);
  if (kind == OpKind::kGradReverse) {
    // The reversal node is not the derivative of its forward map; its
    // contract is analytic = -lambda * (finite difference of the identity).
    report.max_rel_error = 0.0;
    for (GradCheckEntry& e : report.entries) {
      e.numeric *= -attrs.scalar;
      const double denom =
          std::max({std::abs(e.analytic), std::abs(e.numeric), options.abs_floor});
      e.rel_error = std::abs(e.analytic - e.numeric) / denom;
      report.max_rel_error = std::max(report.max_rel_error, e.rel_error);
    }
  }
  return report;
}

}  // namespace ndal::test
