// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "ndal/tape.hpp"

NDAL_CORE_NAMESPACE_BEGIN

// Differentiable ops. Every op checks its shapes (ShapeMismatch) and rejects
// non-finite outputs (NonFinite). All reductions and softmaxes act on the last
// axis unless stated otherwise.

/// [m,k] x [k,n] -> [m,n]
Var matmul(const Var& a, const Var& b);
/// x [n,in], weight [out,in], optional bias [out] -> [n,out]
Var linear(const Var& x, const Var& weight, const Var* bias = nullptr);
/// x [n,cin,t], weight [cout,cin,k], optional bias [cout] -> [n,cout,t_out]
/// with t_out = t + 2*padding - dilation*(k-1).
Var conv1d(const Var& x, const Var& weight, const Var* bias,
           std::size_t dilation = 1, std::size_t padding = 0);

struct BatchNormState {
  Tensor* running_mean = nullptr;
  Tensor* running_var = nullptr;
  bool training = true;
  double momentum = 0.9;
  double eps = 1e-5;
};
/// Per-channel normalization of [n,c] or [n,c,t]. In training mode batch
/// statistics are used and the running estimates are updated as
/// running = momentum*running + (1-momentum)*batch (unbiased variance).
Var batchnorm1d(const Var& x, const Var& gamma, const Var& beta,
                const BatchNormState& state);

Var relu(const Var& x);
Var tanh(const Var& x);
Var sqrt(const Var& x);
Var clamp_min(const Var& x, double lo);
Var square(const Var& x);
Var mul_scalar(const Var& x, double c);

/// Elementwise with broadcasting of `b` over the leading axes of `a`
/// (b.shape must equal a suffix of a.shape).
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);

Var softmax(const Var& x);
Var log_softmax(const Var& x);
/// Row-wise x / max(||x||, 1e-12) over the last axis.
Var l2_normalize(const Var& x);

/// Mean of all elements -> scalar.
Var mean(const Var& x);
/// Sum over the last axis, dropping it.
Var sum_last(const Var& x);
Var concat(std::span<const Var> xs, std::size_t axis);
Var concat(std::initializer_list<Var> xs, std::size_t axis);
/// Rows [begin, end) along axis 0.
Var slice_rows(const Var& x, std::size_t begin, std::size_t end);
/// x [n,c] -> [n] with out[i] = x[i, labels[i]].
Var pick(const Var& x, std::span<const std::int64_t> labels);

/// Additive angular margin on a cosine matrix [n,c]: the target column becomes
/// scale*cos(theta+margin), the others scale*cos(theta). When
/// cos(theta) <= cos(pi-margin) the target falls back to
/// scale*(cos(theta) - margin*sin(pi-margin)).
Var angular_margin(const Var& cosine, std::span<const std::int64_t> labels,
                   double margin, double scale);

/// Identity forward; backward replaces the upstream gradient g by -lambda*g.
Var grad_reverse(const Var& x, double lambda);
/// Identity forward, no gradient.
Var detach(const Var& x);

enum class OpKind {
  kMatmul,
  kLinear,
  kConv1d,
  kRelu,
  kTanh,
  kSqrt,
  kClampMin,
  kBatchnorm1d,
  kSoftmax,
  kLogSoftmax,
  kMean,
  kSumLast,
  kConcat,
  kSliceRows,
  kL2Normalize,
  kAdd,
  kSub,
  kMul,
  kMulScalar,
  kSquare,
  kPick,
  kAngularMargin,
  kGradReverse,
};

std::string_view to_string(OpKind kind);
const std::vector<OpKind>& all_op_kinds();

struct OpAttrs {
  std::size_t dilation = 1;
  std::size_t padding = 0;
  std::size_t axis = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
  double scalar = 1.0;
  double margin = 0.2;
  double scale = 30.0;
  std::vector<std::int64_t> labels;
  BatchNormState batchnorm;
};

/// Generic dispatch over the op set. Optional operands (biases) are taken
/// from `inputs` when present.
Var apply(OpKind kind, std::span<const Var> inputs, const OpAttrs& attrs = {});

NDAL_CORE_NAMESPACE_END
