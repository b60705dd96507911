// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ndal/tape.hpp"

NDAL_CORE_NAMESPACE_BEGIN

struct GradCheckOptions {
  /// Central-difference step; a power of two so x +- eps is exact.
  double eps = sizeof(Real) == 8 ? 0x1p-17 : 0x1p-9;
  /// Elements whose relative error exceeds this are flagged.
  double tol = sizeof(Real) == 8 ? 1e-6 : 1e-3;
  /// Denominator floor: rel = |a - n| / max(|a|, |n|, abs_floor).
  double abs_floor = sizeof(Real) == 8 ? 1e-2 : 1.0;
  /// When nonzero, check at most this many randomly chosen elements per input.
  std::size_t max_elements_per_input = 0;
  std::uint64_t seed = 0;
};

struct GradCheckEntry {
  std::size_t input = 0;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0.0;
  double tol = 0.0;

  std::vector<GradCheckEntry> failures() const;
  bool passed() const { return max_rel_error <= tol; }
};

/// Program over leaf inputs returning a scalar.
using TensorProgram = std::function<Var(Tape&, std::span<const Var>)>;
/// Program over parameters watched inside; returns a scalar.
using ParamProgram = std::function<Var(Tape&)>;

GradCheckReport grad_check(const TensorProgram& f, std::vector<Tensor> inputs,
                           const GradCheckOptions& options = {});
GradCheckReport grad_check(const ParamProgram& f, std::span<Parameter* const> params,
                           const GradCheckOptions& options = {});

NDAL_CORE_NAMESPACE_END
