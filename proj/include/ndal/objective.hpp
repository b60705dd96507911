// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "ndal/losses.hpp"
#include "ndal/model.hpp"

NDAL_CORE_NAMESPACE_BEGIN

/// One paired batch: row i of `clean` and row i of `noisy` are the raw and
/// augmented copy of the same segment, both [n,80,t].
struct PairedBatch {
  Tensor clean;
  Tensor noisy;
  std::vector<std::int64_t> speakers;  // n labels
};

struct ObjectiveOptions {
  double lambda = 1.0;
  LossWeights weights;
  /// Harness toggle: skip gradient reversal in front of the domain classifier.
  bool reverse_gradient = true;
  bool training = true;
};

/// Intermediate embeddings of the last forward pass.
struct ForwardState {
  Var s_c;
  Var s_n;
  Var s_s;
  Var s_i;
  Var s_n_hat;
  Var domain_logits;
};

/// Forward pass of the training graph for the model's mode:
///   S_c = B(clean), S_n = B(noisy)          (one backbone call over 2n rows)
///   S_s = E_s(S_n), S_i = E_i(S_n), S^_n = D(S_s || S_i)
///   L_rec(S_n, S^_n), L_fr(S_c, S_s)
///   L_cls = AAM([S_c; S_s], [y; y])
///   L_adv = CE(F(GRL([S_c; S_s])), [0; 1])
/// Modes without E_s use S_n in place of S_s; modes without the
/// disentanglement or domain sub-networks drop the corresponding terms.
Objective ndal_objective(const NdalModel& model, Tape& tape, const PairedBatch& batch,
                         const ObjectiveOptions& options, ForwardState* state = nullptr);

/// Stacks equally sized [80,t] matrices (row-major float) into [n,80,t].
Tensor stack_features(std::span<const std::vector<float>> mats, std::size_t rows,
                      std::size_t cols);

NDAL_CORE_NAMESPACE_END
