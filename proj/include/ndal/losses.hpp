// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "ndal/ops.hpp"

NDAL_CORE_NAMESPACE_BEGIN

/// Reconstruction loss: mean squared error per element, i.e. averaged over
/// the batch and the embedding dimensions.
Var loss_rec(const Var& s_n, const Var& s_n_hat);

/// Feature-robust loss between the clean embedding and the speaker factor of
/// the noisy embedding. Same form as loss_rec. With stop_gradient_clean the
/// clean side is treated as a constant.
Var loss_fr(const Var& s_c, const Var& s_s, bool stop_gradient_clean = false);

/// AAM-Softmax cross-entropy averaged over rows, from a cosine matrix
/// [n,num_speakers].
Var loss_aam(const Var& cosine, std::span<const std::int64_t> labels, double scale,
             double margin);

/// Softmax cross-entropy of the domain logits [n,2] against raw(0) /
/// augmented(1) labels, averaged over rows.
Var loss_adv(const Var& logits, std::span<const std::int64_t> aug_labels);

struct LossBreakdown {
  double l_rec = 0.0;
  double l_fr = 0.0;
  double l_cls = 0.0;
  double l_adv = 0.0;
  /// Reported with the joint-objective sign convention:
  /// l_rec + l_fr + l_cls - lambda*l_adv.
  double l_total = 0.0;
  double lambda = 0.0;
};

struct LossTerms {
  std::optional<Var> rec;
  std::optional<Var> fr;
  std::optional<Var> cls;
  std::optional<Var> adv;
};

struct LossWeights {
  double rec = 1.0;
  double fr = 1.0;
  double cls = 1.0;
  double adv = 1.0;
};

struct Objective {
  /// Scalar that is backpropagated: w_rec*l_rec + w_fr*l_fr + w_cls*l_cls +
  /// w_adv*l_adv. The -lambda factor on everything upstream of the domain
  /// classifier comes from the gradient reversal node.
  Var value;
  LossBreakdown parts;
};

/// Combines the present terms. Throws NonFinite when any term is not finite.
Objective loss_total(Tape& tape, const LossTerms& terms, double lambda,
                     const LossWeights& weights = {});

NDAL_CORE_NAMESPACE_END
