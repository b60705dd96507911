// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ndal/losses.hpp"

#include <cmath>

#include "ndal/error.hpp"

NDAL_CORE_NAMESPACE_BEGIN

namespace {

Var mse(const Var& a, const Var& b, const char* name) {
  if (a.shape() != b.shape()) {
    fail(ErrorCode::kShapeMismatch, std::string(name) + ": " + shape_str(a.shape()) +
                                        " vs " + shape_str(b.shape()));
  }
  return mean(square(sub(a, b)));
}

Var cross_entropy(const Var& logits, std::span<const std::int64_t> labels) {
  return mul_scalar(mean(pick(log_softmax(logits), labels)), -1.0);
}

}  // namespace

Var loss_rec(const Var& s_n, const Var& s_n_hat) { return mse(s_n, s_n_hat, "loss_rec"); }

Var loss_fr(const Var& s_c, const Var& s_s, bool stop_gradient_clean) {
  return mse(stop_gradient_clean ? detach(s_c) : s_c, s_s, "loss_fr");
}

Var loss_aam(const Var& cosine, std::span<const std::int64_t> labels, double scale,
             double margin) {
  return cross_entropy(angular_margin(cosine, labels, margin, scale), labels);
}

Var loss_adv(const Var& logits, std::span<const std::int64_t> aug_labels) {
  if (logits.value().rank() != 2 || logits.shape()[1] != 2) {
    fail(ErrorCode::kShapeMismatch, "loss_adv expects [n,2] logits, got " +
                                        shape_str(logits.shape()));
  }
  return cross_entropy(logits, aug_labels);
}

Objective loss_total(Tape& tape, const LossTerms& terms, double lambda,
                     const LossWeights& weights) {
  Objective out;
  out.parts.lambda = lambda;
  std::vector<Var> weighted;
  auto take = [&](const std::optional<Var>& term, double weight, double& slot,
                  const char* name) {
    if (!term) return;
    const double v = term->value().item();
    if (!std::isfinite(v)) fail(ErrorCode::kNonFinite, std::string(name) + " is not finite");
    slot = v;
    if (weight != 0.0) weighted.push_back(weight == 1.0 ? *term : mul_scalar(*term, weight));
  };
  take(terms.rec, weights.rec, out.parts.l_rec, "l_rec");
  take(terms.fr, weights.fr, out.parts.l_fr, "l_fr");
  take(terms.cls, weights.cls, out.parts.l_cls, "l_cls");
  take(terms.adv, weights.adv, out.parts.l_adv, "l_adv");
  out.parts.l_total =
      out.parts.l_rec + out.parts.l_fr + out.parts.l_cls - lambda * out.parts.l_adv;

  if (weighted.empty()) {
    out.value = tape.constant(Tensor::scalar(Real(0)));
    return out;
  }
  Var sum = weighted[0];
  for (std::size_t i = 1; i < weighted.size(); ++i) sum = add(sum, weighted[i]);
  out.value = sum;
  return out;
}

NDAL_CORE_NAMESPACE_END
