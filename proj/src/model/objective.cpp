// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ndal/objective.hpp"

#include <algorithm>

#include "ndal/error.hpp"

NDAL_CORE_NAMESPACE_BEGIN

Tensor stack_features(std::span<const std::vector<float>> mats, std::size_t rows,
                      std::size_t cols) {
  Tensor out({mats.size(), rows, cols});
  for (std::size_t i = 0; i < mats.size(); ++i) {
    if (mats[i].size() != rows * cols) {
      fail(ErrorCode::kShapeMismatch, "stack_features: matrix " + std::to_string(i) +
                                          " has " + std::to_string(mats[i].size()) +
                                          " values, expected " +
                                          std::to_string(rows * cols));
    }
    std::transform(mats[i].begin(), mats[i].end(), out.ptr() + i * rows * cols,
                   [](float v) { return static_cast<Real>(v); });
  }
  return out;
}

Objective ndal_objective(const NdalModel& model, Tape& tape, const PairedBatch& batch,
                         const ObjectiveOptions& options, ForwardState* state) {
  const Shape& cs = batch.clean.shape();
  if (cs.size() != 3 || batch.noisy.shape() != cs) {
    fail(ErrorCode::kShapeMismatch, "paired batch shapes " + shape_str(cs) + " vs " +
                                        shape_str(batch.noisy.shape()));
  }
  const std::size_t n = cs[0];
  if (batch.speakers.size() != n) {
    fail(ErrorCode::kShapeMismatch, "paired batch has " + std::to_string(n) + " rows but " +
                                        std::to_string(batch.speakers.size()) + " labels");
  }

  const Var both = concat({tape.constant(batch.clean), tape.constant(batch.noisy)}, 0);
  const Var embeddings = model.backbone_forward(tape, both, options.training);
  ForwardState fs;
  fs.s_c = slice_rows(embeddings, 0, n);
  fs.s_n = slice_rows(embeddings, n, 2 * n);

  LossTerms terms;
  if (model.has_speaker_encoder()) {
    fs.s_s = model.encode_speaker(tape, fs.s_n);
    fs.s_i = model.encode_irrelevant(tape, fs.s_n);
    fs.s_n_hat = model.reconstruct(tape, fs.s_s, fs.s_i);
    terms.rec = loss_rec(fs.s_n, fs.s_n_hat);
    terms.fr = loss_fr(fs.s_c, fs.s_s, model.config().fr_stop_gradient);
  } else {
    fs.s_s = fs.s_n;
  }

  std::vector<std::int64_t> labels(batch.speakers);
  labels.insert(labels.end(), batch.speakers.begin(), batch.speakers.end());
  const Var s_a = concat({fs.s_c, fs.s_s}, 0);
  const AamHeadConfig& aam = model.config().aam;
  terms.cls = loss_aam(model.speaker_cosine(tape, s_a), labels, aam.scale, aam.margin);

  if (model.has_domain_classifier()) {
    std::vector<std::int64_t> aug(2 * n, 0);
    std::fill(aug.begin() + static_cast<std::ptrdiff_t>(n), aug.end(), 1);
    fs.domain_logits =
        model.classify_domain(tape, s_a, options.lambda, options.reverse_gradient);
    terms.adv = loss_adv(fs.domain_logits, aug);
  }

  if (state) *state = fs;
  return loss_total(tape, terms, model.has_domain_classifier() ? options.lambda : 0.0,
                    options.weights);
}

NDAL_CORE_NAMESPACE_END
