// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

// Small models, random paired batches, and per-module gradient summaries.
// Header-only so it compiles against either scalar width.

#pragma once

#include <cmath>
#include <map>
#include <set>
#include <string>

#include "ndal/objective.hpp"
#include "support/op_cases.hpp"

namespace ndal::test {

inline ModelConfig tiny_config(TrainMode mode = TrainMode::kNdal, std::size_t speakers = 4) {
  ModelConfig cfg;
  cfg.mode = mode;
  cfg.backbone.channels = {12, 12};
  cfg.backbone.kernels = {3, 3};
  cfg.backbone.dilations = {1, 2};
  cfg.backbone.embedding_dim = 16;
  cfg.backbone.attention_hidden = 6;
  cfg.disentangle.hidden = 24;
  cfg.disentangle.irrelevant_dim = 16;
  cfg.aam.num_speakers = speakers;
  cfg.domain.hidden = 10;
  return cfg;
}

inline PairedBatch random_batch(std::size_t n, std::size_t t, std::size_t speakers, Rng& rng) {
  PairedBatch b;
  b.clean = randn({n, 80, t}, rng);
  b.noisy = b.clean;
  for (Real& v : b.noisy.data()) v += static_cast<Real>(0.5 * rng.normal());
  for (std::size_t i = 0; i < n; ++i) {
    b.speakers.push_back(static_cast<std::int64_t>(i % speakers));
  }
  return b;
}

/// Module owning a parameter: backbone, spk_enc, irr_enc, decoder, aam, domain.
inline std::string module_of(const std::string& name) { return name.substr(0, name.find('.')); }

/// Modules whose trainable parameters have any nonzero gradient element after
/// one backward pass of the weighted objective.
inline std::set<std::string> modules_with_gradient(NdalModel& model, const PairedBatch& batch,
                                                   const ObjectiveOptions& options) {
  Tape tape;
  model.params().zero_grad();
  const Objective obj = ndal_objective(model, tape, batch, options);
  tape.backward(obj.value);
  std::set<std::string> out;
  for (Parameter* p : model.params().trainable()) {
    for (Real g : p->grad.data()) {
      if (g != Real(0)) {
        out.insert(module_of(p->name));
        break;
      }
    }
  }
  return out;
}

/// Weights isolating one loss term: "rec", "fr", "cls" or "adv".
inline LossWeights only(const std::string& term) {
  LossWeights w{0.0, 0.0, 0.0, 0.0};
  if (term == "rec") w.rec = 1.0;
  if (term == "fr") w.fr = 1.0;
  if (term == "cls") w.cls = 1.0;
  if (term == "adv") w.adv = 1.0;
  return w;
}

/// Concatenated gradients of every parameter in `module`.
inline std::vector<double> module_gradient(NdalModel& model, const std::string& module,
                                           const PairedBatch& batch,
                                           const ObjectiveOptions& options) {
  Tape tape;
  model.params().zero_grad();
  tape.backward(ndal_objective(model, tape, batch, options).value);
  std::vector<double> out;
  for (Parameter* p : model.params().trainable()) {
    if (module_of(p->name) != module) continue;
    for (Real g : p->grad.data()) out.push_back(static_cast<double>(g));
  }
  return out;
}

}  // namespace ndal::test
