// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ndal/layers.hpp"
#include "ndal/model_config.hpp"

NDAL_CORE_NAMESPACE_BEGIN

/// Dilated TDNN: per layer conv1d -> relu -> batchnorm, then attentive
/// statistics pooling and a linear projection to the embedding.
class TdnnBackbone {
 public:
  TdnnBackbone() = default;
  TdnnBackbone(ParameterStore& store, const BackboneConfig& config, std::uint64_t seed);
  /// features [n,feature_dim,t] -> embeddings [n,embedding_dim]
  Var operator()(Tape& tape, const Var& features, bool training) const;

  std::vector<Conv1d> convs;
  std::vector<BatchNorm1d> norms;
  AttentiveStatsPool pool;
  Linear projection;
};

/// The full network: backbone B, speaker encoder E_s, speaker-irrelevant
/// encoder E_i, decoder D, AAM classifier head and domain classifier F.
/// Which sub-networks exist depends on the training mode; their parameters
/// are registered under the prefixes backbone., spk_enc., irr_enc.,
/// decoder., aam. and domain.
class NdalModel {
 public:
  NdalModel(const ModelConfig& config, std::uint64_t seed);

  NdalModel(const NdalModel&) = delete;
  NdalModel& operator=(const NdalModel&) = delete;

  const ModelConfig& config() const { return config_; }
  ParameterStore& params() { return store_; }
  const ParameterStore& params() const { return store_; }

  bool has_speaker_encoder() const { return speaker_encoder_.has_value(); }
  bool has_irrelevant_encoder() const { return irrelevant_encoder_.has_value(); }
  bool has_domain_classifier() const { return domain_.has_value(); }

  /// [n,80,t] -> [n,embedding_dim]. Training mode updates batchnorm running
  /// statistics.
  Var backbone_forward(Tape& tape, const Tensor& features, bool training) const;
  Var backbone_forward(Tape& tape, const Var& features, bool training) const;
  /// E_s: [n,emb] -> [n,emb]
  Var encode_speaker(Tape& tape, const Var& s) const;
  /// E_i: [n,emb] -> [n,irrelevant_dim]
  Var encode_irrelevant(Tape& tape, const Var& s) const;
  /// D(S_s || S_i) -> [n,emb]
  Var reconstruct(Tape& tape, const Var& s_s, const Var& s_i) const;
  /// Cosine between each normalized embedding and each normalized class row,
  /// [n,num_speakers].
  Var speaker_cosine(Tape& tape, const Var& embeddings) const;
  /// F(GRL(s_a, lambda)) -> logits [n,2]. With reverse=false the gradient
  /// reversal is skipped (test harness toggle).
  Var classify_domain(Tape& tape, const Var& s_a, double lambda, bool reverse = true) const;

  /// Deployed embedding in eval mode: E_s(B(x)) when a speaker encoder
  /// exists, otherwise B(x).
  Var embed(Tape& tape, const Tensor& features) const;

 private:
  ModelConfig config_;
  ParameterStore store_;
  TdnnBackbone backbone_;
  std::optional<Mlp> speaker_encoder_;
  std::optional<Mlp> irrelevant_encoder_;
  std::optional<Mlp> decoder_;
  Parameter* aam_weight_ = nullptr;
  std::optional<Mlp> domain_;
};

NDAL_CORE_NAMESPACE_END
