// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ndal/model.hpp"

#include "ndal/error.hpp"

NDAL_CORE_NAMESPACE_BEGIN

TdnnBackbone::TdnnBackbone(ParameterStore& store, const BackboneConfig& config,
                           std::uint64_t seed) {
  Rng rng(derive_seed(seed, "backbone"));
  std::size_t in = config.feature_dim;
  for (std::size_t i = 0; i < config.channels.size(); ++i) {
    const std::string name = "backbone.tdnn" + std::to_string(i);
    convs.emplace_back(store, name, in, config.channels[i], config.kernels[i],
                       config.dilations[i], rng);
    norms.emplace_back(store, "backbone.bn" + std::to_string(i), config.channels[i]);
    in = config.channels[i];
  }
  pool = AttentiveStatsPool(store, "backbone.pool", in, config.attention_hidden, rng);
  projection = Linear(store, "backbone.proj", 2 * in, config.embedding_dim, rng);
}

Var TdnnBackbone::operator()(Tape& tape, const Var& features, bool training) const {
  Var h = features;
  for (std::size_t i = 0; i < convs.size(); ++i) {
    h = norms[i](tape, relu(convs[i](tape, h)), training);
  }
  return projection(tape, pool(tape, h));
}

NdalModel::NdalModel(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  backbone_ = TdnnBackbone(store_, config_.backbone, seed);
  const std::size_t emb = config_.backbone.embedding_dim;
  const DisentangleConfig& dis = config_.disentangle;
  if (has_disentanglement(config_.mode)) {
    Rng spk(derive_seed(seed, "spk_enc"));
    speaker_encoder_.emplace(store_, "spk_enc", emb, dis.hidden, emb, spk);
    Rng irr(derive_seed(seed, "irr_enc"));
    irrelevant_encoder_.emplace(store_, "irr_enc", emb, dis.hidden, dis.irrelevant_dim, irr);
    Rng dec(derive_seed(seed, "decoder"));
    decoder_.emplace(store_, "decoder", emb + dis.irrelevant_dim, dis.hidden, emb, dec);
  }
  Rng aam(derive_seed(seed, "aam"));
  aam_weight_ = &store_.add("aam.weight",
                            kaiming_uniform({config_.aam.num_speakers, emb}, emb, aam));
  if (ndal::has_domain_classifier(config_.mode)) {
    Rng dom(derive_seed(seed, "domain"));
    domain_.emplace(store_, "domain", emb, config_.domain.hidden, 2, dom);
  }
}

Var NdalModel::backbone_forward(Tape& tape, const Tensor& features, bool training) const {
  return backbone_forward(tape, tape.constant(features), training);
}

Var NdalModel::backbone_forward(Tape& tape, const Var& features, bool training) const {
  const Shape& s = features.shape();
  if (s.size() != 3 || s[1] != config_.backbone.feature_dim) {
    fail(ErrorCode::kShapeMismatch,
         "backbone expects [n," + std::to_string(config_.backbone.feature_dim) +
             ",t], got " + shape_str(s));
  }
  return backbone_(tape, features, training);
}

Var NdalModel::encode_speaker(Tape& tape, const Var& s) const {
  if (!speaker_encoder_) fail(ErrorCode::kInvalidArgument, "mode has no speaker encoder");
  return (*speaker_encoder_)(tape, s);
}

Var NdalModel::encode_irrelevant(Tape& tape, const Var& s) const {
  if (!irrelevant_encoder_) {
    fail(ErrorCode::kInvalidArgument, "mode has no speaker-irrelevant encoder");
  }
  return (*irrelevant_encoder_)(tape, s);
}

Var NdalModel::reconstruct(Tape& tape, const Var& s_s, const Var& s_i) const {
  if (!decoder_) fail(ErrorCode::kInvalidArgument, "mode has no decoder");
  if (s_s.shape().empty() || s_i.shape().empty() || s_s.shape()[0] != s_i.shape()[0]) {
    fail(ErrorCode::kShapeMismatch, "reconstruct: batch sizes differ " +
                                        shape_str(s_s.shape()) + " vs " +
                                        shape_str(s_i.shape()));
  }
  return (*decoder_)(tape, concat({s_s, s_i}, 1));
}

Var NdalModel::speaker_cosine(Tape& tape, const Var& embeddings) const {
  return linear(l2_normalize(embeddings), l2_normalize(tape.watch(*aam_weight_)));
}

Var NdalModel::classify_domain(Tape& tape, const Var& s_a, double lambda,
                               bool reverse) const {
  if (!domain_) fail(ErrorCode::kInvalidArgument, "mode has no domain classifier");
  if (!(lambda > 0.0)) {
    fail(ErrorCode::kNonPositiveLambda, "classify_domain: lambda must be > 0");
  }
  const Var in = reverse ? grad_reverse(s_a, lambda) : s_a;
  return (*domain_)(tape, in);
}

Var NdalModel::embed(Tape& tape, const Tensor& features) const {
  const Var s = backbone_forward(tape, features, false);
  return speaker_encoder_ ? encode_speaker(tape, s) : s;
}

NDAL_CORE_NAMESPACE_END
