// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace ndal {

/// Training modes. kNdal is the full system; the others are the baseline and
/// the two ablations.
enum class TrainMode {
  kNdal,   // disentanglement + adversarial training
  kJoint,  // backbone + AAM head on clean and noisy data
  kWoAl,   // disentanglement only (no domain classifier)
  kWoDis,  // backbone + adversarial training (no encoders/decoder)
};

std::string_view to_string(TrainMode mode);
/// Accepts "ndal", "joint", "wo-al", "wo-dis"; throws ConfigError otherwise.
TrainMode parse_train_mode(std::string_view text);

bool has_disentanglement(TrainMode mode);
bool has_domain_classifier(TrainMode mode);

struct BackboneConfig {
  std::size_t feature_dim = 80;
  std::vector<std::size_t> channels{256, 256, 256};
  std::vector<std::size_t> kernels{5, 3, 3};
  std::vector<std::size_t> dilations{1, 2, 3};
  std::size_t embedding_dim = 192;
  std::size_t attention_hidden = 64;

  void validate() const;
};

struct DisentangleConfig {
  std::size_t hidden = 1024;
  std::size_t depth = 2;
  /// Width of the speaker-irrelevant factor. The speaker factor always has
  /// the embedding width so it can be compared with the clean embedding.
  std::size_t irrelevant_dim = 192;

  void validate() const;
};

struct AamHeadConfig {
  std::size_t num_speakers = 2;
  double scale = 30.0;
  double margin = 0.2;

  void validate() const;
};

struct DomainClassifierConfig {
  std::size_t hidden = 128;
  double grl_lambda = 1.0;
  /// Linear ramp of lambda from 0 over the first ramp_fraction of training.
  bool grl_ramp = false;
  double ramp_fraction = 0.1;

  void validate() const;
};

struct ModelConfig {
  TrainMode mode = TrainMode::kNdal;
  BackboneConfig backbone;
  DisentangleConfig disentangle;
  AamHeadConfig aam;
  DomainClassifierConfig domain;
  /// Block the gradient through the clean embedding inside the
  /// feature-robust loss.
  bool fr_stop_gradient = false;

  void validate() const;
};

}  // namespace ndal
