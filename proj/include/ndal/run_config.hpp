// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

// Flat `key = value` run configuration shared by every CLI command.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ndal/model_config.hpp"

namespace ndal {

/// Parses `key = value` lines. Blank lines and `#` comments (whole-line or
/// trailing) are skipped. Throws ConfigError on malformed lines and duplicate
/// keys.
std::map<std::string, std::string> parse_key_values(const std::string& text);

/// Scalar value parsers; `key` only labels the ConfigError message.
std::uint64_t config_count(const std::string& key, const std::string& value);
double config_real(const std::string& key, const std::string& value);

struct RunConfig {
  std::uint64_t seed = 1;

  // Data. Relative paths resolve against the config file's directory.
  std::filesystem::path train_manifest;
  std::filesystem::path test_manifest;
  std::filesystem::path noise_manifest;
  std::filesystem::path trials;

  // Batches.
  std::size_t speakers_per_batch = 16;
  double segment_seconds = 3.0;
  double snr_min_db = 0.0;
  double snr_max_db = 20.0;
  bool spec_augment = true;
  std::size_t freq_mask_max = 10;
  std::size_t time_mask_max = 5;

  // Model.
  TrainMode mode = TrainMode::kNdal;
  std::vector<std::size_t> channels{256, 256, 256};
  std::vector<std::size_t> kernels{5, 3, 3};
  std::vector<std::size_t> dilations{1, 2, 3};
  std::size_t embedding_dim = 192;
  std::size_t attention_hidden = 64;
  std::size_t encoder_hidden = 1024;
  std::size_t irrelevant_dim = 192;
  double aam_scale = 30.0;
  double aam_margin = 0.2;
  std::size_t domain_hidden = 128;
  double grl_lambda = 1.0;
  bool grl_ramp = false;
  double grl_ramp_fraction = 0.1;
  bool fr_stop_gradient = false;

  // Optimization.
  std::string optimizer = "adam";
  double lr = 1e-3;
  double lr_decay = 0.97;
  double weight_decay = 2e-5;
  std::size_t epochs = 50;
  /// Hard cap on optimizer steps; 0 means epochs * steps_per_epoch.
  std::size_t max_steps = 0;
  /// Checkpoint period in steps; 0 writes only the final checkpoint.
  std::size_t checkpoint_every = 0;
  std::size_t log_every = 10;

  // Evaluation.
  bool corrupt_both_sides = false;

  /// Applies `key = value` overrides. Unknown keys and unparsable values
  /// throw ConfigError.
  void apply(const std::map<std::string, std::string>& values,
             const std::filesystem::path& base_dir = {});
  /// Every key in a fixed order; parse(to_text()) reproduces the config.
  std::string to_text() const;
  void validate() const;

  ModelConfig model_config(std::size_t num_speakers) const;

  static RunConfig load(const std::filesystem::path& path);
  static RunConfig parse(const std::string& text, const std::filesystem::path& base_dir = {});
};

}  // namespace ndal
