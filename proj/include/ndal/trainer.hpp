// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

// Paired clean/noisy batches, the training step, schedules and checkpoints.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "ndal/audio.hpp"
#include "ndal/features.hpp"
#include "ndal/manifest.hpp"
#include "ndal/noise_bank.hpp"
#include "ndal/objective.hpp"
#include "ndal/optim.hpp"
#include "ndal/run_config.hpp"

NDAL_CORE_NAMESPACE_BEGIN

struct BatchSpec {
  std::size_t speakers_per_batch = 16;
  double segment_seconds = 3.0;
  double snr_min_db = 0.0;
  double snr_max_db = 20.0;
  bool spec_augment = true;
  SpecAugmentOptions masks;

  static BatchSpec from(const RunConfig& config);
};

/// Training utterances held in memory, grouped by dense speaker label.
class TrainingData {
 public:
  explicit TrainingData(const Manifest& manifest);

  std::size_t num_speakers() const { return by_speaker_.size(); }
  std::size_t num_utterances() const { return utterances_.size(); }
  const Utterance& utterance(std::size_t i) const { return utterances_[i]; }
  const std::string& utt_id(std::size_t i) const { return ids_[i]; }
  const std::vector<std::size_t>& of_speaker(std::size_t label) const { return by_speaker_[label]; }

 private:
  std::vector<Utterance> utterances_;
  std::vector<std::string> ids_;
  std::vector<std::vector<std::size_t>> by_speaker_;
};

struct FeatureBatch {
  PairedBatch pair;
  /// Domain labels of the two halves: clean rows 0, noisy rows 1.
  std::vector<std::int64_t> clean_aug;
  std::vector<std::int64_t> noisy_aug;
  std::vector<std::string> utt_ids;
  std::vector<std::string> noise_ids;
  std::vector<double> snr_db;
};

/// Draws speakers_per_batch distinct speakers, one utterance each, a shared
/// crop for the clean segment and its noisy twin (train-split noise, uniform
/// category, uniform SNR), then log-mel, mean normalization and independent
/// SpecAugment masks on both copies. Throws InsufficientSpeakers.
FeatureBatch build_batch(const TrainingData& data, const NoiseBank& noise, const BatchSpec& spec,
                         Rng& rng);

/// lr * decay^epoch.
double lr_at_epoch(std::size_t epoch, double lr, double decay);

/// Constant lambda, or a linear ramp over the first ramp_fraction of training
/// that starts at lambda/ramp_steps (never 0).
double lambda_at_step(std::uint64_t step, std::uint64_t total_steps, const DomainClassifierConfig& cfg);

/// One forward, one backward and one optimizer update. Throws NonFiniteLoss
/// (model untouched) when any loss term is not finite.
LossBreakdown train_step(NdalModel& model, Optimizer& optimizer, const PairedBatch& batch,
                         const ObjectiveOptions& options);

OptimizerOptions optimizer_options(const RunConfig& config);

/// CSV: step,l_rec,l_fr,l_cls,l_adv,l_total,lambda,lr
void write_loss_header(std::ostream& out);
void write_loss_row(std::ostream& out, std::uint64_t step, const LossBreakdown& parts, double lr);

/// FNV-1a over every parameter name and value, buffers included.
std::uint64_t model_hash(const NdalModel& model);

/// Binary checkpoint. Layout (little-endian):
///   "NDALCKPT" | u32 version | u32 scalar bytes | u64 step | u64 seed |
///   u64 num_speakers | u64 optimizer steps | str config |
///   u64 n | n x (str name | u8 trainable | tensor) |
///   u64 m | m x (str name | tensor first | tensor second) | u64 fnv1a(all preceding bytes)
/// where str = u64 length + bytes and tensor = u64 rank + rank x u64 dims + raw scalars.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  RunConfig config;
  std::size_t num_speakers = 0;
  std::uint64_t step = 0;
  std::unique_ptr<NdalModel> model;
  Optimizer optimizer;
};

/// Written to a temporary sibling and renamed into place. Throws IoError.
void save_checkpoint(const std::filesystem::path& path, const RunConfig& config,
                     const NdalModel& model, const Optimizer& optimizer, std::uint64_t step);
/// Throws IoError (unreadable, truncated, checksum) and VersionMismatch (magic,
/// version or scalar width).
Checkpoint load_checkpoint(const std::filesystem::path& path);

class Trainer {
 public:
  /// Builds a freshly initialized model from the config; the train manifest
  /// fixes the number of speaker classes.
  Trainer(RunConfig config, std::shared_ptr<const TrainingData> data,
          std::shared_ptr<const NoiseBank> noise);

  /// Continues from a checkpoint with the configuration stored in it.
  static Trainer resume(const std::filesystem::path& checkpoint,
                        std::shared_ptr<const TrainingData> data,
                        std::shared_ptr<const NoiseBank> noise);

  std::size_t steps_per_epoch() const;
  std::uint64_t total_steps() const;
  std::uint64_t step() const { return step_; }
  bool done() const { return step_ >= total_steps(); }

  /// Batch for `step`; a pure function of (seed, step).
  FeatureBatch batch_for(std::uint64_t step) const;
  /// Runs the next step and advances the counter.
  LossBreakdown train_one();

  struct Hooks {
    std::ostream* loss_csv = nullptr;
    /// Called after every step with the step count just completed.
    std::function<void(std::uint64_t, const LossBreakdown&)> on_step;
  };
  /// Trains until done() or `max_more` further steps.
  void run(const Hooks& hooks, std::uint64_t max_more = UINT64_MAX);

  void save(const std::filesystem::path& path) const;

  const RunConfig& config() const { return config_; }
  NdalModel& model() { return *model_; }
  const NdalModel& model() const { return *model_; }
  Optimizer& optimizer() { return optimizer_; }
  double current_lr() const;
  double current_lambda() const;

 private:
  Trainer(RunConfig config, std::shared_ptr<const TrainingData> data,
          std::shared_ptr<const NoiseBank> noise, Checkpoint* from);

  RunConfig config_;
  std::shared_ptr<const TrainingData> data_;
  std::shared_ptr<const NoiseBank> noise_;
  BatchSpec batch_spec_;
  std::unique_ptr<NdalModel> model_;
  Optimizer optimizer_;
  std::uint64_t step_ = 0;
};

NDAL_CORE_NAMESPACE_END
