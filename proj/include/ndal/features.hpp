// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

// Log-mel filterbank features, cepstral mean subtraction, SpecAugment.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ndal/audio.hpp"
#include "ndal/rng.hpp"

namespace ndal {

inline constexpr std::size_t kNumMels = 80;
inline constexpr std::size_t kWindowLength = 400;
inline constexpr std::size_t kHopLength = 160;
inline constexpr std::size_t kFftSize = 512;
inline constexpr double kMelLowHz = 20.0;
inline constexpr double kMelHighHz = 7600.0;
inline constexpr double kLogFloor = 1e-6;

/// kNumMels rows by `frames` columns, row-major.
struct FeatureMatrix {
  std::size_t frames = 0;
  std::vector<float> data;

  FeatureMatrix() = default;
  explicit FeatureMatrix(std::size_t t) : frames(t), data(kNumMels * t, 0.0f) {}

  float& at(std::size_t mel, std::size_t t) { return data[mel * frames + t]; }
  float at(std::size_t mel, std::size_t t) const { return data[mel * frames + t]; }
  std::span<const float> row(std::size_t mel) const {
    return {data.data() + mel * frames, frames};
  }
};

/// 1 + floor((samples - 400) / 160). Throws TooShort below one window.
std::size_t num_frames(std::size_t samples);

double hz_to_mel(double hz);
double mel_to_hz(double mel);
/// Center frequency in Hz of each triangular filter.
std::vector<double> mel_center_frequencies();

/// Hann-windowed 512-point power spectrum, 80 triangular mel filters over
/// 20-7600 Hz, natural log of (energy + 1e-6). Deterministic.
FeatureMatrix log_mel(const Utterance& u);

/// Subtracts each row's mean over time.
FeatureMatrix cms(FeatureMatrix f);

struct SpecAugmentOptions {
  std::size_t max_freq_width = 10;
  std::size_t max_time_width = 5;
};

/// Masks drawn by spec_augment; exposed so tests can replay them.
struct SpecAugmentMasks {
  std::size_t freq_offset = 0;
  std::size_t freq_width = 0;
  std::size_t time_offset = 0;
  std::size_t time_width = 0;
};

SpecAugmentMasks draw_spec_augment(std::size_t frames, Rng& rng,
                                   const SpecAugmentOptions& options = {});
void apply_spec_augment(FeatureMatrix& f, const SpecAugmentMasks& masks);

/// One frequency mask and one time mask set to zero.
FeatureMatrix spec_augment(FeatureMatrix f, Rng& rng, const SpecAugmentOptions& options = {});

/// log_mel followed by cms.
FeatureMatrix extract_features(const Utterance& u);

}  // namespace ndal
