// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

// Mono 16 kHz audio: WAV I/O, segment cropping, and SNR-controlled mixing.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ndal/rng.hpp"

namespace ndal {

inline constexpr int kSampleRate = 16000;

enum class AugLabel : std::int64_t { kRaw = 0, kAugmented = 1 };

struct Utterance {
  std::vector<float> samples;
  int sample_rate = kSampleRate;
  /// Dense speaker label, -1 when unknown.
  std::int64_t speaker = -1;
  AugLabel aug_label = AugLabel::kRaw;
  std::string source_path;

  double seconds() const { return static_cast<double>(samples.size()) / sample_rate; }
};

/// Reads 16-bit PCM WAV at 16 kHz. Multi-channel input is averaged to mono.
/// Samples are scaled by 1/32768.
/// Throws UnsupportedFormat, UnsupportedRate, CorruptFile, IoError.
Utterance load_wav(const std::filesystem::path& path);

/// Writes 16-bit mono PCM. Samples are clipped to [-1, 1) and rounded.
void write_wav(const std::filesystem::path& path, std::span<const float> samples,
               int sample_rate = kSampleRate);

/// Root mean square; 0 for empty input.
double rms(std::span<const float> x);

/// Crops `seconds` of audio at a uniform random start. Inputs shorter than the
/// target are repeated from the start until long enough (no RNG draw).
Utterance crop_segment(const Utterance& u, double seconds, Rng& rng);

struct MixResult {
  Utterance mixture;
  /// Gain applied to the fitted noise before any peak normalization.
  double noise_gain = 0.0;
  /// Set when |mixture| exceeded 1 and the whole mixture was rescaled.
  bool peak_normalized = false;
  double peak_scale = 1.0;
  /// Set when the clean input had zero RMS; the mixture is the clean input.
  bool silent_clean = false;
};

/// Fits `noise` to the clean length by looping from `noise_offset` (or
/// truncating), scales it to the requested SNR measured over the fitted
/// segment, and adds it. Throws SilentNoise and InvalidArgument.
MixResult mix_at_snr(const Utterance& clean, std::span<const float> noise, double snr_db,
                     std::size_t noise_offset = 0);

/// Noise segment as mixed: `noise` looped from `offset` to `length` samples.
std::vector<float> fit_noise(std::span<const float> noise, std::size_t length,
                             std::size_t offset = 0);

/// 20·log10(rms(signal) / rms(noise)).
double measured_snr_db(std::span<const float> signal, std::span<const float> noise);

}  // namespace ndal
