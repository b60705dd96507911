// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

// Deterministic synthetic speech corpus: source-filter "speakers" with stable
// pitch and vocal-tract resonances, generated noise categories, manifests and
// a verification trial list.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ndal/rng.hpp"

namespace ndal {

struct SynthSpec {
  std::size_t num_speakers = 20;
  std::size_t utts_per_speaker = 30;
  /// Utterances per speaker held out for the test manifest and trials.
  std::size_t test_utts_per_speaker = 15;
  double min_seconds = 3.0;
  double max_seconds = 6.0;
  double f0_min_hz = 90.0;
  double f0_spacing_hz = 8.0;
  std::size_t noise_clips_train = 4;
  std::size_t noise_clips_test = 2;
  double noise_seconds = 10.0;
  std::size_t max_trials = 5000;

  void validate() const;
  /// `key = value` text with the field names above. Unknown keys throw
  /// ConfigError.
  static SynthSpec parse(const std::string& text);
};

struct SpeakerSignature {
  double f0_hz = 120.0;
  /// Neutral-vowel resonances and bandwidths in Hz.
  std::array<double, 4> formants_hz{};
  std::array<double, 4> bandwidths_hz{};
  /// One-pole glottal tilt coefficient in (0, 1).
  double tilt = 0.95;
  /// Relative pitch excursion of intonation.
  double intonation = 0.08;
  double speaking_rate = 1.0;
};

/// Pairwise-distinct signatures: F0 values are drawn without replacement from
/// a grid with `f0_spacing_hz` steps.
std::vector<SpeakerSignature> make_speakers(const SynthSpec& spec, std::uint64_t seed);

/// Syllable sequence of the given length in seconds, peak-limited to 0.9.
std::vector<float> synthesize_speech(const SpeakerSignature& speaker, double seconds, Rng& rng);

inline constexpr std::array<const char*, 3> kSeenNoiseCategories{"white", "pink", "babble"};
inline constexpr std::array<const char*, 2> kUnseenNoiseCategories{"brown", "machine"};

/// white | pink | babble | brown | machine. Throws InvalidArgument otherwise.
std::vector<float> synthesize_noise(const std::string& category, double seconds, Rng& rng);

struct CorpusLayout {
  std::filesystem::path root;
  std::filesystem::path train_manifest;
  std::filesystem::path test_manifest;
  std::filesystem::path noise_manifest;
  std::filesystem::path trials;

  static CorpusLayout under(const std::filesystem::path& root);
};

/// Writes WAVs, train/test manifests, the noise manifest (train, test-seen,
/// test-unseen splits) and the trial list under `out_dir`. Byte-identical for
/// equal (spec, seed). Throws IoError.
CorpusLayout generate_corpus(const SynthSpec& spec, std::uint64_t seed,
                             const std::filesystem::path& out_dir);

/// Sanity oracle: EER of cosine scoring on per-utterance mean log-mel vectors
/// (no normalization, no model) over the corpus trial list.
double baseline_eer(const CorpusLayout& corpus);

}  // namespace ndal
