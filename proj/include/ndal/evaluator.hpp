// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

// Whole-utterance embeddings, cosine trial scoring under clean and corrupted
// test conditions, and embedding export.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "ndal/audio.hpp"
#include "ndal/eer.hpp"
#include "ndal/manifest.hpp"
#include "ndal/model.hpp"
#include "ndal/noise_bank.hpp"

NDAL_CORE_NAMESPACE_BEGIN

/// Test condition: clean, or one noise category at one SNR.
struct Condition {
  std::string category;  // empty for clean
  double snr_db = 0.0;

  bool clean() const { return category.empty(); }
  /// "clean" or "<category>@<snr>".
  std::string label() const;
};

inline constexpr std::array<double, 5> kTableSnrs{0.0, 5.0, 10.0, 15.0, 20.0};

/// "clean" plus `category:snr,snr,...` groups separated by ';'. A category
/// without SNRs expands to 0,5,10,15,20. Throws ConfigError.
std::vector<Condition> parse_conditions(const std::string& spec);

/// clean + every category of the given splits at 0,5,10,15,20 dB.
std::vector<Condition> table_conditions(const NoiseBank& bank, std::initializer_list<NoiseSplit> splits);

/// E_s(B(cms(log_mel(u)))) in eval mode over the whole utterance.
/// Throws TooShort.
std::vector<float> extract_embedding(const NdalModel& model, const Utterance& u);

/// Mixes `u` with a test-split clip of the condition's category. Clip choice,
/// offset and SNR depend only on (seed, utt_id, condition). Throws
/// SplitViolation when the category exists only in the train split and
/// InvalidArgument when it does not exist at all.
Utterance corrupt(const Utterance& u, const std::string& utt_id, const Condition& condition,
                  const NoiseBank& bank, std::uint64_t seed);

/// Embeddings keyed by (utt_id, condition label, model hash).
class EmbeddingCache {
 public:
  using Key = std::tuple<std::string, std::string, std::uint64_t>;
  const std::vector<float>* find(const Key& key) const;
  void put(Key key, std::vector<float> embedding);
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<Key, std::vector<float>> entries_;
};

struct EvalOptions {
  /// Corrupt enrollment utterances as well as test utterances.
  bool corrupt_both_sides = false;
  std::uint64_t seed = 0;
};

struct EerRow {
  Condition condition;
  double eer = 0.0;
  double threshold = 0.0;
  std::size_t num_trials = 0;
};

/// One row per condition. Throws SplitViolation, DegenerateSet.
std::vector<EerRow> run_trials(const std::vector<Trial>& trials, const Manifest& test,
                               const NoiseBank& bank, const std::vector<Condition>& conditions,
                               const NdalModel& model, const EvalOptions& options = {},
                               EmbeddingCache* cache = nullptr);

/// CSV: condition,snr_db,eer_percent,threshold,num_trials (snr_db empty for
/// clean).
void write_eer_csv(std::ostream& out, const std::vector<EerRow>& rows);
/// Human-readable category x SNR matrix of EER percentages.
std::string format_eer_table(const std::vector<EerRow>& rows);

/// CSV with header utt_id,speaker_id,condition,e0..e{d-1}; one row per
/// utterance. Throws IoError.
void export_embeddings(const std::vector<std::string>& utt_ids, const Manifest& manifest,
                       const NoiseBank* bank, const Condition& condition, const NdalModel& model,
                       const std::filesystem::path& path, std::uint64_t seed = 0);

NDAL_CORE_NAMESPACE_END
