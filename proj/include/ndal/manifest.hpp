// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

// Tab-separated dataset and noise manifests, and the trial list format.
//
//   dataset:  utt_id <TAB> speaker_id <TAB> wav_path
//   noise:    noise_id <TAB> category <TAB> split <TAB> wav_path
//   trials:   label(0|1) <SP> enroll_utt_id <SP> test_utt_id
//
// Relative wav paths are resolved against the manifest's directory.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace ndal {

struct ManifestEntry {
  std::string utt_id;
  std::string speaker_id;
  std::filesystem::path path;
};

struct Manifest {
  std::vector<ManifestEntry> entries;

  /// Dense labels 0..S-1 assigned in sorted speaker-id order.
  std::map<std::string, std::int64_t> speaker_labels() const;
  const ManifestEntry& find(const std::string& utt_id) const;
  std::size_t index_of(const std::string& utt_id) const;
};

Manifest read_manifest(const std::filesystem::path& path);
/// Paths are written relative to the manifest's directory when possible.
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

enum class NoiseSplit { kTrain, kTestSeen, kTestUnseen };
std::string_view to_string(NoiseSplit split);
NoiseSplit parse_noise_split(std::string_view text);
inline bool is_test_split(NoiseSplit s) { return s != NoiseSplit::kTrain; }

struct NoiseManifestEntry {
  std::string noise_id;
  std::string category;
  NoiseSplit split = NoiseSplit::kTrain;
  std::filesystem::path path;
};

std::vector<NoiseManifestEntry> read_noise_manifest(const std::filesystem::path& path);
void write_noise_manifest(const std::filesystem::path& path,
                          const std::vector<NoiseManifestEntry>& entries);

struct Trial {
  bool target = false;
  std::string enroll;
  std::string test;
};

std::vector<Trial> read_trials(const std::filesystem::path& path);
void write_trials(const std::filesystem::path& path, const std::vector<Trial>& trials);

}  // namespace ndal
