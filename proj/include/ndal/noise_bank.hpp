// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ndal/manifest.hpp"
#include "ndal/rng.hpp"

namespace ndal {

struct NoiseClip {
  std::string noise_id;
  std::string category;
  NoiseSplit split = NoiseSplit::kTrain;
  std::string source_path;
  std::vector<float> samples;
  /// FNV-1a over the sample bytes.
  std::uint64_t content_hash = 0;
};

/// Noise signals grouped by split and category. Construction rejects any clip
/// shared between the train split and a test split, by id, by source path, or
/// by content (SplitViolation).
class NoiseBank {
 public:
  explicit NoiseBank(std::vector<NoiseClip> clips);

  static NoiseBank load(const std::filesystem::path& noise_manifest);

  const std::vector<NoiseClip>& clips() const { return clips_; }
  /// Sorted category names present in `split`.
  std::vector<std::string> categories(NoiseSplit split) const;
  /// Clips of `category` restricted to the given splits.
  std::vector<const NoiseClip*> select(const std::string& category,
                                       std::initializer_list<NoiseSplit> splits) const;
  /// Uniform category, then uniform clip within it.
  const NoiseClip& draw(NoiseSplit split, Rng& rng) const;

 private:
  std::vector<NoiseClip> clips_;
  std::map<NoiseSplit, std::map<std::string, std::vector<std::size_t>>> index_;
};

}  // namespace ndal
