// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ndal/noise_bank.hpp"

#include <filesystem>
#include <set>

#include "ndal/audio.hpp"
#include "ndal/error.hpp"

namespace ndal {

NoiseBank::NoiseBank(std::vector<NoiseClip> clips) : clips_(std::move(clips)) {
  std::set<std::string> train_ids, train_paths;
  std::set<std::uint64_t> train_hashes;
  for (NoiseClip& c : clips_) {
    if (c.samples.empty()) fail(ErrorCode::kSilentNoise, "noise clip " + c.noise_id + " is empty");
    c.content_hash = fnv1a64(c.samples.data(), c.samples.size() * sizeof(float));
    if (c.split == NoiseSplit::kTrain) {
      train_ids.insert(c.noise_id);
      if (!c.source_path.empty()) train_paths.insert(c.source_path);
      train_hashes.insert(c.content_hash);
    }
  }
  for (std::size_t i = 0; i < clips_.size(); ++i) {
    const NoiseClip& c = clips_[i];
    if (is_test_split(c.split)) {
      const bool shared = train_ids.contains(c.noise_id) ||
                          (!c.source_path.empty() && train_paths.contains(c.source_path)) ||
                          train_hashes.contains(c.content_hash);
      if (shared) {
        fail(ErrorCode::kSplitViolation,
             "noise clip " + c.noise_id + " appears in both train and " +
                 std::string(to_string(c.split)) + " splits");
      }
    }
    index_[c.split][c.category].push_back(i);
  }
}

NoiseBank NoiseBank::load(const std::filesystem::path& noise_manifest) {
  std::vector<NoiseClip> clips;
  for (const auto& e : read_noise_manifest(noise_manifest)) {
    NoiseClip c;
    c.noise_id = e.noise_id;
    c.category = e.category;
    c.split = e.split;
    c.source_path = std::filesystem::weakly_canonical(e.path).string();
    c.samples = load_wav(e.path).samples;
    clips.push_back(std::move(c));
  }
  return NoiseBank(std::move(clips));
}

std::vector<std::string> NoiseBank::categories(NoiseSplit split) const {
  std::vector<std::string> out;
  if (auto it = index_.find(split); it != index_.end()) {
    for (const auto& [name, ids] : it->second) out.push_back(name);
  }
  return out;
}

std::vector<const NoiseClip*> NoiseBank::select(
    const std::string& category, std::initializer_list<NoiseSplit> splits) const {
  std::vector<const NoiseClip*> out;
  for (NoiseSplit s : splits) {
    auto it = index_.find(s);
    if (it == index_.end()) continue;
    auto jt = it->second.find(category);
    if (jt == it->second.end()) continue;
    for (std::size_t i : jt->second) out.push_back(&clips_[i]);
  }
  return out;
}

const NoiseClip& NoiseBank::draw(NoiseSplit split, Rng& rng) const {
  auto it = index_.find(split);
  if (it == index_.end() || it->second.empty()) {
    fail(ErrorCode::kInvalidArgument,
         "noise bank has no clips in split " + std::string(to_string(split)));
  }
  const auto& cats = it->second;
  auto cat = cats.begin();
  std::advance(cat, rng.uniform_int(0, static_cast<std::int64_t>(cats.size()) - 1));
  const auto& ids = cat->second;
  return clips_[ids[static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<std::int64_t>(ids.size()) - 1))]];
}

}  // namespace ndal
