// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ndal/manifest.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "ndal/error.hpp"

namespace ndal {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, '\t')) out.push_back(field);
  return out;
}

/// Non-empty, non-comment lines with their 1-based line numbers.
std::vector<std::pair<std::size_t, std::string>> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIoError, "cannot open " + path.string());
  std::vector<std::pair<std::size_t, std::string>> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    out.emplace_back(number, line);
  }
  return out;
}

[[noreturn]] void bad_line(const fs::path& path, std::size_t number, const std::string& why) {
  fail(ErrorCode::kConfigError, path.string() + ":" + std::to_string(number) + ": " + why);
}

fs::path resolve(const fs::path& manifest, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : manifest.parent_path() / path;
}

std::string relative_to(const fs::path& manifest, const fs::path& p) {
  const fs::path base = manifest.parent_path().empty() ? fs::path(".") : manifest.parent_path();
  std::error_code ec;
  const fs::path rel = fs::relative(p, base, ec);
  return ec || rel.empty() ? p.string() : rel.generic_string();
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path.string());
  return out;
}

}  // namespace

std::map<std::string, std::int64_t> Manifest::speaker_labels() const {
  std::set<std::string> ids;
  for (const auto& e : entries) ids.insert(e.speaker_id);
  std::map<std::string, std::int64_t> labels;
  for (const auto& id : ids) labels.emplace(id, static_cast<std::int64_t>(labels.size()));
  return labels;
}

std::size_t Manifest::index_of(const std::string& utt_id) const {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].utt_id == utt_id) return i;
  }
  fail(ErrorCode::kInvalidArgument, "utterance not in manifest: " + utt_id);
}

const ManifestEntry& Manifest::find(const std::string& utt_id) const {
  return entries[index_of(utt_id)];
}

Manifest read_manifest(const fs::path& path) {
  Manifest m;
  std::set<std::string> seen;
  for (const auto& [number, line] : read_lines(path)) {
    const auto f = split_tabs(line);
    if (f.size() != 3) bad_line(path, number, "expected utt_id<TAB>speaker_id<TAB>wav_path");
    if (!seen.insert(f[0]).second) bad_line(path, number, "duplicate utterance id " + f[0]);
    m.entries.push_back({f[0], f[1], resolve(path, f[2])});
  }
  return m;
}

void write_manifest(const fs::path& path, const Manifest& manifest) {
  auto out = open_out(path);
  for (const auto& e : manifest.entries) {
    out << e.utt_id << '\t' << e.speaker_id << '\t' << relative_to(path, e.path) << '\n';
  }
}

std::string_view to_string(NoiseSplit split) {
  switch (split) {
    case NoiseSplit::kTrain: return "train";
    case NoiseSplit::kTestSeen: return "test-seen";
    case NoiseSplit::kTestUnseen: return "test-unseen";
  }
  return "train";
}

NoiseSplit parse_noise_split(std::string_view text) {
  if (text == "train") return NoiseSplit::kTrain;
  if (text == "test-seen") return NoiseSplit::kTestSeen;
  if (text == "test-unseen") return NoiseSplit::kTestUnseen;
  fail(ErrorCode::kConfigError, "unknown noise split '" + std::string(text) + "'");
}

std::vector<NoiseManifestEntry> read_noise_manifest(const fs::path& path) {
  std::vector<NoiseManifestEntry> out;
  for (const auto& [number, line] : read_lines(path)) {
    const auto f = split_tabs(line);
    if (f.size() != 4) {
      bad_line(path, number, "expected noise_id<TAB>category<TAB>split<TAB>wav_path");
    }
    out.push_back({f[0], f[1], parse_noise_split(f[2]), resolve(path, f[3])});
  }
  return out;
}

void write_noise_manifest(const fs::path& path, const std::vector<NoiseManifestEntry>& entries) {
  auto out = open_out(path);
  for (const auto& e : entries) {
    out << e.noise_id << '\t' << e.category << '\t' << to_string(e.split) << '\t'
        << relative_to(path, e.path) << '\n';
  }
}

std::vector<Trial> read_trials(const fs::path& path) {
  std::vector<Trial> out;
  for (const auto& [number, line] : read_lines(path)) {
    std::istringstream in(line);
    std::string label;
    Trial t;
    if (!(in >> label >> t.enroll >> t.test) || (label != "0" && label != "1")) {
      bad_line(path, number, "expected 'label(0|1) enroll_id test_id'");
    }
    std::string extra;
    if (in >> extra) bad_line(path, number, "trailing field '" + extra + "'");
    t.target = label == "1";
    out.push_back(std::move(t));
  }
  return out;
}

void write_trials(const fs::path& path, const std::vector<Trial>& trials) {
  auto out = open_out(path);
  for (const auto& t : trials) out << (t.target ? 1 : 0) << ' ' << t.enroll << ' ' << t.test << '\n';
}

}  // namespace ndal
