// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ndal/evaluator.hpp"

#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "ndal/error.hpp"
#include "ndal/features.hpp"
#include "ndal/trainer.hpp"

NDAL_CORE_NAMESPACE_BEGIN

std::string Condition::label() const {
  return clean() ? std::string("clean") : fmt::format("{}@{}", category, snr_db);
}

std::vector<Condition> parse_conditions(const std::string& spec) {
  std::vector<Condition> out;
  std::stringstream groups(spec);
  std::string group;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(groups, group, ';')) {
    group = trim(group);
    if (group.empty()) continue;
    if (group == "clean") {
      out.push_back({});
      continue;
    }
    const auto colon = group.find(':');
    const std::string category = trim(group.substr(0, colon));
    if (category.empty()) fail(ErrorCode::kConfigError, "condition '" + group + "' has no category");
    if (colon == std::string::npos) {
      for (double snr : kTableSnrs) out.push_back({category, snr});
      continue;
    }
    std::stringstream snrs(group.substr(colon + 1));
    std::string item;
    std::size_t count = 0;
    while (std::getline(snrs, item, ',')) {
      item = trim(item);
      try {
        std::size_t used = 0;
        const double snr = std::stod(item, &used);
        if (used != item.size() || !std::isfinite(snr)) throw std::invalid_argument(item);
        out.push_back({category, snr});
        ++count;
      } catch (const std::exception&) {
        fail(ErrorCode::kConfigError, "condition '" + group + "': bad SNR '" + item + "'");
      }
    }
    if (count == 0) fail(ErrorCode::kConfigError, "condition '" + group + "' lists no SNR");
  }
  if (out.empty()) fail(ErrorCode::kConfigError, "empty condition list");
  return out;
}

std::vector<Condition> table_conditions(const NoiseBank& bank, std::initializer_list<NoiseSplit> splits) {
  std::vector<Condition> out{Condition{}};
  std::set<std::string> seen;
  for (NoiseSplit s : splits) {
    for (const std::string& c : bank.categories(s)) {
      if (!seen.insert(c).second) continue;
      for (double snr : kTableSnrs) out.push_back({c, snr});
    }
  }
  return out;
}

std::vector<float> extract_embedding(const NdalModel& model, const Utterance& u) {
  const FeatureMatrix f = extract_features(u);
  const std::vector<std::vector<float>> one{f.data};
  Tape tape;
  const Var e = model.embed(tape, stack_features(one, kNumMels, f.frames));
  const Tensor& t = e.value();
  std::vector<float> out(t.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(t[i]);
  return out;
}

Utterance corrupt(const Utterance& u, const std::string& utt_id, const Condition& condition,
                  const NoiseBank& bank, std::uint64_t seed) {
  if (condition.clean()) return u;
  const auto clips =
      bank.select(condition.category, {NoiseSplit::kTestSeen, NoiseSplit::kTestUnseen});
  if (clips.empty()) {
    if (!bank.select(condition.category, {NoiseSplit::kTrain}).empty()) {
      fail(ErrorCode::kSplitViolation, "noise category '" + condition.category +
                                           "' has only train-split clips; refusing to test on it");
    }
    fail(ErrorCode::kInvalidArgument, "unknown noise category '" + condition.category + "'");
  }
  Rng rng(derive_seed(derive_seed(seed, utt_id), condition.label()));
  const NoiseClip& clip =
      *clips[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(clips.size()) - 1))];
  const auto offset = static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<std::int64_t>(clip.samples.size()) - 1));
  return mix_at_snr(u, clip.samples, condition.snr_db, offset).mixture;
}

const std::vector<float>* EmbeddingCache::find(const Key& key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

void EmbeddingCache::put(Key key, std::vector<float> embedding) {
  entries_.insert_or_assign(std::move(key), std::move(embedding));
}

std::vector<EerRow> run_trials(const std::vector<Trial>& trials, const Manifest& test,
                               const NoiseBank& bank, const std::vector<Condition>& conditions,
                               const NdalModel& model, const EvalOptions& options,
                               EmbeddingCache* cache) {
  EmbeddingCache local;
  if (!cache) cache = &local;
  const std::uint64_t hash = model_hash(model);

  std::map<std::string, Utterance> audio;
  auto load = [&](const std::string& id) -> const Utterance& {
    auto it = audio.find(id);
    if (it == audio.end()) it = audio.emplace(id, load_wav(test.find(id).path)).first;
    return it->second;
  };
  auto embedding = [&](const std::string& id, const Condition& c) -> const std::vector<float>& {
    EmbeddingCache::Key key{id, c.label(), hash};
    if (const auto* hit = cache->find(key)) return *hit;
    cache->put(key, extract_embedding(model, corrupt(load(id), id, c, bank, options.seed)));
    return *cache->find(key);
  };

  std::vector<EerRow> rows;
  for (const Condition& c : conditions) {
    const Condition enroll_condition = options.corrupt_both_sides ? c : Condition{};
    ScoreSet scores;
    for (const Trial& t : trials) {
      const std::vector<float> enroll = embedding(t.enroll, enroll_condition);
      scores.add(cosine_score(enroll, embedding(t.test, c)), t.target);
    }
    const EerResult r = compute_eer(scores);
    rows.push_back({c, r.eer, r.threshold, trials.size()});
    spdlog::info("{}: EER {:.2f}% over {} trials", c.label(), 100.0 * r.eer, trials.size());
  }
  return rows;
}

void write_eer_csv(std::ostream& out, const std::vector<EerRow>& rows) {
  out << "condition,snr_db,eer_percent,threshold,num_trials\n";
  for (const EerRow& r : rows) {
    out << fmt::format("{},{},{:.6f},{:.9g},{}\n", r.condition.clean() ? "clean" : r.condition.category,
                       r.condition.clean() ? std::string() : fmt::format("{}", r.condition.snr_db),
                       100.0 * r.eer, r.threshold, r.num_trials);
  }
}

std::string format_eer_table(const std::vector<EerRow>& rows) {
  std::vector<double> snrs;
  std::vector<std::string> categories;
  std::map<std::pair<std::string, double>, double> cell;
  std::string out;
  for (const EerRow& r : rows) {
    if (r.condition.clean()) {
      out += fmt::format("clean: EER {:.2f}%\n", 100.0 * r.eer);
      continue;
    }
    if (std::find(snrs.begin(), snrs.end(), r.condition.snr_db) == snrs.end()) snrs.push_back(r.condition.snr_db);
    if (std::find(categories.begin(), categories.end(), r.condition.category) == categories.end()) {
      categories.push_back(r.condition.category);
    }
    cell[{r.condition.category, r.condition.snr_db}] = 100.0 * r.eer;
  }
  if (categories.empty()) return out;
  std::sort(snrs.begin(), snrs.end());
  out += fmt::format("{:<10}", "EER %");
  for (double s : snrs) out += fmt::format("{:>9}", fmt::format("{}dB", s));
  out += '\n';
  for (const std::string& c : categories) {
    out += fmt::format("{:<10}", c);
    for (double s : snrs) {
      const auto it = cell.find({c, s});
      out += it == cell.end() ? fmt::format("{:>9}", "-") : fmt::format("{:>9.2f}", it->second);
    }
    out += '\n';
  }
  return out;
}

void export_embeddings(const std::vector<std::string>& utt_ids, const Manifest& manifest,
                       const NoiseBank* bank, const Condition& condition, const NdalModel& model,
                       const std::filesystem::path& path, std::uint64_t seed) {
  if (!condition.clean() && !bank) {
    fail(ErrorCode::kInvalidArgument, "noisy export needs a noise bank");
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path.string());
  const std::size_t dim = model.config().backbone.embedding_dim;
  out << "utt_id,speaker_id,condition";
  for (std::size_t k = 0; k < dim; ++k) out << ",e" << k;
  out << '\n';
  for (const std::string& id : utt_ids) {
    const ManifestEntry& e = manifest.find(id);
    Utterance u = load_wav(e.path);
    if (!condition.clean()) u = corrupt(u, id, condition, *bank, seed);
    const std::vector<float> emb = extract_embedding(model, u);
    out << id << ',' << e.speaker_id << ',' << condition.label();
    for (float v : emb) out << fmt::format(",{:.9g}", v);
    out << '\n';
  }
  if (!out) fail(ErrorCode::kIoError, "error writing " + path.string());
}

NDAL_CORE_NAMESPACE_END
