// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <fstream>
#include <iterator>
#include <map>
#include <set>

#include "doctest.h"
#include "ndal/audio.hpp"
#include "ndal/error.hpp"
#include "ndal/manifest.hpp"
#include "ndal/noise_bank.hpp"
#include "ndal/synth.hpp"
#include "support/temp_dir.hpp"

using namespace ndal;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Relative path -> contents for every regular file under `root`.
std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = slurp(e.path());
  }
  return out;
}

SynthSpec small_spec() {
  SynthSpec s;
  s.num_speakers = 4;
  s.utts_per_speaker = 6;
  s.test_utts_per_speaker = 3;
  s.min_seconds = 1.0;
  s.max_seconds = 1.5;
  s.noise_clips_train = 1;
  s.noise_clips_test = 1;
  s.noise_seconds = 1.0;
  return s;
}

}  // namespace

TEST_CASE("default corpus has 20 speakers and 600 utterances with distinct pitch") {
  test::TempDir dir;
  const SynthSpec spec;
  const CorpusLayout c = generate_corpus(spec, 7, dir.path());
  const Manifest train = read_manifest(c.train_manifest);
  const Manifest test = read_manifest(c.test_manifest);
  CHECK(train.entries.size() + test.entries.size() == 600);
  CHECK(train.speaker_labels().size() == 20);
  CHECK(test.speaker_labels().size() == 20);

  std::map<std::string, int> per_speaker;
  for (const auto& e : train.entries) ++per_speaker[e.speaker_id];
  for (const auto& e : test.entries) ++per_speaker[e.speaker_id];
  for (const auto& [spk, n] : per_speaker) CHECK(n == 30);

  for (const auto& e : test.entries) {
    const Utterance u = load_wav(e.path);
    CHECK(u.seconds() >= 3.0 - 1e-3);
    CHECK(u.seconds() <= 6.0 + 1e-3);
  }

  const auto speakers = make_speakers(spec, 7);
  for (std::size_t i = 0; i < speakers.size(); ++i) {
    for (std::size_t j = i + 1; j < speakers.size(); ++j) {
      CHECK(std::abs(speakers[i].f0_hz - speakers[j].f0_hz) >= 8.0 - 1e-9);
    }
  }

  const std::vector<Trial> trials = read_trials(c.trials);
  const auto targets = static_cast<std::size_t>(
      std::count_if(trials.begin(), trials.end(), [](const Trial& t) { return t.target; }));
  const std::size_t nontargets = trials.size() - targets;
  CHECK(trials.size() <= 5000);
  CHECK(targets * 2 >= nontargets);
  CHECK(nontargets * 2 >= targets);
  CHECK(targets == 20 * (15 * 14 / 2));
  for (const Trial& t : trials) {
    CHECK((test.find(t.enroll).speaker_id == test.find(t.test).speaker_id) == t.target);
  }

  // Speaker identity is recoverable from spectra alone.
  const double eer = baseline_eer(c);
  MESSAGE("baseline mean-log-mel EER: " << eer * 100.0 << "%");
  CHECK(eer < 0.5);
  CHECK(eer < 0.35);

  // Noise splits load into a bank that enforces disjointness.
  const NoiseBank bank = NoiseBank::load(c.noise_manifest);
  CHECK(bank.categories(NoiseSplit::kTrain) == std::vector<std::string>{"babble", "pink", "white"});
  CHECK(bank.categories(NoiseSplit::kTestSeen) == std::vector<std::string>{"babble", "pink", "white"});
  CHECK(bank.categories(NoiseSplit::kTestUnseen) == std::vector<std::string>{"brown", "machine"});
}

TEST_CASE("generation is byte-identical for equal seeds and differs across seeds") {
  test::TempDir a, b, c;
  generate_corpus(small_spec(), 11, a.path());
  generate_corpus(small_spec(), 11, b.path());
  generate_corpus(small_spec(), 12, c.path());
  const auto ta = tree(a.path()), tb = tree(b.path()), tc = tree(c.path());
  CHECK(ta.size() == tb.size());
  CHECK(ta == tb);
  CHECK(ta.size() == tc.size());
  CHECK(ta != tc);
}

TEST_CASE("noise categories are finite, nonsilent and distinct") {
  std::map<std::string, std::vector<float>> clips;
  for (const char* cat : {"white", "pink", "babble", "brown", "machine"}) {
    Rng rng(3);
    const std::vector<float> x = synthesize_noise(cat, 1.0, rng);
    CHECK(x.size() == 16000);
    CHECK(std::all_of(x.begin(), x.end(), [](float v) { return std::isfinite(v); }));
    CHECK(rms(x) == doctest::Approx(0.1).epsilon(1e-3));
    clips[cat] = x;
  }
  CHECK(clips["white"] != clips["pink"]);
  Rng rng(3);
  CHECK_THROWS_AS(synthesize_noise("rain", 1.0, rng), Error);
}

TEST_CASE("speech is peak-limited and deterministic") {
  const auto speakers = make_speakers(SynthSpec{}, 1);
  Rng r1(5), r2(5);
  const auto x = synthesize_speech(speakers[0], 2.0, r1);
  const auto y = synthesize_speech(speakers[0], 2.0, r2);
  CHECK(x == y);
  CHECK(x.size() == 32000);
  float peak = 0.0f;
  for (float v : x) peak = std::max(peak, std::abs(v));
  CHECK(peak <= 0.9f);
  CHECK(peak > 0.1f);
}

TEST_CASE("spec validation") {
  SynthSpec s;
  s.test_utts_per_speaker = s.utts_per_speaker;
  CHECK_THROWS_AS(s.validate(), Error);
  s = SynthSpec{};
  s.f0_spacing_hz = 4.0;
  CHECK_THROWS_AS(s.validate(), Error);
  s = SynthSpec{};
  s.num_speakers = 1;
  CHECK_THROWS_AS(s.validate(), Error);
}
