// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "doctest.h"
#include "ndal/error.hpp"
#include "ndal/evaluator.hpp"
#include "ndal/synth.hpp"
#include "support/model_fixtures.hpp"
#include "support/temp_dir.hpp"

using namespace ndal;

namespace {

/// Independent EER: count FAR/FRR from scratch at every unique score and at
/// +inf, take the first operating point with FRR >= FAR, and interpolate the
/// crossing linearly against the previous point.
EerResult brute_force_eer(const ScoreSet& s) {
  std::set<double> unique(s.scores.begin(), s.scores.end());
  std::vector<double> thresholds(unique.begin(), unique.end());
  thresholds.push_back(std::numeric_limits<double>::infinity());
  double nt = 0, nn = 0;
  for (bool t : s.targets) (t ? nt : nn) += 1;
  std::vector<double> far, frr;
  for (double t : thresholds) {
    double fa = 0, fr = 0;
    for (std::size_t i = 0; i < s.scores.size(); ++i) {
      if (!s.targets[i] && s.scores[i] >= t) fa += 1;
      if (s.targets[i] && s.scores[i] < t) fr += 1;
    }
    far.push_back(fa / nn);
    frr.push_back(fr / nt);
  }
  for (std::size_t k = 1; k < thresholds.size(); ++k) {
    if (frr[k] >= far[k]) {
      const double a = (far[k - 1] - frr[k - 1]) / ((far[k - 1] - frr[k - 1]) - (far[k] - frr[k]));
      const double t = std::isinf(thresholds[k]) ? thresholds[k - 1]
                                                  : thresholds[k - 1] + a * (thresholds[k] - thresholds[k - 1]);
      return {far[k - 1] + a * (far[k] - far[k - 1]), t};
    }
  }
  return {-1.0, 0.0};
}

ScoreSet random_set(Rng& rng) {
  ScoreSet s;
  const auto n = static_cast<std::size_t>(rng.uniform_int(10, 2000));
  const bool discrete = rng.uniform() < 0.3;  // exercise ties
  for (std::size_t i = 0; i < n; ++i) {
    const bool target = i == 0 || (i != 1 && rng.uniform() < 0.4);
    double score = rng.normal() + (target ? rng.uniform(0.0, 2.0) : 0.0);
    if (discrete) score = std::round(score * 4.0) / 4.0;
    s.add(score, target);
  }
  return s;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct SmallCorpus {
  test::TempDir dir;
  CorpusLayout layout;
  Manifest test;
  std::vector<Trial> trials;
  NoiseBank bank;

  SmallCorpus()
      : layout(make(dir.path())),
        test(read_manifest(layout.test_manifest)),
        trials(read_trials(layout.trials)),
        bank(NoiseBank::load(layout.noise_manifest)) {}

  static CorpusLayout make(const std::filesystem::path& root) {
    SynthSpec s;
    s.num_speakers = 4;
    s.utts_per_speaker = 6;
    s.test_utts_per_speaker = 3;
    s.min_seconds = 1.0;
    s.max_seconds = 1.5;
    s.noise_clips_train = 1;
    s.noise_clips_test = 1;
    s.noise_seconds = 2.0;
    return generate_corpus(s, 5, root);
  }
};

}  // namespace

TEST_CASE("compute_eer matches the brute-force sweep on 200 random score sets") {
  Rng rng(2024);
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    const ScoreSet s = random_set(rng);
    const EerResult got = compute_eer(s);
    const EerResult want = brute_force_eer(s);
    worst = std::max(worst, std::abs(got.eer - want.eer));
    CHECK(std::abs(got.eer - want.eer) <= 1e-9);
    CHECK(std::abs(got.threshold - want.threshold) <= 1e-9);
  }
  MESSAGE("worst |eer - oracle| = " << worst);
}

TEST_CASE("compute_eer examples") {
  ScoreSet separated;
  for (int i = 0; i < 10; ++i) {
    separated.add(0.9, true);
    separated.add(0.1, false);
  }
  CHECK(compute_eer(separated).eer == 0.0);

  ScoreSet flat;
  Rng rng(3);
  for (int i = 0; i < 100; ++i) flat.add(0.5, i == 0 || rng.uniform() < 0.5);
  flat.targets[1] = false;
  CHECK(compute_eer(flat).eer == doctest::Approx(0.5).epsilon(1e-12));

  ScoreSet gaussian;
  for (int i = 0; i < 1000; ++i) {
    gaussian.add(1.0 + rng.normal(), true);
    gaussian.add(rng.normal(), false);
  }
  const EerResult g = compute_eer(gaussian);
  CHECK(std::abs(g.eer - brute_force_eer(gaussian).eer) <= 1e-9);
  // Normal theory: Phi(-0.5) = 0.3085.
  CHECK(std::abs(g.eer - 0.3085) < 0.03);

  ScoreSet one_class;
  one_class.add(0.3, true);
  one_class.add(0.4, true);
  CHECK_THROWS_AS(compute_eer(one_class), Error);
  ScoreSet nan_score;
  nan_score.add(std::nan(""), true);
  nan_score.add(0.1, false);
  CHECK_THROWS_AS(compute_eer(nan_score), Error);
}

TEST_CASE("EER is invariant under strictly monotone score transforms") {
  Rng rng(77);
  for (int k = 0; k < 50; ++k) {
    const ScoreSet s = random_set(rng);
    ScoreSet exp_s = s, cubic = s, affine = s;
    for (std::size_t i = 0; i < s.size(); ++i) {
      exp_s.scores[i] = std::exp(0.5 * s.scores[i]);
      cubic.scores[i] = s.scores[i] * s.scores[i] * s.scores[i] + s.scores[i];
      affine.scores[i] = 3.0 * s.scores[i] - 7.0;
    }
    const double base = compute_eer(s).eer;
    CHECK(std::abs(compute_eer(exp_s).eer - base) <= 1e-12);
    CHECK(std::abs(compute_eer(cubic).eer - base) <= 1e-12);
    CHECK(std::abs(compute_eer(affine).eer - base) <= 1e-12);
  }
}

TEST_CASE("cosine scoring examples") {
  const std::vector<float> a{1.0f, 2.0f, -3.0f}, a2{2.0f, 4.0f, -6.0f};
  const std::vector<float> x{1.0f, 0.0f, 0.0f}, y{0.0f, 1.0f, 0.0f};
  CHECK(cosine_score(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cosine_score(a, a2) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cosine_score(x, y) == 0.0);
  const std::vector<float> zero(3, 0.0f);
  CHECK_THROWS_AS(cosine_score(a, zero), Error);
  CHECK_THROWS_AS(cosine_score(a, std::vector<float>{1.0f}), Error);
}

TEST_CASE("condition parsing") {
  CHECK(parse_conditions("clean").size() == 1);
  const auto white = parse_conditions("white:0,5,10,15,20");
  CHECK(white.size() == 5);
  CHECK(white[2].category == "white");
  CHECK(white[2].snr_db == 10.0);
  CHECK(parse_conditions("clean; brown; machine:0,5").size() == 1 + 5 + 2);
  CHECK(parse_conditions("clean")[0].label() == "clean");
  CHECK(white[1].label() == "white@5");
  CHECK_THROWS_AS(parse_conditions(""), Error);
  CHECK_THROWS_AS(parse_conditions("white:loud"), Error);
  CHECK_THROWS_AS(parse_conditions(":5"), Error);
}

TEST_CASE("embedding extraction, trial harness and export") {
  SmallCorpus c;
  NdalModel model(test::tiny_config(TrainMode::kNdal, 4), 9);

  const Utterance u = load_wav(c.test.entries[0].path);
  const auto e1 = extract_embedding(model, u);
  const auto e2 = extract_embedding(model, u);
  CHECK(e1.size() == model.config().backbone.embedding_dim);
  CHECK(e1 == e2);

  // Table shape: clean + |categories| x 5 SNRs.
  const auto conditions = table_conditions(c.bank, {NoiseSplit::kTestSeen, NoiseSplit::kTestUnseen});
  const std::size_t categories = 5;
  CHECK(conditions.size() == categories * 5 + 1);

  EmbeddingCache cache;
  const auto rows = run_trials(c.trials, c.test, c.bank, conditions, model, {}, &cache);
  CHECK(rows.size() == conditions.size());
  const std::size_t cached = cache.size();
  // Clean enrollment embeddings are shared by every row; noisy rows add
  // only test-side utterances.
  std::set<std::string> all_ids, test_side;
  for (const Trial& t : c.trials) {
    all_ids.insert(t.enroll);
    all_ids.insert(t.test);
    test_side.insert(t.test);
  }
  CHECK(cached == all_ids.size() + test_side.size() * (conditions.size() - 1));
  const auto again = run_trials(c.trials, c.test, c.bank, conditions, model, {}, &cache);
  CHECK(cache.size() == cached);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].eer == again[i].eer);
    CHECK(rows[i].threshold == again[i].threshold);
    CHECK(rows[i].num_trials == c.trials.size());
  }

  // Fresh cache, same bytes.
  std::ostringstream csv1, csv2;
  write_eer_csv(csv1, rows);
  write_eer_csv(csv2, run_trials(c.trials, c.test, c.bank, conditions, model));
  CHECK(csv1.str() == csv2.str());
  CHECK(csv1.str().rfind("condition,snr_db,eer_percent,threshold,num_trials\nclean,,", 0) == 0);
  CHECK(!format_eer_table(rows).empty());

  // Corrupting both sides changes noisy rows but not the clean row.
  EvalOptions both;
  both.corrupt_both_sides = true;
  const auto sym = run_trials(c.trials, c.test, c.bank, parse_conditions("clean;brown:0"), model, both);
  CHECK(sym[0].eer == rows[0].eer);

  // Export: header + one row per utterance, values round-trip.
  const std::filesystem::path out = c.dir / "emb.csv";
  std::vector<std::string> ids;
  for (const auto& e : c.test.entries) ids.push_back(e.utt_id);
  export_embeddings(ids, c.test, &c.bank, Condition{}, model, out);
  std::istringstream lines(slurp(out));
  std::string line;
  std::getline(lines, line);
  CHECK(line.rfind("utt_id,speaker_id,condition,e0,", 0) == 0);
  const std::size_t columns = 3 + model.config().backbone.embedding_dim;
  CHECK(static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1 == columns);
  std::size_t rows_read = 0;
  while (std::getline(lines, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    REQUIRE(cells.size() == columns);
    CHECK(cells[2] == "clean");
    const auto ref = extract_embedding(model, load_wav(c.test.find(cells[0]).path));
    for (std::size_t k = 0; k < ref.size(); ++k) CHECK(std::abs(std::stod(cells[3 + k]) - ref[k]) <= 1e-6);
    ++rows_read;
  }
  CHECK(rows_read == ids.size());
}

TEST_CASE("test conditions never draw train-split noise") {
  SmallCorpus c;
  NdalModel model(test::tiny_config(TrainMode::kJoint, 4), 2);

  // Corruption only draws clips from the test splits.
  const Utterance u = load_wav(c.test.entries[0].path);
  std::set<std::string> test_ids;
  for (const NoiseClip& clip : c.bank.clips()) {
    if (is_test_split(clip.split)) test_ids.insert(clip.noise_id);
  }
  CHECK(corrupt(u, "x", {"white", 5.0}, c.bank, 1).samples != u.samples);

  // A category present only in the train split is refused.
  std::vector<NoiseClip> clips;
  for (const NoiseClip& clip : c.bank.clips()) {
    if (!(clip.category == "white" && is_test_split(clip.split))) clips.push_back(clip);
  }
  const NoiseBank train_only_white(clips);
  try {
    run_trials(c.trials, c.test, train_only_white, parse_conditions("white:0"), model);
    FAIL("expected SplitViolation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kSplitViolation);
  }
  try {
    corrupt(u, "x", {"rain", 5.0}, c.bank, 1);
    FAIL("expected InvalidArgument");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidArgument);
  }
}
