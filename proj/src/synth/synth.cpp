// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ndal/synth.hpp"

#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <tuple>

#include "ndal/audio.hpp"
#include "ndal/eer.hpp"
#include "ndal/error.hpp"
#include "ndal/features.hpp"
#include "ndal/manifest.hpp"
#include "ndal/run_config.hpp"

namespace ndal {

namespace fs = std::filesystem;

namespace {

constexpr double kFs = kSampleRate;

/// F1/F2/F3 multipliers of a small vowel inventory relative to the neutral
/// tract; F4 is left alone.
constexpr std::array<std::array<double, 3>, 5> kVowels{{
    {1.45, 0.85, 0.95},  // a
    {0.60, 1.40, 1.10},  // i
    {0.65, 0.60, 0.90},  // u
    {0.95, 1.20, 1.05},  // e
    {1.00, 0.70, 0.95},  // o
}};

/// Two-pole resonator with unit gain at DC.
struct Resonator {
  double c1 = 0.0, c2 = 0.0, b0 = 1.0;
  double y1 = 0.0, y2 = 0.0;

  void tune(double hz, double bandwidth_hz) {
    const double r = std::exp(-std::numbers::pi * bandwidth_hz / kFs);
    c1 = 2.0 * r * std::cos(2.0 * std::numbers::pi * hz / kFs);
    c2 = -r * r;
    b0 = 1.0 - c1 - c2;
  }
  double operator()(double x) {
    const double y = b0 * x + c1 * y1 + c2 * y2;
    y2 = y1;
    y1 = y;
    return y;
  }
};

std::string two_digits(std::size_t v) { return fmt::format("{:02}", v); }
std::string three_digits(std::size_t v) { return fmt::format("{:03}", v); }

void normalize_rms(std::vector<float>& x, double target) {
  const double r = rms(x);
  if (r <= 0.0) return;
  for (float& v : x) v = static_cast<float>(v * target / r);
}

SpeakerSignature random_signature(double f0, Rng& rng) {
  SpeakerSignature s;
  s.f0_hz = f0;
  const double tract = rng.uniform(0.85, 1.2);
  const std::array<double, 4> neutral{500.0, 1500.0, 2500.0, 3500.0};
  const std::array<std::pair<double, double>, 4> bw{{{60, 100}, {80, 140}, {100, 180}, {150, 250}}};
  for (std::size_t k = 0; k < 4; ++k) {
    const double jitter = std::clamp(1.0 + 0.06 * rng.normal(), 0.85, 1.15);
    s.formants_hz[k] = neutral[k] * tract * jitter;
    s.bandwidths_hz[k] = rng.uniform(bw[k].first, bw[k].second);
  }
  s.tilt = rng.uniform(0.90, 0.98);
  s.intonation = rng.uniform(0.04, 0.15);
  s.speaking_rate = rng.uniform(0.8, 1.25);
  return s;
}

std::vector<float> white(std::size_t n, Rng& rng) {
  std::vector<float> out(n);
  for (float& v : out) v = static_cast<float>(rng.normal());
  return out;
}

}  // namespace

void SynthSpec::validate() const {
  auto bad = [](const std::string& why) { fail(ErrorCode::kConfigError, "synth spec: " + why); };
  if (num_speakers < 2) bad("num_speakers must be >= 2");
  if (utts_per_speaker < 2 || test_utts_per_speaker < 2 ||
      test_utts_per_speaker >= utts_per_speaker) {
    bad("need 2 <= test_utts_per_speaker < utts_per_speaker");
  }
  if (!(min_seconds >= 0.5) || !(max_seconds >= min_seconds)) bad("need 0.5 <= min_seconds <= max_seconds");
  if (!(f0_min_hz > 40.0) || !(f0_spacing_hz >= 8.0)) bad("need f0_min_hz > 40 and f0_spacing_hz >= 8");
  if (noise_clips_train == 0 || noise_clips_test == 0) bad("noise clip counts must be > 0");
  if (!(noise_seconds >= 1.0)) bad("noise_seconds must be >= 1");
  if (max_trials < 2) bad("max_trials must be >= 2");
}

SynthSpec SynthSpec::parse(const std::string& text) {
  SynthSpec spec;
  for (const auto& [key, value] : parse_key_values(text)) {
    auto count = [&](std::size_t& field) { field = static_cast<std::size_t>(config_count(key, value)); };
    auto real = [&](double& field) { field = config_real(key, value); };
    if (key == "num_speakers") count(spec.num_speakers);
    else if (key == "utts_per_speaker") count(spec.utts_per_speaker);
    else if (key == "test_utts_per_speaker") count(spec.test_utts_per_speaker);
    else if (key == "min_seconds") real(spec.min_seconds);
    else if (key == "max_seconds") real(spec.max_seconds);
    else if (key == "f0_min_hz") real(spec.f0_min_hz);
    else if (key == "f0_spacing_hz") real(spec.f0_spacing_hz);
    else if (key == "noise_clips_train") count(spec.noise_clips_train);
    else if (key == "noise_clips_test") count(spec.noise_clips_test);
    else if (key == "noise_seconds") real(spec.noise_seconds);
    else if (key == "max_trials") count(spec.max_trials);
    else fail(ErrorCode::kConfigError, "synth spec: unknown key '" + key + "'");
  }
  spec.validate();
  return spec;
}

std::vector<SpeakerSignature> make_speakers(const SynthSpec& spec, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "speakers"));
  const std::size_t grid = spec.num_speakers + spec.num_speakers / 2 + 1;
  std::vector<double> f0(grid);
  for (std::size_t k = 0; k < grid; ++k) f0[k] = spec.f0_min_hz + spec.f0_spacing_hz * static_cast<double>(k);
  for (std::size_t i = 0; i < spec.num_speakers; ++i) {
    const auto j = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(grid - 1)));
    std::swap(f0[i], f0[j]);
  }
  std::vector<SpeakerSignature> out;
  for (std::size_t i = 0; i < spec.num_speakers; ++i) out.push_back(random_signature(f0[i], rng));
  return out;
}

std::vector<float> synthesize_speech(const SpeakerSignature& sp, double seconds, Rng& rng) {
  const auto n = static_cast<std::size_t>(std::llround(seconds * kFs));
  std::vector<double> y(n, 0.0);
  std::array<Resonator, 4> tract;
  double glottal = 0.0, phase = 0.0, period_jitter = 1.0;
  std::size_t t = static_cast<std::size_t>(rng.uniform(0.0, 0.1) * kFs);

  auto run = [&](std::size_t len, double amp, double f0_start, double f0_end, bool voiced) {
    const std::size_t ramp = std::min<std::size_t>(400, len / 2);
    for (std::size_t i = 0; i < len && t < n; ++i, ++t) {
      double excitation = 0.0;
      if (voiced) {
        const double frac = static_cast<double>(i) / static_cast<double>(len);
        double env = 1.0;
        if (i < ramp) env = std::sin(0.5 * std::numbers::pi * i / ramp);
        if (len - i < ramp) env = std::min(env, std::sin(0.5 * std::numbers::pi * (len - i) / ramp));
        const double f0 = (f0_start + (f0_end - f0_start) * frac) * period_jitter;
        phase += f0 / kFs;
        if (phase >= 1.0) {
          phase -= 1.0;
          excitation = amp * env;
          period_jitter = 1.0 + 0.01 * std::clamp(rng.normal(), -3.0, 3.0);
        }
        excitation += 0.01 * amp * env * rng.normal();
      }
      glottal = excitation + sp.tilt * glottal;
      double s = glottal;
      for (Resonator& r : tract) s = r(s);
      y[t] = s;
    }
  };

  while (t < n) {
    const auto& vowel = kVowels[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(kVowels.size()) - 1))];
    for (std::size_t k = 0; k < 4; ++k) {
      const double shift = k < 3 ? vowel[k] : 1.0;
      tract[k].tune(std::min(sp.formants_hz[k] * shift, 7000.0), sp.bandwidths_hz[k]);
    }
    const double base = sp.f0_hz;
    const double f0_start = base * (1.0 + sp.intonation * rng.uniform(-1.0, 1.0));
    const double f0_end = base * (1.0 + sp.intonation * rng.uniform(-1.0, 1.0));
    const auto voiced = static_cast<std::size_t>(rng.uniform(0.12, 0.30) / sp.speaking_rate * kFs);
    run(voiced, rng.uniform(0.6, 1.0), f0_start, f0_end, true);
    const double gap = rng.uniform() < 0.1 ? rng.uniform(0.2, 0.4) : rng.uniform(0.03, 0.12);
    run(static_cast<std::size_t>(gap / sp.speaking_rate * kFs), 0.0, base, base, false);
  }

  double peak = 0.0;
  for (double v : y) peak = std::max(peak, std::abs(v));
  const double level = rng.uniform(0.3, 0.9);
  std::vector<float> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(peak > 0 ? y[i] * level / peak : 0.0);
  return out;
}

std::vector<float> synthesize_noise(const std::string& category, double seconds, Rng& rng) {
  const auto n = static_cast<std::size_t>(std::llround(seconds * kFs));
  std::vector<float> out;
  if (category == "white") {
    out = white(n, rng);
  } else if (category == "pink") {
    // Paul Kellet's refined pink filter.
    out = white(n, rng);
    double b0 = 0, b1 = 0, b2 = 0, b3 = 0, b4 = 0, b5 = 0, b6 = 0;
    for (float& v : out) {
      const double w = v;
      b0 = 0.99886 * b0 + w * 0.0555179;
      b1 = 0.99332 * b1 + w * 0.0750759;
      b2 = 0.96900 * b2 + w * 0.1538520;
      b3 = 0.86650 * b3 + w * 0.3104856;
      b4 = 0.55000 * b4 + w * 0.5329522;
      b5 = -0.7616 * b5 - w * 0.0168980;
      v = static_cast<float>(b0 + b1 + b2 + b3 + b4 + b5 + b6 + w * 0.5362);
      b6 = w * 0.115926;
    }
  } else if (category == "brown") {
    out = white(n, rng);
    double acc = 0.0, prev_in = 0.0, prev_out = 0.0;
    for (float& v : out) {
      acc = 0.998 * acc + 0.05 * v;
      // First-order DC blocker.
      prev_out = acc - prev_in + 0.995 * prev_out;
      prev_in = acc;
      v = static_cast<float>(prev_out);
    }
  } else if (category == "babble") {
    out.assign(n, 0.0f);
    const int talkers = static_cast<int>(rng.uniform_int(4, 6));
    for (int k = 0; k < talkers; ++k) {
      SpeakerSignature sp = random_signature(rng.uniform(85.0, 300.0), rng);
      std::vector<float> voice = synthesize_speech(sp, seconds, rng);
      normalize_rms(voice, 1.0);
      for (std::size_t i = 0; i < n; ++i) out[i] += voice[i];
    }
  } else if (category == "machine") {
    out.assign(n, 0.0f);
    const double hum = rng.uniform(40.0, 120.0);
    const double am_rate = rng.uniform(2.0, 8.0);
    std::array<double, 16> amps{}, phases{};
    for (std::size_t k = 0; k < amps.size(); ++k) {
      amps[k] = rng.uniform(0.2, 1.0) / static_cast<double>(k + 1);
      phases[k] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
    Resonator whine;
    whine.tune(rng.uniform(1000.0, 3000.0), 40.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double time = static_cast<double>(i) / kFs;
      double v = 0.0;
      for (std::size_t k = 0; k < amps.size(); ++k) {
        v += amps[k] * std::sin(2.0 * std::numbers::pi * hum * static_cast<double>(k + 1) * time + phases[k]);
      }
      v *= 1.0 + 0.4 * std::sin(2.0 * std::numbers::pi * am_rate * time);
      v += 0.5 * whine(rng.normal());
      out[i] = static_cast<float>(v);
    }
  } else {
    fail(ErrorCode::kInvalidArgument, "unknown noise category '" + category + "'");
  }
  normalize_rms(out, 0.1);
  return out;
}

CorpusLayout CorpusLayout::under(const fs::path& root) {
  CorpusLayout c;
  c.root = root;
  c.train_manifest = root / "train.tsv";
  c.test_manifest = root / "test.tsv";
  c.noise_manifest = root / "noise.tsv";
  c.trials = root / "trials.txt";
  return c;
}

CorpusLayout generate_corpus(const SynthSpec& spec, std::uint64_t seed, const fs::path& out_dir) {
  spec.validate();
  const CorpusLayout layout = CorpusLayout::under(out_dir);
  std::error_code ec;
  fs::create_directories(out_dir / "wav", ec);
  fs::create_directories(out_dir / "noise", ec);
  if (ec) fail(ErrorCode::kIoError, "cannot create " + out_dir.string() + ": " + ec.message());

  const std::vector<SpeakerSignature> speakers = make_speakers(spec, seed);
  Manifest train, test;
  const std::size_t train_per_speaker = spec.utts_per_speaker - spec.test_utts_per_speaker;
  for (std::size_t s = 0; s < speakers.size(); ++s) {
    const std::string spk = "spk" + two_digits(s);
    fs::create_directories(out_dir / "wav" / spk, ec);
    for (std::size_t u = 0; u < spec.utts_per_speaker; ++u) {
      const std::string utt = spk + "-u" + three_digits(u);
      Rng rng(derive_seed(seed, utt));
      const double seconds = rng.uniform(spec.min_seconds, spec.max_seconds);
      const fs::path path = out_dir / "wav" / spk / (utt + ".wav");
      write_wav(path, synthesize_speech(speakers[s], seconds, rng));
      (u < train_per_speaker ? train : test).entries.push_back({utt, spk, path});
    }
  }
  write_manifest(layout.train_manifest, train);
  write_manifest(layout.test_manifest, test);

  std::vector<NoiseManifestEntry> noise;
  auto add_noise = [&](NoiseSplit split, const char* category, std::size_t count) {
    for (std::size_t k = 0; k < count; ++k) {
      const std::string id = std::string(to_string(split)) + "-" + category + "-" + two_digits(k);
      Rng rng(derive_seed(seed, "noise/" + id));
      const fs::path path = out_dir / "noise" / (id + ".wav");
      write_wav(path, synthesize_noise(category, spec.noise_seconds, rng));
      noise.push_back({id, category, split, path});
    }
  };
  for (const char* c : kSeenNoiseCategories) add_noise(NoiseSplit::kTrain, c, spec.noise_clips_train);
  for (const char* c : kSeenNoiseCategories) add_noise(NoiseSplit::kTestSeen, c, spec.noise_clips_test);
  for (const char* c : kUnseenNoiseCategories) add_noise(NoiseSplit::kTestUnseen, c, spec.noise_clips_test);
  write_noise_manifest(layout.noise_manifest, noise);

  // Every same-speaker pair, plus a seeded subsample of different-speaker
  // pairs keeping the classes within a factor of 2 of each other.
  std::vector<Trial> targets;
  std::vector<std::pair<std::size_t, std::size_t>> others;
  for (std::size_t i = 0; i < test.entries.size(); ++i) {
    for (std::size_t j = i + 1; j < test.entries.size(); ++j) {
      if (test.entries[i].speaker_id == test.entries[j].speaker_id) {
        targets.push_back({true, test.entries[i].utt_id, test.entries[j].utt_id});
      } else {
        others.emplace_back(i, j);
      }
    }
  }
  Rng trial_rng(derive_seed(seed, "trials"));
  const std::size_t cap = spec.max_trials;
  const std::size_t num_targets =
      std::min(targets.size(), std::max(cap / 2, cap > others.size() ? cap - others.size() : 0));
  for (std::size_t i = 0; i < num_targets; ++i) {
    std::swap(targets[i], targets[static_cast<std::size_t>(trial_rng.uniform_int(
                              static_cast<std::int64_t>(i), static_cast<std::int64_t>(targets.size() - 1)))]);
  }
  targets.resize(num_targets);
  const std::size_t num_others = std::min({others.size(), cap - num_targets, 2 * num_targets});
  for (std::size_t i = 0; i < num_others; ++i) {
    std::swap(others[i], others[static_cast<std::size_t>(trial_rng.uniform_int(
                             static_cast<std::int64_t>(i), static_cast<std::int64_t>(others.size() - 1)))]);
  }
  others.resize(num_others);
  std::sort(others.begin(), others.end());
  std::vector<Trial> trials = targets;
  std::sort(trials.begin(), trials.end(), [](const Trial& a, const Trial& b) {
    return std::tie(a.enroll, a.test) < std::tie(b.enroll, b.test);
  });
  for (const auto& [i, j] : others) {
    trials.push_back({false, test.entries[i].utt_id, test.entries[j].utt_id});
  }
  write_trials(layout.trials, trials);

  spdlog::info("synthetic corpus: {} speakers, {} train + {} test utterances, {} noise clips, "
               "{} trials ({} target) in {}",
               speakers.size(), train.entries.size(), test.entries.size(), noise.size(),
               trials.size(), num_targets, out_dir.string());
  return layout;
}

double baseline_eer(const CorpusLayout& corpus) {
  const Manifest test = read_manifest(corpus.test_manifest);
  std::map<std::string, std::vector<float>> means;
  for (const auto& e : test.entries) {
    const FeatureMatrix f = log_mel(load_wav(e.path));
    std::vector<float> mean(kNumMels);
    for (std::size_t m = 0; m < kNumMels; ++m) {
      double s = 0.0;
      for (float v : f.row(m)) s += v;
      mean[m] = static_cast<float>(s / static_cast<double>(f.frames));
    }
    means.emplace(e.utt_id, std::move(mean));
  }
  ScoreSet scores;
  for (const Trial& t : read_trials(corpus.trials)) {
    scores.add(cosine_score(means.at(t.enroll), means.at(t.test)), t.target);
  }
  return compute_eer(scores).eer;
}

}  // namespace ndal
