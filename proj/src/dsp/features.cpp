// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ndal/features.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>

#include "ndal/error.hpp"

namespace ndal {

namespace {

constexpr std::size_t kNumBins = kFftSize / 2 + 1;

struct MelFilter {
  std::size_t first_bin = 0;
  std::vector<double> weights;
};

/// Window, filterbank and FFT plan shared by every extraction. The plan is
/// created once under a lock; fftw_execute_dft_r2c on caller-owned buffers
/// is thread-safe.
class Frontend {
 public:
  static const Frontend& get() {
    static const Frontend instance;
    return instance;
  }

  void power_spectrum(const float* frame, std::vector<double>& in,
                      std::vector<std::complex<double>>& out,
                      std::vector<double>& power) const {
    std::fill(in.begin(), in.end(), 0.0);
    for (std::size_t n = 0; n < kWindowLength; ++n) in[n] = frame[n] * window_[n];
    fftw_execute_dft_r2c(plan_, in.data(), reinterpret_cast<fftw_complex*>(out.data()));
    for (std::size_t k = 0; k < kNumBins; ++k) power[k] = std::norm(out[k]);
  }

  const std::vector<MelFilter>& filters() const { return filters_; }

 private:
  Frontend() : window_(kWindowLength) {
    for (std::size_t n = 0; n < kWindowLength; ++n) {
      window_[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                        static_cast<double>(kWindowLength - 1));
    }
    const double lo = hz_to_mel(kMelLowHz), hi = hz_to_mel(kMelHighHz);
    const double step = (hi - lo) / static_cast<double>(kNumMels + 1);
    filters_.resize(kNumMels);
    for (std::size_t m = 0; m < kNumMels; ++m) {
      const double left = lo + step * static_cast<double>(m);
      const double center = left + step, right = center + step;
      MelFilter& f = filters_[m];
      bool started = false;
      for (std::size_t k = 0; k < kNumBins; ++k) {
        const double mel = hz_to_mel(static_cast<double>(k) * kSampleRate / kFftSize);
        double w = 0.0;
        if (mel > left && mel < right) {
          w = mel <= center ? (mel - left) / (center - left) : (right - mel) / (right - center);
        }
        if (w > 0.0) {
          if (!started) f.first_bin = k;
          started = true;
          f.weights.resize(k - f.first_bin + 1, 0.0);
          f.weights.back() = w;
        }
      }
    }
    std::vector<double> in(kFftSize);
    std::vector<std::complex<double>> out(kNumBins);
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(kFftSize), in.data(),
                                 reinterpret_cast<fftw_complex*>(out.data()),
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan_ == nullptr) fail(ErrorCode::kInvalidArgument, "FFTW plan creation failed");
  }

  ~Frontend() { fftw_destroy_plan(plan_); }

  std::vector<double> window_;
  std::vector<MelFilter> filters_;
  fftw_plan plan_ = nullptr;
};

}  // namespace

std::size_t num_frames(std::size_t samples) {
  if (samples < kWindowLength) {
    fail(ErrorCode::kTooShort, "log_mel: " + std::to_string(samples) +
                                   " samples is shorter than one 25 ms window");
  }
  return 1 + (samples - kWindowLength) / kHopLength;
}

double hz_to_mel(double hz) { return 1127.0 * std::log(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::exp(mel / 1127.0) - 1.0); }

std::vector<double> mel_center_frequencies() {
  const double lo = hz_to_mel(kMelLowHz), hi = hz_to_mel(kMelHighHz);
  const double step = (hi - lo) / static_cast<double>(kNumMels + 1);
  std::vector<double> out(kNumMels);
  for (std::size_t m = 0; m < kNumMels; ++m) {
    out[m] = mel_to_hz(lo + step * static_cast<double>(m + 1));
  }
  return out;
}

FeatureMatrix log_mel(const Utterance& u) {
  const std::size_t frames = num_frames(u.samples.size());
  const Frontend& fe = Frontend::get();
  FeatureMatrix out(frames);
  std::vector<double> in(kFftSize), power(kNumBins);
  std::vector<std::complex<double>> spectrum(kNumBins);
  for (std::size_t t = 0; t < frames; ++t) {
    fe.power_spectrum(u.samples.data() + t * kHopLength, in, spectrum, power);
    for (std::size_t m = 0; m < kNumMels; ++m) {
      const MelFilter& f = fe.filters()[m];
      double energy = 0.0;
      for (std::size_t j = 0; j < f.weights.size(); ++j) {
        energy += f.weights[j] * power[f.first_bin + j];
      }
      out.at(m, t) = static_cast<float>(std::log(energy + kLogFloor));
    }
  }
  return out;
}

FeatureMatrix cms(FeatureMatrix f) {
  if (f.frames == 0) fail(ErrorCode::kTooShort, "cms: empty feature matrix");
  for (std::size_t m = 0; m < kNumMels; ++m) {
    float* row = f.data.data() + m * f.frames;
    double mean = 0.0;
    for (std::size_t t = 0; t < f.frames; ++t) mean += row[t];
    mean /= static_cast<double>(f.frames);
    for (std::size_t t = 0; t < f.frames; ++t) {
      row[t] = static_cast<float>(static_cast<double>(row[t]) - mean);
    }
  }
  return f;
}

SpecAugmentMasks draw_spec_augment(std::size_t frames, Rng& rng,
                                   const SpecAugmentOptions& options) {
  SpecAugmentMasks m;
  const std::size_t max_f = std::min(options.max_freq_width, kNumMels);
  const std::size_t max_t = std::min(options.max_time_width, frames);
  m.freq_width = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(max_f)));
  m.freq_offset = static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<std::int64_t>(kNumMels - m.freq_width)));
  m.time_width = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(max_t)));
  m.time_offset = static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<std::int64_t>(frames - m.time_width)));
  return m;
}

void apply_spec_augment(FeatureMatrix& f, const SpecAugmentMasks& masks) {
  for (std::size_t m = masks.freq_offset; m < masks.freq_offset + masks.freq_width; ++m) {
    std::fill_n(f.data.begin() + static_cast<std::ptrdiff_t>(m * f.frames), f.frames, 0.0f);
  }
  for (std::size_t m = 0; m < kNumMels; ++m) {
    for (std::size_t t = masks.time_offset; t < masks.time_offset + masks.time_width; ++t) {
      f.at(m, t) = 0.0f;
    }
  }
}

FeatureMatrix spec_augment(FeatureMatrix f, Rng& rng, const SpecAugmentOptions& options) {
  apply_spec_augment(f, draw_spec_augment(f.frames, rng, options));
  return f;
}

FeatureMatrix extract_features(const Utterance& u) { return cms(log_mel(u)); }

}  // namespace ndal
