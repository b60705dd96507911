// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ndal/audio.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "ndal/error.hpp"

namespace ndal {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}

}  // namespace

Utterance load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "cannot open " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                         std::istreambuf_iterator<char>());
  const std::string where = path.string();
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    fail(ErrorCode::kUnsupportedFormat, where + ": not a RIFF/WAVE file");
  }
  if (read_u32(bytes.data() + 4) + 8ULL != bytes.size()) {
    fail(ErrorCode::kCorruptFile, where + ": RIFF size does not match file length");
  }

  bool have_fmt = false;
  std::uint16_t channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = read_u32(chunk + 4);
    if (pos + 8 + static_cast<std::size_t>(size) > bytes.size()) {
      fail(ErrorCode::kCorruptFile, where + ": chunk length exceeds file");
    }
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) fail(ErrorCode::kCorruptFile, where + ": short fmt chunk");
      std::uint16_t format = read_u16(chunk + 8);
      channels = read_u16(chunk + 10);
      rate = read_u32(chunk + 12);
      bits = read_u16(chunk + 22);
      if (format == kFormatExtensible && size >= 40) format = read_u16(chunk + 32);
      if (format != kFormatPcm || bits != 16 || channels == 0) {
        fail(ErrorCode::kUnsupportedFormat,
             where + ": only 16-bit integer PCM is supported");
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_size = size;
    }
    pos += 8 + size + (size & 1u);
  }
  if (!have_fmt || data == nullptr) {
    fail(ErrorCode::kCorruptFile, where + ": missing fmt or data chunk");
  }
  if (rate != static_cast<std::uint32_t>(kSampleRate)) {
    fail(ErrorCode::kUnsupportedRate,
         where + ": sample rate " + std::to_string(rate) + " (expected 16000)");
  }
  const std::size_t frame_bytes = 2u * channels;
  if (data_size % frame_bytes != 0) {
    fail(ErrorCode::kCorruptFile, where + ": data length is not a whole number of frames");
  }
  const std::size_t frames = data_size / frame_bytes;
  if (frames == 0) fail(ErrorCode::kCorruptFile, where + ": no samples");

  Utterance u;
  u.source_path = where;
  u.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      acc += static_cast<std::int16_t>(read_u16(data + i * frame_bytes + 2 * c));
    }
    u.samples[i] = static_cast<float>(acc / channels / 32768.0);
  }
  return u;
}

void write_wav(const std::filesystem::path& path, std::span<const float> samples,
               int sample_rate) {
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put_u32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(sample_rate));
  put_u32(out, static_cast<std::uint32_t>(sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, data_bytes);
  for (float s : samples) {
    const double v = std::clamp(std::nearbyint(static_cast<double>(s) * 32768.0), -32768.0,
                                32767.0);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorCode::kIoError, "cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) fail(ErrorCode::kIoError, "write failed: " + path.string());
}

double rms(std::span<const float> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (float v : x) acc += static_cast<double>(v) * v;
  return std::sqrt(acc / static_cast<double>(x.size()));
}

Utterance crop_segment(const Utterance& u, double seconds, Rng& rng) {
  if (!(seconds > 0.0)) fail(ErrorCode::kInvalidArgument, "crop_segment: seconds must be > 0");
  if (u.samples.empty()) fail(ErrorCode::kTooShort, "crop_segment: empty utterance");
  const auto target = static_cast<std::size_t>(std::llround(seconds * u.sample_rate));
  Utterance out = u;
  out.samples.resize(target);
  const std::size_t len = u.samples.size();
  if (len >= target) {
    const auto start = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(len - target)));
    std::copy_n(u.samples.begin() + static_cast<std::ptrdiff_t>(start), target,
                out.samples.begin());
  } else {
    for (std::size_t i = 0; i < target; ++i) out.samples[i] = u.samples[i % len];
  }
  return out;
}

std::vector<float> fit_noise(std::span<const float> noise, std::size_t length,
                             std::size_t offset) {
  if (noise.empty()) fail(ErrorCode::kSilentNoise, "fit_noise: empty noise signal");
  std::vector<float> out(length);
  for (std::size_t i = 0; i < length; ++i) out[i] = noise[(offset + i) % noise.size()];
  return out;
}

double measured_snr_db(std::span<const float> signal, std::span<const float> noise) {
  return 20.0 * std::log10(rms(signal) / rms(noise));
}

MixResult mix_at_snr(const Utterance& clean, std::span<const float> noise, double snr_db,
                     std::size_t noise_offset) {
  if (!std::isfinite(snr_db)) fail(ErrorCode::kInvalidArgument, "mix_at_snr: SNR must be finite");
  const std::vector<float> fitted = fit_noise(noise, clean.samples.size(), noise_offset);
  const double noise_rms = rms(fitted);
  if (!(noise_rms > 0.0)) fail(ErrorCode::kSilentNoise, "mix_at_snr: noise segment is silent");

  MixResult result;
  result.mixture = clean;
  result.mixture.aug_label = AugLabel::kAugmented;
  const double clean_rms = rms(clean.samples);
  if (!(clean_rms > 0.0)) {
    spdlog::warn("mix_at_snr: silent clean input {}; returned unchanged", clean.source_path);
    result.silent_clean = true;
    return result;
  }
  const double gain = clean_rms / (noise_rms * std::pow(10.0, snr_db / 20.0));
  result.noise_gain = gain;
  std::vector<double> mixed(fitted.size());
  double peak = 0.0;
  for (std::size_t i = 0; i < mixed.size(); ++i) {
    mixed[i] = static_cast<double>(clean.samples[i]) + gain * fitted[i];
    peak = std::max(peak, std::abs(mixed[i]));
  }
  if (peak > 1.0) {
    result.peak_normalized = true;
    result.peak_scale = 1.0 / peak;
  }
  for (std::size_t i = 0; i < mixed.size(); ++i) {
    result.mixture.samples[i] = static_cast<float>(mixed[i] * result.peak_scale);
  }
  return result;
}

}  // namespace ndal
