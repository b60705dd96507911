// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ndal/run_config.hpp"

#include <spdlog/fmt/fmt.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "ndal/error.hpp"

namespace ndal {

namespace {
std::string trim(const std::string& s);
[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* want);
}  // namespace

std::uint64_t config_count(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
  return out;
}

double config_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used == v.size() && std::isfinite(out)) return out;
  } catch (const std::exception&) {
  }
  bad_value(key, v, "a finite number");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* want) {
  fail(ErrorCode::kConfigError, "config key '" + key + "': expected " + want + ", got '" + value + "'");
}

std::uint64_t to_u64(const std::string& key, const std::string& v) { return config_count(key, v); }
double to_double(const std::string& key, const std::string& v) { return config_real(key, v); }

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v, "true or false");
}

std::vector<std::size_t> to_list(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(static_cast<std::size_t>(to_u64(key, trim(item))));
  if (out.empty()) bad_value(key, v, "a comma-separated list of integers");
  return out;
}

std::string list_text(const std::vector<std::size_t>& v) { return fmt::format("{}", fmt::join(v, ",")); }

struct Field {
  const char* key;
  std::function<void(RunConfig&, const std::string&, const std::filesystem::path&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Field number(const char* key, T RunConfig::*member) {
  return {key,
          [key, member](RunConfig& c, const std::string& v, const std::filesystem::path&) {
            if constexpr (std::is_floating_point_v<T>) {
              c.*member = to_double(key, v);
            } else {
              c.*member = static_cast<T>(to_u64(key, v));
            }
          },
          [member](const RunConfig& c) { return fmt::format("{}", c.*member); }};
}

Field flag(const char* key, bool RunConfig::*member) {
  return {key, [key, member](RunConfig& c, const std::string& v, const std::filesystem::path&) { c.*member = to_bool(key, v); },
          [member](const RunConfig& c) { return std::string(c.*member ? "true" : "false"); }};
}

Field list(const char* key, std::vector<std::size_t> RunConfig::*member) {
  return {key, [key, member](RunConfig& c, const std::string& v, const std::filesystem::path&) { c.*member = to_list(key, v); },
          [member](const RunConfig& c) { return list_text(c.*member); }};
}

Field path(const char* key, std::filesystem::path RunConfig::*member) {
  return {key,
          [member](RunConfig& c, const std::string& v, const std::filesystem::path& base) {
            std::filesystem::path p(v);
            c.*member = (p.is_relative() && !base.empty() && !v.empty()) ? base / p : p;
          },
          [member](const RunConfig& c) { return (c.*member).generic_string(); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      number("seed", &RunConfig::seed),
      path("train_manifest", &RunConfig::train_manifest),
      path("test_manifest", &RunConfig::test_manifest),
      path("noise_manifest", &RunConfig::noise_manifest),
      path("trials", &RunConfig::trials),
      number("speakers_per_batch", &RunConfig::speakers_per_batch),
      number("segment_seconds", &RunConfig::segment_seconds),
      number("snr_min_db", &RunConfig::snr_min_db),
      number("snr_max_db", &RunConfig::snr_max_db),
      flag("spec_augment", &RunConfig::spec_augment),
      number("freq_mask_max", &RunConfig::freq_mask_max),
      number("time_mask_max", &RunConfig::time_mask_max),
      {"mode", [](RunConfig& c, const std::string& v, const std::filesystem::path&) { c.mode = parse_train_mode(v); },
       [](const RunConfig& c) { return std::string(to_string(c.mode)); }},
      list("channels", &RunConfig::channels),
      list("kernels", &RunConfig::kernels),
      list("dilations", &RunConfig::dilations),
      number("embedding_dim", &RunConfig::embedding_dim),
      number("attention_hidden", &RunConfig::attention_hidden),
      number("encoder_hidden", &RunConfig::encoder_hidden),
      number("irrelevant_dim", &RunConfig::irrelevant_dim),
      number("aam_scale", &RunConfig::aam_scale),
      number("aam_margin", &RunConfig::aam_margin),
      number("domain_hidden", &RunConfig::domain_hidden),
      number("grl_lambda", &RunConfig::grl_lambda),
      flag("grl_ramp", &RunConfig::grl_ramp),
      number("grl_ramp_fraction", &RunConfig::grl_ramp_fraction),
      flag("fr_stop_gradient", &RunConfig::fr_stop_gradient),
      {"optimizer",
       [](RunConfig& c, const std::string& v, const std::filesystem::path&) {
         if (v != "adam" && v != "sgd") bad_value("optimizer", v, "adam or sgd");
         c.optimizer = v;
       },
       [](const RunConfig& c) { return c.optimizer; }},
      number("lr", &RunConfig::lr),
      number("lr_decay", &RunConfig::lr_decay),
      number("weight_decay", &RunConfig::weight_decay),
      number("epochs", &RunConfig::epochs),
      number("max_steps", &RunConfig::max_steps),
      number("checkpoint_every", &RunConfig::checkpoint_every),
      number("log_every", &RunConfig::log_every),
      flag("corrupt_both_sides", &RunConfig::corrupt_both_sides),
  };
  return table;
}

}  // namespace

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::kConfigError, fmt::format("config line {}: expected 'key = value'", lineno));
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(ErrorCode::kConfigError, fmt::format("config line {}: empty key", lineno));
    if (!out.emplace(key, value).second) {
      fail(ErrorCode::kConfigError, fmt::format("config line {}: duplicate key '{}'", lineno, key));
    }
  }
  return out;
}

void RunConfig::apply(const std::map<std::string, std::string>& values,
                      const std::filesystem::path& base_dir) {
  for (const auto& [key, value] : values) {
    const Field* field = nullptr;
    for (const Field& f : fields()) {
      if (key == f.key) field = &f;
    }
    if (field == nullptr) fail(ErrorCode::kConfigError, "unknown config key '" + key + "'");
    field->set(*this, value, base_dir);
  }
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const Field& f : fields()) out += fmt::format("{} = {}\n", f.key, f.get(*this));
  return out;
}

void RunConfig::validate() const {
  auto bad = [](const std::string& why) { fail(ErrorCode::kConfigError, "config: " + why); };
  if (speakers_per_batch < 2) bad("speakers_per_batch must be >= 2");
  if (!(segment_seconds >= 0.1)) bad("segment_seconds must be >= 0.1");
  if (!(snr_min_db <= snr_max_db)) bad("snr_min_db must be <= snr_max_db");
  if (!(lr > 0.0)) bad("lr must be > 0");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) bad("lr_decay must be in (0, 1]");
  if (!(weight_decay >= 0.0)) bad("weight_decay must be >= 0");
  if (epochs == 0 && max_steps == 0) bad("epochs or max_steps must be > 0");
  if (!(grl_lambda > 0.0)) bad("grl_lambda must be > 0");
  model_config(2).validate();
}

ModelConfig RunConfig::model_config(std::size_t num_speakers) const {
  ModelConfig m;
  m.mode = mode;
  m.backbone.channels = channels;
  m.backbone.kernels = kernels;
  m.backbone.dilations = dilations;
  m.backbone.embedding_dim = embedding_dim;
  m.backbone.attention_hidden = attention_hidden;
  m.disentangle.hidden = encoder_hidden;
  m.disentangle.irrelevant_dim = irrelevant_dim;
  m.aam.num_speakers = num_speakers;
  m.aam.scale = aam_scale;
  m.aam.margin = aam_margin;
  m.domain.hidden = domain_hidden;
  m.domain.grl_lambda = grl_lambda;
  m.domain.grl_ramp = grl_ramp;
  m.domain.ramp_fraction = grl_ramp_fraction;
  m.fr_stop_gradient = fr_stop_gradient;
  return m;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIoError, "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.parent_path());
}

RunConfig RunConfig::parse(const std::string& text, const std::filesystem::path& base_dir) {
  RunConfig c;
  c.apply(parse_key_values(text), base_dir);
  c.validate();
  return c;
}

}  // namespace ndal
