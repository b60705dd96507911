// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

// ndal: corpus generation, training, evaluation and embedding export.

#include <spdlog/fmt/fmt.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "ndal/error.hpp"
#include "ndal/evaluator.hpp"
#include "ndal/manifest.hpp"
#include "ndal/noise_bank.hpp"
#include "ndal/run_config.hpp"
#include "ndal/synth.hpp"
#include "ndal/trainer.hpp"

namespace fs = std::filesystem;
using namespace ndal;

namespace {

constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNonFinite = 4;
constexpr int kExitSplit = 5;

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfigError:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kInsufficientSpeakers:
      return kExitConfig;
    case ErrorCode::kIoError:
    case ErrorCode::kCorruptFile:
    case ErrorCode::kUnsupportedFormat:
    case ErrorCode::kUnsupportedRate:
    case ErrorCode::kVersionMismatch:
      return kExitIo;
    case ErrorCode::kNonFiniteLoss:
      return kExitNonFinite;
    case ErrorCode::kSplitViolation:
      return kExitSplit;
    default:
      return kExitOther;
  }
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIoError, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  out << text;
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path.string());
}

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIoError, "cannot create " + dir.string() + ": " + ec.message());
}

void require(const fs::path& path, const char* what) {
  if (path.empty()) fail(ErrorCode::kConfigError, std::string(what) + " is not set");
}

struct SynthArgs {
  std::string spec;
  std::string out;
  std::uint64_t seed = 1;
};

int cmd_synth(const SynthArgs& a) {
  const SynthSpec spec = a.spec.empty() ? SynthSpec{} : SynthSpec::parse(read_text(a.spec));
  spec.validate();
  const CorpusLayout layout = generate_corpus(spec, a.seed, a.out);
  const std::string conf = fmt::format(
      "# Data section of a run config for this corpus.\n"
      "seed = {}\n"
      "train_manifest = {}\n"
      "test_manifest = {}\n"
      "noise_manifest = {}\n"
      "trials = {}\n",
      a.seed, layout.train_manifest.filename().generic_string(),
      layout.test_manifest.filename().generic_string(),
      layout.noise_manifest.filename().generic_string(), layout.trials.filename().generic_string());
  write_text(layout.root / "corpus.conf", conf);
  spdlog::info("corpus written to {}", layout.root.string());
  return 0;
}

struct TrainArgs {
  std::vector<std::string> configs;
  std::vector<std::string> overrides;
  std::string mode;
  std::string out;
  std::string resume;
};

std::map<std::string, std::string> parse_overrides(const std::vector<std::string>& items) {
  std::string text;
  for (const std::string& item : items) {
    if (item.find('=') == std::string::npos) fail(ErrorCode::kConfigError, "--set expects key=value, got '" + item + "'");
    text += item + '\n';
  }
  return parse_key_values(text);
}

int cmd_train(const TrainArgs& a) {
  const fs::path out(a.out);
  RunConfig config;
  if (a.resume.empty()) {
    if (a.configs.empty()) fail(ErrorCode::kConfigError, "train needs --config or --resume");
    for (const std::string& path : a.configs) {
      config.apply(parse_key_values(read_text(path)), fs::absolute(path).parent_path());
    }
    config.apply(parse_overrides(a.overrides), fs::current_path());
    if (!a.mode.empty()) config.mode = parse_train_mode(a.mode);
  } else {
    if (!a.configs.empty() || !a.overrides.empty() || !a.mode.empty()) {
      fail(ErrorCode::kConfigError, "--resume uses the configuration stored in the checkpoint");
    }
    config = load_checkpoint(a.resume).config;
  }
  config.validate();
  require(config.train_manifest, "train_manifest");
  require(config.noise_manifest, "noise_manifest");

  make_dirs(out / "checkpoints");
  auto data = std::make_shared<const TrainingData>(read_manifest(config.train_manifest));
  auto noise = std::make_shared<const NoiseBank>(NoiseBank::load(config.noise_manifest));
  Trainer trainer = a.resume.empty() ? Trainer(config, data, noise) : Trainer::resume(a.resume, data, noise);
  write_text(out / "config.conf", trainer.config().to_text());

  const fs::path loss_path = out / "loss.csv";
  const bool append = !a.resume.empty() && fs::exists(loss_path);
  std::ofstream loss(loss_path, append ? std::ios::app : std::ios::trunc);
  if (!loss) fail(ErrorCode::kIoError, "cannot write " + loss_path.string());
  if (!append) write_loss_header(loss);

  spdlog::info("training mode {} for {} steps ({} per epoch), {} speakers",
               to_string(trainer.config().mode), trainer.total_steps(), trainer.steps_per_epoch(),
               data->num_speakers());
  const std::size_t every = trainer.config().checkpoint_every;
  Trainer::Hooks hooks;
  hooks.loss_csv = &loss;
  hooks.on_step = [&](std::uint64_t step, const LossBreakdown&) {
    if (every > 0 && step % every == 0) {
      trainer.save(out / "checkpoints" / fmt::format("step-{:08}.ckpt", step));
    }
  };
  trainer.run(hooks);
  loss.flush();
  if (!loss) fail(ErrorCode::kIoError, "error writing " + loss_path.string());
  trainer.save(out / "final.ckpt");
  std::cout << fmt::format("final checkpoint {} (step {}, hash {:016x})\n", (out / "final.ckpt").string(),
                           trainer.step(), model_hash(trainer.model()));
  return 0;
}

struct EvalArgs {
  std::string checkpoint;
  std::string trials;
  std::string conditions = "clean";
  std::string out;
  std::string test_manifest;
  std::string noise_manifest;
  bool both_sides = false;
};

int cmd_eval(const EvalArgs& a) {
  Checkpoint ckpt = load_checkpoint(a.checkpoint);
  const RunConfig& config = ckpt.config;
  const fs::path test_path = a.test_manifest.empty() ? config.test_manifest : fs::path(a.test_manifest);
  const fs::path noise_path = a.noise_manifest.empty() ? config.noise_manifest : fs::path(a.noise_manifest);
  require(test_path, "test_manifest");
  const std::vector<Condition> conditions = parse_conditions(a.conditions);
  const bool noisy = std::any_of(conditions.begin(), conditions.end(), [](const Condition& c) { return !c.clean(); });
  if (noisy) require(noise_path, "noise_manifest");

  const Manifest test = read_manifest(test_path);
  const std::vector<Trial> trials = read_trials(a.trials);
  const NoiseBank bank = noisy ? NoiseBank::load(noise_path) : NoiseBank({});
  EvalOptions options;
  options.corrupt_both_sides = a.both_sides || config.corrupt_both_sides;
  options.seed = config.seed;
  const std::vector<EerRow> rows = run_trials(trials, test, bank, conditions, *ckpt.model, options);

  std::ofstream csv(a.out, std::ios::trunc);
  if (!csv) fail(ErrorCode::kIoError, "cannot write " + a.out);
  write_eer_csv(csv, rows);
  csv.flush();
  if (!csv) fail(ErrorCode::kIoError, "error writing " + a.out);
  std::cout << format_eer_table(rows);
  return 0;
}

struct ExportArgs {
  std::string checkpoint;
  std::string manifest;
  std::string condition = "clean";
  std::string noise_manifest;
  std::string out;
};

int cmd_export(const ExportArgs& a) {
  Checkpoint ckpt = load_checkpoint(a.checkpoint);
  const fs::path manifest_path = a.manifest.empty() ? ckpt.config.test_manifest : fs::path(a.manifest);
  require(manifest_path, "test_manifest");
  const std::vector<Condition> conditions = parse_conditions(a.condition);
  if (conditions.size() != 1) fail(ErrorCode::kConfigError, "export takes exactly one condition");
  const Manifest manifest = read_manifest(manifest_path);
  std::vector<std::string> ids;
  for (const ManifestEntry& e : manifest.entries) ids.push_back(e.utt_id);
  std::unique_ptr<NoiseBank> bank;
  if (!conditions[0].clean()) {
    const fs::path noise_path = a.noise_manifest.empty() ? ckpt.config.noise_manifest : fs::path(a.noise_manifest);
    require(noise_path, "noise_manifest");
    bank = std::make_unique<NoiseBank>(NoiseBank::load(noise_path));
  }
  export_embeddings(ids, manifest, bank.get(), conditions[0], *ckpt.model, a.out, ckpt.config.seed);
  spdlog::info("{} embeddings written to {}", ids.size(), a.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_st("ndal"));

  CLI::App app{"Noise-robust speaker verification: corpus synthesis, training, evaluation."};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off")->capture_default_str();

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic corpus, noise bank and trial list");
  s->add_option("--spec", synth.spec, "key = value corpus spec (defaults when omitted)");
  s->add_option("--out", synth.out, "output directory")->required();
  s->add_option("--seed", synth.seed, "corpus seed")->capture_default_str();

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train a model and write checkpoints and a loss log");
  t->add_option("--config", train.configs, "run config; repeat to layer files");
  t->add_option("--set", train.overrides, "key=value override applied after the config files");
  t->add_option("--mode", train.mode, "ndal | joint | wo-al | wo-dis (overrides the config)")
      ->check(CLI::IsMember({"ndal", "joint", "wo-al", "wo-dis"}));
  t->add_option("--resume", train.resume, "continue from a checkpoint");
  t->add_option("--out", train.out, "output directory")->required();

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Score a trial list under clean and noisy test conditions");
  e->add_option("--checkpoint", eval.checkpoint, "model checkpoint")->required();
  e->add_option("--trials", eval.trials, "trial list")->required();
  e->add_option("--conditions", eval.conditions, "e.g. \"clean;brown:0,5;machine\"")->capture_default_str();
  e->add_option("--out", eval.out, "EER CSV")->required();
  e->add_option("--test-manifest", eval.test_manifest, "overrides the checkpoint's test_manifest");
  e->add_option("--noise-manifest", eval.noise_manifest, "overrides the checkpoint's noise_manifest");
  e->add_flag("--both-sides", eval.both_sides, "corrupt enrollment utterances too");

  ExportArgs exp;
  auto* x = app.add_subcommand("export", "Write per-utterance embeddings as CSV");
  x->add_option("--checkpoint", exp.checkpoint, "model checkpoint")->required();
  x->add_option("--manifest", exp.manifest, "utterance manifest (default: the checkpoint's test_manifest)");
  x->add_option("--condition", exp.condition, "single condition, e.g. clean or brown:5")->capture_default_str();
  x->add_option("--noise-manifest", exp.noise_manifest, "overrides the checkpoint's noise_manifest");
  x->add_option("--out", exp.out, "embedding CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& h) {
    return app.exit(h);
  } catch (const CLI::CallForAllHelp& h) {
    return app.exit(h);
  } catch (const CLI::ParseError& err) {
    const CLI::App* scope = &app;
    for (const CLI::App* sub : app.get_subcommands()) scope = sub;
    std::cerr << err.what() << "\n\n" << scope->help();
    return kExitConfig;
  }

  spdlog::set_level(spdlog::level::from_str(log_level));
  try {
    if (*s) return cmd_synth(synth);
    if (*t) return cmd_train(train);
    if (*e) return cmd_eval(eval);
    if (*x) return cmd_export(exp);
  } catch (const Error& err) {
    spdlog::error("{}", err.what());
    return exit_code(err.code());
  } catch (const std::exception& err) {
    spdlog::error("{}", err.what());
    return kExitOther;
  }
  return kExitOther;
}
