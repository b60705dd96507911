// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ndal/trainer.hpp"

#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <ostream>

#include "ndal/error.hpp"

NDAL_CORE_NAMESPACE_BEGIN

namespace fs = std::filesystem;

BatchSpec BatchSpec::from(const RunConfig& config) {
  BatchSpec s;
  s.speakers_per_batch = config.speakers_per_batch;
  s.segment_seconds = config.segment_seconds;
  s.snr_min_db = config.snr_min_db;
  s.snr_max_db = config.snr_max_db;
  s.spec_augment = config.spec_augment;
  s.masks.max_freq_width = config.freq_mask_max;
  s.masks.max_time_width = config.time_mask_max;
  return s;
}

TrainingData::TrainingData(const Manifest& manifest) {
  const auto labels = manifest.speaker_labels();
  by_speaker_.resize(labels.size());
  for (const ManifestEntry& e : manifest.entries) {
    Utterance u = load_wav(e.path);
    u.speaker = labels.at(e.speaker_id);
    by_speaker_[static_cast<std::size_t>(u.speaker)].push_back(utterances_.size());
    utterances_.push_back(std::move(u));
    ids_.push_back(e.utt_id);
  }
}

FeatureBatch build_batch(const TrainingData& data, const NoiseBank& noise, const BatchSpec& spec,
                         Rng& rng) {
  const std::size_t n = spec.speakers_per_batch;
  if (data.num_speakers() < n) {
    fail(ErrorCode::kInsufficientSpeakers,
         fmt::format("batch needs {} speakers, manifest has {}", n, data.num_speakers()));
  }
  std::vector<std::size_t> speakers(data.num_speakers());
  for (std::size_t i = 0; i < speakers.size(); ++i) speakers[i] = i;
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(speakers.size()) - 1));
    std::swap(speakers[i], speakers[j]);
  }

  FeatureBatch b;
  std::vector<std::vector<float>> clean, noisy;
  std::size_t frames = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& pool = data.of_speaker(speakers[i]);
    const std::size_t idx =
        pool[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1))];
    const Utterance segment = crop_segment(data.utterance(idx), spec.segment_seconds, rng);

    const NoiseClip& clip = noise.draw(NoiseSplit::kTrain, rng);
    const double snr = rng.uniform(spec.snr_min_db, spec.snr_max_db);
    const auto offset = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(clip.samples.size()) - 1));
    const MixResult mix = mix_at_snr(segment, clip.samples, snr, offset);

    FeatureMatrix fc = cms(log_mel(segment));
    FeatureMatrix fn = cms(log_mel(mix.mixture));
    if (spec.spec_augment) {
      fc = spec_augment(std::move(fc), rng, spec.masks);
      fn = spec_augment(std::move(fn), rng, spec.masks);
    }
    frames = fc.frames;
    clean.push_back(std::move(fc.data));
    noisy.push_back(std::move(fn.data));
    b.pair.speakers.push_back(data.utterance(idx).speaker);
    b.utt_ids.push_back(data.utt_id(idx));
    b.noise_ids.push_back(clip.noise_id);
    b.snr_db.push_back(snr);
  }
  b.pair.clean = stack_features(clean, kNumMels, frames);
  b.pair.noisy = stack_features(noisy, kNumMels, frames);
  b.clean_aug.assign(n, static_cast<std::int64_t>(AugLabel::kRaw));
  b.noisy_aug.assign(n, static_cast<std::int64_t>(AugLabel::kAugmented));
  return b;
}

double lr_at_epoch(std::size_t epoch, double lr, double decay) {
  return lr * std::pow(decay, static_cast<double>(epoch));
}

double lambda_at_step(std::uint64_t step, std::uint64_t total_steps, const DomainClassifierConfig& cfg) {
  if (!cfg.grl_ramp) return cfg.grl_lambda;
  const double ramp = std::max(1.0, std::ceil(cfg.ramp_fraction * static_cast<double>(total_steps)));
  return cfg.grl_lambda * std::min(1.0, static_cast<double>(step + 1) / ramp);
}

LossBreakdown train_step(NdalModel& model, Optimizer& optimizer, const PairedBatch& batch,
                         const ObjectiveOptions& options) {
  Tape tape;
  model.params().zero_grad();
  Objective obj;
  try {
    obj = ndal_objective(model, tape, batch, options);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kNonFinite) fail(ErrorCode::kNonFiniteLoss, e.what());
    throw;
  }
  tape.backward(obj.value);
  const std::vector<Parameter*> params = model.params().trainable();
  optimizer.init(params);
  optimizer.step(params);
  return obj.parts;
}

OptimizerOptions optimizer_options(const RunConfig& config) {
  OptimizerOptions o;
  o.kind = config.optimizer == "sgd" ? OptimizerKind::kSgd : OptimizerKind::kAdam;
  o.lr = config.lr;
  o.weight_decay = config.weight_decay;
  return o;
}

void write_loss_header(std::ostream& out) { out << "step,l_rec,l_fr,l_cls,l_adv,l_total,lambda,lr\n"; }

void write_loss_row(std::ostream& out, std::uint64_t step, const LossBreakdown& p, double lr) {
  out << fmt::format("{},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g}\n", step, p.l_rec, p.l_fr,
                     p.l_cls, p.l_adv, p.l_total, p.lambda, lr);
}

std::uint64_t model_hash(const NdalModel& model) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const ParameterStore& store = model.params();
  for (std::size_t i = 0; i < store.size(); ++i) {
    h = fnv1a64(store[i].name.data(), store[i].name.size(), h);
    h = fnv1a64(store[i].value.ptr(), store[i].value.numel() * sizeof(Real), h);
  }
  return h;
}

// ---------------------------------------------------------------------------
// Checkpoint serialization.

namespace {

constexpr char kMagic[8] = {'N', 'D', 'A', 'L', 'C', 'K', 'P', 'T'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  template <typename T>
  void pod(T v) {
    bytes(&v, sizeof(T));
  }
  void str(const std::string& s) {
    pod<std::uint64_t>(s.size());
    bytes(s.data(), s.size());
  }
  void tensor(const Tensor& t) {
    pod<std::uint64_t>(t.rank());
    for (std::size_t d : t.shape()) pod<std::uint64_t>(d);
    bytes(t.ptr(), t.numel() * sizeof(Real));
  }
  const std::vector<char>& buffer() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  Reader(const std::vector<char>& buf, std::size_t end, std::string source)
      : buf_(buf), end_(end), source_(std::move(source)) {}
  void bytes(void* p, std::size_t n) {
    if (n > end_ - pos_) fail(ErrorCode::kIoError, "checkpoint " + source_ + " is truncated");
    std::memcpy(p, buf_.data() + pos_, n);
    pos_ += n;
  }
  template <typename T>
  T pod() {
    T v;
    bytes(&v, sizeof(T));
    return v;
  }
  std::string str() {
    const auto n = pod<std::uint64_t>();
    if (n > end_ - pos_) fail(ErrorCode::kIoError, "checkpoint " + source_ + " is truncated");
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  Tensor tensor() {
    const auto rank = pod<std::uint64_t>();
    if (rank > 8) fail(ErrorCode::kIoError, "checkpoint " + source_ + ": bad tensor rank");
    Shape shape(rank);
    std::size_t numel = 1;
    for (auto& d : shape) {
      d = pod<std::uint64_t>();
      numel *= d;
    }
    if (numel > (end_ - pos_) / sizeof(Real)) {
      fail(ErrorCode::kIoError, "checkpoint " + source_ + " is truncated");
    }
    Tensor t(shape);
    bytes(t.ptr(), numel * sizeof(Real));
    return t;
  }
  bool at_end() const { return pos_ == end_; }

 private:
  const std::vector<char>& buf_;
  std::size_t end_;
  std::size_t pos_ = 0;
  std::string source_;
};

}  // namespace

void save_checkpoint(const fs::path& path, const RunConfig& config, const NdalModel& model,
                     const Optimizer& optimizer, std::uint64_t step) {
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.pod<std::uint32_t>(kCheckpointVersion);
  w.pod<std::uint32_t>(sizeof(Real));
  w.pod<std::uint64_t>(step);
  w.pod<std::uint64_t>(config.seed);
  w.pod<std::uint64_t>(model.config().aam.num_speakers);
  w.pod<std::uint64_t>(optimizer.step_count());
  w.str(config.to_text());
  const ParameterStore& store = model.params();
  w.pod<std::uint64_t>(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    w.str(store[i].name);
    w.pod<std::uint8_t>(store[i].trainable ? 1 : 0);
    w.tensor(store[i].value);
  }
  w.pod<std::uint64_t>(optimizer.moments().size());
  for (const auto& [name, m] : optimizer.moments()) {
    w.str(name);
    w.tensor(m.first);
    w.tensor(m.second);
  }
  const std::uint64_t sum = fnv1a64(w.buffer().data(), w.buffer().size());
  w.pod(sum);

  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
    if (!out) fail(ErrorCode::kIoError, "cannot write checkpoint " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::kIoError, "cannot move checkpoint into " + path.string() + ": " + ec.message());
}

Checkpoint load_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "cannot read checkpoint " + path.string());
  const std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string src = path.string();

  if (buf.size() < sizeof(kMagic) + 8 || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0) {
    fail(ErrorCode::kVersionMismatch, src + " is not an NDAL checkpoint");
  }
  std::uint32_t version = 0, width = 0;
  std::memcpy(&version, buf.data() + 8, 4);
  std::memcpy(&width, buf.data() + 12, 4);
  if (version != kCheckpointVersion) {
    fail(ErrorCode::kVersionMismatch,
         fmt::format("{}: checkpoint version {}, expected {}", src, version, kCheckpointVersion));
  }
  if (width != sizeof(Real)) {
    fail(ErrorCode::kVersionMismatch,
         fmt::format("{}: {}-byte scalars, this build uses {}", src, width, sizeof(Real)));
  }
  if (buf.size() < 8 + 8 + 8) fail(ErrorCode::kIoError, src + " is truncated");
  const std::size_t body = buf.size() - 8;
  std::uint64_t stored = 0;
  std::memcpy(&stored, buf.data() + body, 8);
  if (stored != fnv1a64(buf.data(), body)) fail(ErrorCode::kIoError, src + ": checksum mismatch");

  Reader r(buf, body, src);
  char skip[16];
  r.bytes(skip, 16);
  Checkpoint c;
  c.step = r.pod<std::uint64_t>();
  r.pod<std::uint64_t>();  // seed, also present in the config text
  c.num_speakers = r.pod<std::uint64_t>();
  const auto opt_steps = r.pod<std::uint64_t>();
  c.config = RunConfig::parse(r.str());
  c.model = std::make_unique<NdalModel>(c.config.model_config(c.num_speakers), 0);
  ParameterStore& store = c.model->params();
  const auto n = r.pod<std::uint64_t>();
  if (n != store.size()) {
    fail(ErrorCode::kIoError, fmt::format("{}: {} tensors, model expects {}", src, n, store.size()));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::string name = r.str();
    const bool trainable = r.pod<std::uint8_t>() != 0;
    Tensor value = r.tensor();
    Parameter* p = store.find(name);
    if (!p || p->trainable != trainable || p->value.shape() != value.shape()) {
      fail(ErrorCode::kIoError, src + ": unexpected tensor " + name);
    }
    p->value = std::move(value);
  }
  c.optimizer = Optimizer(optimizer_options(c.config));
  c.optimizer.set_step_count(opt_steps);
  const auto m = r.pod<std::uint64_t>();
  for (std::size_t i = 0; i < m; ++i) {
    const std::string name = r.str();
    Moments mo;
    mo.first = r.tensor();
    mo.second = r.tensor();
    c.optimizer.moments().emplace(name, std::move(mo));
  }
  if (!r.at_end()) fail(ErrorCode::kIoError, src + ": trailing bytes");
  return c;
}

// ---------------------------------------------------------------------------

Trainer::Trainer(RunConfig config, std::shared_ptr<const TrainingData> data,
                 std::shared_ptr<const NoiseBank> noise)
    : Trainer(std::move(config), std::move(data), std::move(noise), nullptr) {}

Trainer::Trainer(RunConfig config, std::shared_ptr<const TrainingData> data,
                 std::shared_ptr<const NoiseBank> noise, Checkpoint* from)
    : config_(std::move(config)),
      data_(std::move(data)),
      noise_(std::move(noise)),
      batch_spec_(BatchSpec::from(config_)),
      optimizer_(optimizer_options(config_)) {
  config_.validate();
  if (data_->num_speakers() < config_.speakers_per_batch) {
    fail(ErrorCode::kInsufficientSpeakers,
         fmt::format("speakers_per_batch = {} but the training manifest has {} speakers",
                     config_.speakers_per_batch, data_->num_speakers()));
  }
  if (from) {
    if (from->num_speakers != data_->num_speakers()) {
      fail(ErrorCode::kConfigError,
           fmt::format("checkpoint has {} speaker classes, training data {}", from->num_speakers,
                       data_->num_speakers()));
    }
    model_ = std::move(from->model);
    optimizer_ = std::move(from->optimizer);
    step_ = from->step;
  } else {
    model_ = std::make_unique<NdalModel>(config_.model_config(data_->num_speakers()),
                                         derive_seed(config_.seed, "model"));
  }
}

Trainer Trainer::resume(const fs::path& checkpoint, std::shared_ptr<const TrainingData> data,
                        std::shared_ptr<const NoiseBank> noise) {
  Checkpoint c = load_checkpoint(checkpoint);
  RunConfig cfg = c.config;
  return Trainer(std::move(cfg), std::move(data), std::move(noise), &c);
}

std::size_t Trainer::steps_per_epoch() const {
  return (data_->num_utterances() + config_.speakers_per_batch - 1) / config_.speakers_per_batch;
}

std::uint64_t Trainer::total_steps() const {
  if (config_.max_steps > 0) return config_.max_steps;
  return static_cast<std::uint64_t>(config_.epochs) * steps_per_epoch();
}

double Trainer::current_lr() const {
  return lr_at_epoch(static_cast<std::size_t>(step_ / steps_per_epoch()), config_.lr, config_.lr_decay);
}

double Trainer::current_lambda() const {
  return lambda_at_step(step_, total_steps(), model_->config().domain);
}

FeatureBatch Trainer::batch_for(std::uint64_t step) const {
  Rng rng(derive_seed(derive_seed(config_.seed, "batch"), step));
  return build_batch(*data_, *noise_, batch_spec_, rng);
}

LossBreakdown Trainer::train_one() {
  const FeatureBatch batch = batch_for(step_);
  optimizer_.set_lr(current_lr());
  ObjectiveOptions opts;
  opts.lambda = current_lambda();
  LossBreakdown parts;
  try {
    parts = train_step(*model_, optimizer_, batch.pair, opts);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNonFiniteLoss) throw;
    fail(ErrorCode::kNonFiniteLoss, fmt::format("step {} (utterances {}): {}", step_,
                                                fmt::join(batch.utt_ids, " "), e.what()));
  }
  ++step_;
  return parts;
}

void Trainer::run(const Hooks& hooks, std::uint64_t max_more) {
  for (std::uint64_t k = 0; k < max_more && !done(); ++k) {
    const double lr = current_lr();
    const LossBreakdown parts = train_one();
    if (hooks.loss_csv) write_loss_row(*hooks.loss_csv, step_, parts, lr);
    if (config_.log_every > 0 && (step_ % config_.log_every == 0 || step_ == 1)) {
      spdlog::info("step {}/{} l_total {:.4f} (rec {:.4f} fr {:.4f} cls {:.4f} adv {:.4f}) lr {:.3g}",
                   step_, total_steps(), parts.l_total, parts.l_rec, parts.l_fr, parts.l_cls,
                   parts.l_adv, lr);
    }
    if (hooks.on_step) hooks.on_step(step_, parts);
  }
}

void Trainer::save(const fs::path& path) const {
  save_checkpoint(path, config_, *model_, optimizer_, step_);
}

NDAL_CORE_NAMESPACE_END
