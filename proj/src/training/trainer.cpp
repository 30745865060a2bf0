#include "dsgan/training/trainer.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dsgan/core/error.hpp"
#include "dsgan/data/png_io.hpp"
#include "dsgan/training/losses.hpp"

namespace dsgan {
namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over (seed, stream)
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kStreamGenerator = 1, kStreamDiscriminator = 2, kStreamNoise = 3,
                        kStreamSheet = 4;

double mean_of(const Tensor& t) {
  double s = 0.0;
  for (double v : t.values()) s += v;
  return t.empty() ? 0.0 : s / static_cast<double>(t.size());
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end)
    throw ValidationError("invalid value for '" + key + "': '" + text + "'");
  return value;
}

std::string rng_text(const std::mt19937_64& rng) {
  std::ostringstream out;
  out << rng;
  return out.str();
}

void store_adam(Checkpoint& ck, const Network& net, const Adam& opt, const std::string& prefix) {
  std::size_t slot = 0;
  for (const auto& p : net.parameters()) {
    if (!p.trainable) continue;
    const auto& s = p.value.shape();
    const std::vector<std::uint64_t> shape{s.n, s.c, s.h, s.w};
    const auto& m = opt.first_moments()[slot].values();
    const auto& v = opt.second_moments()[slot].values();
    ck.arrays.push_back({prefix + ".adam.m." + p.name, shape, {m.begin(), m.end()}});
    ck.arrays.push_back({prefix + ".adam.v." + p.name, shape, {v.begin(), v.end()}});
    ++slot;
  }
  ck.meta.set(prefix + ".adam.steps", std::to_string(opt.steps()));
}

void restore_adam(const Checkpoint& ck, const Network& net, Adam& opt, const std::string& prefix) {
  std::size_t slot = 0;
  for (const auto& p : net.parameters()) {
    if (!p.trainable) continue;
    for (auto [tag, buffers] : {std::pair{".adam.m.", &opt.first_moments()},
                                std::pair{".adam.v.", &opt.second_moments()}}) {
      const NamedArray* a = ck.find(prefix + tag + p.name);
      if (a == nullptr) throw ValidationError("checkpoint lacks optimizer state for " + prefix + "." + p.name);
      Tensor& dst = (*buffers)[slot];
      if (a->data.size() != dst.size())
        throw ValidationError("optimizer state shape mismatch for " + prefix + "." + p.name);
      std::copy(a->data.begin(), a->data.end(), dst.data());
    }
    ++slot;
  }
  const std::string key = prefix + ".adam.steps";
  opt.set_steps(parse_number<std::uint64_t>(key, ck.meta.require(key)));
}

bool all_finite(const Network& net) {
  for (const auto& p : net.parameters())
    for (double v : p.value.values())
      if (!std::isfinite(v)) return false;
  return true;
}

std::string epoch_tag(std::uint64_t epoch) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04llu", static_cast<unsigned long long>(epoch));
  return buf;
}

}  // namespace

void TrainConfig::validate() const {
  auto positive = [](const char* key, double v) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(std::string(key) + " must be > 0");
  };
  auto at_least_one = [](const char* key, std::size_t v) {
    if (v < 1) throw ValidationError(std::string(key) + " must be >= 1");
  };
  positive("learning_rate", learning_rate);
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ValidationError("beta1 must be in [0,1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ValidationError("beta2 must be in [0,1)");
  if (!(l2_lambda >= 0.0) || !std::isfinite(l2_lambda)) throw ValidationError("l2_lambda must be >= 0");
  at_least_one("batch_size", batch_size);
  at_least_one("epochs", epochs);
  at_least_one("minibatches_per_epoch", minibatches_per_epoch);
  at_least_one("d_steps_per_g_step", d_steps_per_g_step);
  at_least_one("checkpoint_every", checkpoint_every);
  at_least_one("sample_every", sample_every);
}

void TrainConfig::to_text(KeyValueText& kv) const {
  kv.set("learning_rate", format_double(learning_rate));
  kv.set("beta1", format_double(beta1));
  kv.set("beta2", format_double(beta2));
  kv.set("l2_lambda", format_double(l2_lambda));
  kv.set("batch_size", std::to_string(batch_size));
  kv.set("epochs", std::to_string(epochs));
  kv.set("minibatches_per_epoch", std::to_string(minibatches_per_epoch));
  kv.set("d_steps_per_g_step", std::to_string(d_steps_per_g_step));
  kv.set("seed", std::to_string(seed));
  kv.set("checkpoint_every", std::to_string(checkpoint_every));
  kv.set("sample_every", std::to_string(sample_every));
}

void TrainConfig::update_from(const KeyValueText& kv) {
  auto real = [&](const char* key, double& dst) {
    if (auto v = kv.get(key)) dst = parse_number<double>(key, *v);
  };
  auto count = [&](const char* key, std::size_t& dst) {
    if (auto v = kv.get(key)) dst = parse_number<std::size_t>(key, *v);
  };
  real("learning_rate", learning_rate);
  real("beta1", beta1);
  real("beta2", beta2);
  real("l2_lambda", l2_lambda);
  count("batch_size", batch_size);
  count("epochs", epochs);
  count("minibatches_per_epoch", minibatches_per_epoch);
  count("d_steps_per_g_step", d_steps_per_g_step);
  if (auto v = kv.get("seed")) seed = parse_number<std::uint64_t>("seed", *v);
  count("checkpoint_every", checkpoint_every);
  count("sample_every", sample_every);
}

std::string train_log_header() {
  return "step,epoch,loss_G,loss_D,mean_D_real,mean_D_fake,wall_time_s";
}

std::string train_log_row(const TrainLogRecord& r) {
  return std::to_string(r.step) + "," + std::to_string(r.epoch) + "," + format_double(r.loss_g) +
         "," + format_double(r.loss_d) + "," + format_double(r.mean_d_real) + "," +
         format_double(r.mean_d_fake) + "," + format_double(r.wall_seconds);
}

Tensor sample_noise(std::mt19937_64& rng, std::size_t count, std::size_t channels,
                    std::size_t h, std::size_t w) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Tensor z(count, channels, h, w);
  for (double& v : z.values()) v = dist(rng);
  return z;
}

Trainer::Trainer(TrainConfig config, PatchSampler sampler, const NetworkSpec& generator,
                 const NetworkSpec& discriminator)
    : config_(config),
      sampler_(std::move(sampler)),
      g_(make_network(generator, derive_seed(config.seed, kStreamGenerator))),
      d_(make_network(discriminator, derive_seed(config.seed, kStreamDiscriminator))),
      opt_g_(g_, {config.learning_rate, config.beta1, config.beta2}),
      opt_d_(d_, {config.learning_rate, config.beta1, config.beta2}),
      noise_rng_(derive_seed(config.seed, kStreamNoise)),
      started_(std::chrono::steady_clock::now()) {
  config_.validate();
  check_shapes();
}

Trainer::Trainer(TrainConfig config, PatchSampler sampler, const Checkpoint& resume)
    : config_(config),
      sampler_(std::move(sampler)),
      g_(resume.generator),
      d_(resume.discriminator),
      opt_g_(g_, {config.learning_rate, config.beta1, config.beta2}),
      opt_d_(d_, {config.learning_rate, config.beta1, config.beta2}),
      step_(resume.step),
      started_(std::chrono::steady_clock::now()) {
  config_.validate();
  check_shapes();
  restore_network(resume, g_, "G");
  restore_network(resume, d_, "D");
  restore_adam(resume, g_, opt_g_, "G");
  restore_adam(resume, d_, opt_d_, "D");
  sampler_.set_rng_state(resume.meta.require("sampler_rng"));
  std::istringstream in(resume.meta.require("noise_rng"));
  in >> noise_rng_;
  if (!in) throw FormatError("checkpoint: malformed noise_rng state");
}

void Trainer::check_shapes() {
  const NetworkSpec& gs = g_.spec();
  const NetworkSpec& ds = d_.spec();
  if (gs.role != NetworkRole::generator || ds.role != NetworkRole::discriminator)
    throw ValidationError("trainer needs a generator and a discriminator spec");
  if (gs.output_channels() != 1 || ds.input_channels != 1)
    throw ValidationError("trainer works on single-channel images");
  const std::size_t p = sampler_.patch_size();
  if (p % gs.upscale() != 0)
    throw ValidationError("patch_size " + std::to_string(p) + " is not a multiple of the generator upscale " +
                          std::to_string(gs.upscale()));
  d_.output_shape({1, 1, p, p});
  noise_h_ = p / gs.upscale();
  noise_w_ = p / gs.upscale();
}

TrainLogRecord Trainer::step() {
  std::vector<Tensor> g_stats, d_stats;
  for (const auto& p : g_.parameters())
    if (!p.trainable) g_stats.push_back(p.value);
  for (const auto& p : d_.parameters())
    if (!p.trainable) d_stats.push_back(p.value);
  const auto restore_stats = [](Network& net, std::vector<Tensor>& saved) {
    std::size_t i = 0;
    for (auto& p : net.parameters())
      if (!p.trainable) p.value = std::move(saved[i++]);
  };
  try {
    return step_unchecked();
  } catch (const TrainingDiverged&) {
    restore_stats(g_, g_stats);
    restore_stats(d_, d_stats);
    throw;
  }
}

TrainLogRecord Trainer::step_unchecked() {
  const std::size_t b = config_.batch_size;
  const std::size_t zc = g_.spec().input_channels;
  BatchStream real_batches(sampler_, b);
  TrainLogRecord rec;

  for (std::size_t k = 0; k < config_.d_steps_per_g_step; ++k) {
    const Tensor real = real_batches.next();
    const Tensor fake = g_.forward_train(sample_noise(noise_rng_, b, zc, noise_h_, noise_w_));
    d_.zero_grad();
    const Tensor d_real = d_.forward_train(real);
    const LossTerm lr = real_term(d_real);
    d_.backward(lr.grad, true, false);
    const Tensor d_fake = d_.forward_train(fake);
    const LossTerm lf = fake_term(d_fake);
    d_.backward(lf.grad, true, false);
    rec.loss_d = lr.value + lf.value;
    rec.mean_d_real = mean_of(d_real);
    rec.mean_d_fake = mean_of(d_fake);
    if (!std::isfinite(rec.loss_d))
      throw TrainingDiverged("discriminator loss is not finite at step " + std::to_string(step_ + 1));
    add_l2_gradient(d_, config_.l2_lambda);
    opt_d_.step(d_);
  }

  g_.zero_grad();
  const Tensor fake = g_.forward_train(sample_noise(noise_rng_, b, zc, noise_h_, noise_w_));
  const Tensor d_fake = d_.forward_train(fake);
  const LossTerm lg = loss_generator(d_fake);
  rec.loss_g = lg.value;
  if (!std::isfinite(rec.loss_g))
    throw TrainingDiverged("generator loss is not finite at step " + std::to_string(step_ + 1));
  g_.backward(d_.backward(lg.grad, false, true), true, false);
  add_l2_gradient(g_, config_.l2_lambda);
  opt_g_.step(g_);

  ++step_;
  rec.step = step_;
  rec.epoch = (step_ - 1) / config_.minibatches_per_epoch + 1;
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
  return rec;
}

Checkpoint Trainer::checkpoint(const KeyValueText& config_snapshot) const {
  Checkpoint ck;
  ck.generator = g_.spec();
  ck.discriminator = d_.spec();
  ck.step = step_;
  store_network(ck, g_, "G");
  store_network(ck, d_, "D");
  store_adam(ck, g_, opt_g_, "G");
  store_adam(ck, d_, opt_d_, "D");
  ck.meta.set("sampler_rng", sampler_.rng_state());
  ck.meta.set("noise_rng", rng_text(noise_rng_));
  ck.meta.set("noise_h", std::to_string(noise_h_));
  ck.meta.set("noise_w", std::to_string(noise_w_));
  if (config_snapshot.entries().empty())
    config_.to_text(ck.config);
  else
    ck.config = config_snapshot;
  return ck;
}

TrainResult train(const TrainConfig& config, PatchSampler sampler, const NetworkSpec& generator,
                  const NetworkSpec& discriminator, const TrainOutputs& outputs) {
  Trainer trainer(config, std::move(sampler), generator, discriminator);
  return train(trainer, outputs);
}

TrainResult train(Trainer& trainer, const TrainOutputs& outputs) {
  const TrainConfig& cfg = trainer.config();
  const bool write = !outputs.directory.empty();
  std::ofstream log;
  if (write) {
    std::filesystem::create_directories(outputs.directory);
    const auto log_path = outputs.directory / "train_log.csv";
    const bool fresh = !std::filesystem::exists(log_path) || std::filesystem::file_size(log_path) == 0;
    log.open(log_path, std::ios::app);
    if (!log) throw std::runtime_error("cannot open " + log_path.string());
    if (fresh) log << train_log_header() << '\n';
  }

  TrainResult result;
  const std::uint64_t total = cfg.total_steps();
  try {
    while (trainer.steps_done() < total) {
      const TrainLogRecord rec = trainer.step();
      result.log.push_back(rec);
      if (write) log << train_log_row(rec) << '\n' << std::flush;
      if (outputs.on_step) outputs.on_step(rec);

      const bool epoch_end = rec.step % cfg.minibatches_per_epoch == 0;
      if (!write || !epoch_end) continue;
      const std::string tag = epoch_tag(rec.epoch);
      if (rec.epoch % cfg.checkpoint_every == 0)
        save_checkpoint(trainer.checkpoint(outputs.config_snapshot),
                        outputs.directory / ("checkpoint_epoch_" + tag + ".ckpt"));
      if (rec.epoch % cfg.sample_every == 0) {
        const auto images = generate(trainer.generator(), trainer.noise_h(), trainer.noise_w(), 4,
                                     derive_seed(cfg.seed, kStreamSheet));
        write_png(outputs.directory / ("samples_epoch_" + tag + ".png"), make_sheet(images, 2));
      }
    }
  } catch (const TrainingDiverged&) {
    if (write && all_finite(trainer.generator()) && all_finite(trainer.discriminator()))
      save_checkpoint(trainer.checkpoint(outputs.config_snapshot),
                      outputs.directory / "checkpoint_last_good.ckpt");
    throw;
  }

  result.checkpoint = trainer.checkpoint(outputs.config_snapshot);
  if (write) save_checkpoint(result.checkpoint, outputs.directory / "checkpoint_final.ckpt");
  return result;
}

std::vector<TextureImage> generate(const Network& generator, std::size_t noise_h,
                                   std::size_t noise_w, std::size_t count, std::uint64_t seed) {
  if (noise_h == 0 || noise_w == 0) throw ValidationError("noise grid must be at least 1x1");
  if (generator.spec().output_channels() != 1)
    throw ValidationError("generate: generator must emit one channel");
  std::mt19937_64 rng(seed);
  std::vector<TextureImage> images;
  images.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const Tensor z = sample_noise(rng, 1, generator.spec().input_channels, noise_h, noise_w);
    auto out = from_batch(generator.forward(z), ValueSpace::model);
    images.push_back(std::move(out.front()));
  }
  return images;
}

std::vector<TextureImage> generate(const Checkpoint& checkpoint, std::size_t noise_h,
                                   std::size_t noise_w, std::size_t count, std::uint64_t seed) {
  return generate(generator_from_checkpoint(checkpoint), noise_h, noise_w, count, seed);
}

}  // namespace dsgan
