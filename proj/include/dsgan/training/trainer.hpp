#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <vector>

#include "dsgan/core/key_value.hpp"
#include "dsgan/data/pipeline.hpp"
#include "dsgan/models/checkpoint.hpp"
#include "dsgan/models/network.hpp"
#include "dsgan/training/adam.hpp"

namespace dsgan {

struct TrainConfig {
  double learning_rate = 5e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double l2_lambda = 1e-5;
  std::size_t batch_size = 8;
  std::size_t epochs = 100;
  std::size_t minibatches_per_epoch = 100;
  std::size_t d_steps_per_g_step = 1;
  std::uint64_t seed = 0;
  // In epochs.
  std::size_t checkpoint_every = 10;
  std::size_t sample_every = 10;

  // Throws ValidationError naming the offending key.
  void validate() const;
  void to_text(KeyValueText& kv) const;
  // Reads the keys present in `kv`, leaving the others at their current values.
  void update_from(const KeyValueText& kv);
  std::uint64_t total_steps() const { return epochs * minibatches_per_epoch; }
};

struct TrainLogRecord {
  std::uint64_t step = 0;
  std::uint64_t epoch = 0;
  double loss_g = 0.0;
  double loss_d = 0.0;
  double mean_d_real = 0.0;
  double mean_d_fake = 0.0;
  double wall_seconds = 0.0;
};

std::string train_log_header();
std::string train_log_row(const TrainLogRecord& r);

// Uniform [-1,1) noise of shape (count, channels, h, w).
Tensor sample_noise(std::mt19937_64& rng, std::size_t count, std::size_t channels,
                    std::size_t h, std::size_t w);

// Alternating SGAN optimisation: each iteration runs d_steps_per_g_step
// discriminator updates on fresh real/fake batches, then one generator update
// on fresh noise. Both networks carry their own Adam state and L2 penalty.
class Trainer {
 public:
  Trainer(TrainConfig config, PatchSampler sampler, const NetworkSpec& generator,
          const NetworkSpec& discriminator);
  // Resumes from a checkpoint written by checkpoint().
  Trainer(TrainConfig config, PatchSampler sampler, const Checkpoint& resume);

  // One iteration. Throws TrainingDiverged before applying an update whose
  // loss is not finite; weights and batch-norm statistics keep their values
  // from before the call.
  TrainLogRecord step();

  std::uint64_t steps_done() const { return step_; }
  const TrainConfig& config() const { return config_; }
  std::size_t noise_h() const { return noise_h_; }
  std::size_t noise_w() const { return noise_w_; }

  Network& generator() { return g_; }
  Network& discriminator() { return d_; }
  const Network& generator() const { return g_; }
  const Network& discriminator() const { return d_; }

  Checkpoint checkpoint(const KeyValueText& config_snapshot = {}) const;

 private:
  void check_shapes();
  TrainLogRecord step_unchecked();

  TrainConfig config_;
  PatchSampler sampler_;
  Network g_, d_;
  Adam opt_g_, opt_d_;
  std::mt19937_64 noise_rng_;
  std::uint64_t step_ = 0;
  std::size_t noise_h_ = 0, noise_w_ = 0;
  std::chrono::steady_clock::time_point started_;
};

struct TrainOutputs {
  // Empty: no files are written.
  std::filesystem::path directory;
  KeyValueText config_snapshot;
  std::function<void(const TrainLogRecord&)> on_step;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<TrainLogRecord> log;
};

// Runs epochs x minibatches_per_epoch iterations. With an output directory it
// appends to train_log.csv every iteration and writes checkpoint_epoch_NNNN.ckpt
// and samples_epoch_NNNN.png on schedule, plus checkpoint_final.ckpt. On a
// non-finite loss it writes checkpoint_last_good.ckpt and rethrows.
TrainResult train(const TrainConfig& config, PatchSampler sampler, const NetworkSpec& generator,
                  const NetworkSpec& discriminator, const TrainOutputs& outputs = {});
TrainResult train(Trainer& trainer, const TrainOutputs& outputs = {});

// count images of 2^k*noise_h x 2^k*noise_w from uniform noise; deterministic per seed.
std::vector<TextureImage> generate(const Checkpoint& checkpoint, std::size_t noise_h,
                                   std::size_t noise_w, std::size_t count, std::uint64_t seed);
std::vector<TextureImage> generate(const Network& generator, std::size_t noise_h,
                                   std::size_t noise_w, std::size_t count, std::uint64_t seed);

}  // namespace dsgan
