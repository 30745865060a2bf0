#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dsgan/core/key_value.hpp"
#include "dsgan/data/pipeline.hpp"
#include "dsgan/evaluation/report.hpp"
#include "dsgan/models/layer_spec.hpp"
#include "dsgan/training/trainer.hpp"

namespace dsgan {

// Everything a run needs, read from `key = value` text. Defaults reproduce the
// published setup: 384-pixel patches from 12x12 noise, lr 5e-4, batch 8,
// 100 epochs of 100 minibatches.
struct RunConfig {
  TrainConfig train;

  // PNG training image; empty means a procedural toy texture.
  std::string data_source;
  ToyKind toy_kind = ToyKind::channels;
  std::size_t toy_height = 2500, toy_width = 2500;
  ToyParams toy;
  std::uint64_t toy_seed = 0;

  std::size_t patch_size = 384;
  std::size_t noise_size = 12;
  std::size_t noise_channels = 1;

  GeneratorOptions generator;
  // One flag per generator layer; unset keeps the default pattern.
  std::optional<std::vector<bool>> generator_batch_norm;
  DiscriminatorOptions discriminator;

  std::string output_dir = "runs/dsgan";

  MetricConfig metrics;
  std::size_t eval_count = 100;
  std::uint64_t eval_seed = 1;

  // Unknown keys and malformed values throw ValidationError naming the key.
  static RunConfig from_text(const KeyValueText& kv);
  static RunConfig load(const std::filesystem::path& path);
  void apply(const KeyValueText& overrides);
  KeyValueText to_text() const;

  // Checks every field and the cross-field constraints (patch size vs
  // network scale, data source presence) without running anything.
  void validate() const;

  NetworkSpec generator_spec() const;
  NetworkSpec discriminator_spec() const;
  // output_dir, placed under $DSGAN_OUTPUT_ROOT when that is set and
  // output_dir is relative.
  std::filesystem::path resolved_output_dir() const;
  // Loads data_source or builds the toy texture.
  SourceImage load_training_image() const;
};

std::vector<std::string> run_config_keys();

}  // namespace dsgan
