#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dsgan/core/key_value.hpp"
#include "dsgan/models/layer_spec.hpp"
#include "dsgan/models/network.hpp"

namespace dsgan {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedArray {
  std::string name;
  std::vector<std::uint64_t> shape;
  std::vector<double> data;
  bool operator==(const NamedArray&) const = default;
};

// Both network specs, all named weight arrays (including optimizer moments),
// and two key-value text blocks: `meta` (step counter, RNG states, optimizer
// step counts) and `config` (the run configuration snapshot).
// Byte layout: docs/checkpoint_format.md.
struct Checkpoint {
  NetworkSpec generator;
  NetworkSpec discriminator;
  std::uint64_t step = 0;
  KeyValueText meta;
  KeyValueText config;
  std::vector<NamedArray> arrays;

  const NamedArray* find(const std::string& name) const;
  bool operator==(const Checkpoint&) const = default;
};

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ck);
// Throws VersionError for unknown versions, FormatError for corrupt data.
Checkpoint parse_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Copies every parameter of `net` into arrays named `<prefix>.<parameter>`.
void store_network(Checkpoint& ck, const Network& net, const std::string& prefix);
// Fills `net` from the arrays; throws ValidationError on missing arrays or
// shapes that do not match the network's spec.
void restore_network(const Checkpoint& ck, Network& net, const std::string& prefix);

// Inference-ready generator held in a checkpoint.
Network generator_from_checkpoint(const Checkpoint& ck);

}  // namespace dsgan
