#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string>

#include "dsgan/core/tensor.hpp"
#include "dsgan/data/image.hpp"

namespace dsgan {

// Loads an 8-bit grayscale PNG; pixels become v/255.
SourceImage load_source(const std::filesystem::path& path);
void save_source(const std::filesystem::path& path, const SourceImage& source);

enum class ToyKind { stripes, channels };
enum class Orientation { vertical, horizontal };

struct ToyParams {
  // Stripe width, or channel thickness, in pixels.
  int band_width = 4;
  Orientation orientation = Orientation::vertical;
  // channels: target share of the image covered by channel bodies.
  double channel_fraction = 0.3;
  // channels: standard deviation of the per-column slope innovation.
  double meander = 0.08;
};

// Binary {0,1} procedural textures. `stripes` alternates bands of
// band_width starting with 1 at index 0; `channels` paints meandering random
// walk bands that wrap around the image so the texture has no preferred origin.
SourceImage make_toy_texture(ToyKind kind, std::size_t height, std::size_t width,
                             const ToyParams& params, std::uint64_t seed);

struct PatchCorner {
  std::size_t row = 0, col = 0;
  bool operator==(const PatchCorner&) const = default;
};

// Draws square windows, with replacement, from uniformly random valid corners.
class PatchSampler {
 public:
  PatchSampler(std::shared_ptr<const SourceImage> source, std::size_t patch_size,
               std::uint64_t seed);

  std::size_t patch_size() const { return patch_size_; }
  const SourceImage& source() const { return *source_; }

  PatchCorner next_corner();
  // Patch in model space ([-1,1] via 2v-1).
  TextureImage sample(PatchCorner* corner = nullptr);
  TextureImage extract(PatchCorner corner) const;

  std::string rng_state() const;
  void set_rng_state(const std::string& state);

 private:
  std::shared_ptr<const SourceImage> source_;
  std::size_t patch_size_;
  std::mt19937_64 rng_;
};

// Endless stream of (batch_size, 1, P, P) model-space batches.
class BatchStream {
 public:
  BatchStream(PatchSampler& sampler, std::size_t batch_size);
  Tensor next();
  std::size_t batch_size() const { return batch_size_; }

 private:
  PatchSampler* sampler_;
  std::size_t batch_size_;
};

inline BatchStream batch_iterator(PatchSampler& sampler, std::size_t batch_size) {
  return BatchStream(sampler, batch_size);
}

}  // namespace dsgan
