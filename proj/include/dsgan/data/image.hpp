#pragma once

#include <cstddef>
#include <vector>

#include "dsgan/core/tensor.hpp"

namespace dsgan {

// model: [-1,1], the generator's tanh range. storage: [0,1], what PNG bytes map to.
enum class ValueSpace { model, storage };

inline double model_to_storage(double v) { return (v + 1.0) * 0.5; }
inline double storage_to_model(double v) { return 2.0 * v - 1.0; }

// Single-channel 2D grid of reals in a declared value space.
class TextureImage {
 public:
  TextureImage() = default;
  TextureImage(std::size_t height, std::size_t width, ValueSpace space, double fill = 0.0);
  TextureImage(std::size_t height, std::size_t width, ValueSpace space,
               std::vector<double> pixels);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t channels() const { return 1; }
  ValueSpace space() const { return space_; }

  double& operator()(std::size_t row, std::size_t col) { return pixels_[row * width_ + col]; }
  double operator()(std::size_t row, std::size_t col) const { return pixels_[row * width_ + col]; }
  const std::vector<double>& pixels() const { return pixels_; }
  std::vector<double>& pixels() { return pixels_; }

  // True when every pixel lies inside the declared value space bounds.
  bool in_range() const;

  TextureImage to_storage() const;
  TextureImage to_model() const;
  TextureImage in_space(ValueSpace space) const;

  // Rounds storage values to the nearest of the 256 8-bit levels.
  TextureImage quantized() const;

  bool operator==(const TextureImage&) const = default;

 private:
  std::size_t height_ = 0, width_ = 0;
  ValueSpace space_ = ValueSpace::storage;
  std::vector<double> pixels_;
};

// Large training source, grayscale intensities in [0,1].
struct SourceImage {
  std::size_t height = 0, width = 0;
  std::size_t facies_count = 2;
  std::vector<double> pixels;

  double operator()(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }
  TextureImage as_texture() const;
};

// Stacks model-space images into an (N,1,H,W) tensor. All images must share a size.
Tensor to_batch(const std::vector<TextureImage>& images);
// Splits an (N,1,H,W) tensor into images tagged with `space`.
std::vector<TextureImage> from_batch(const Tensor& batch, ValueSpace space);

}  // namespace dsgan
