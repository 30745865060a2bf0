#include "dsgan/data/image.hpp"

#include <algorithm>
#include <cmath>

#include "dsgan/core/error.hpp"

namespace dsgan {

TextureImage::TextureImage(std::size_t height, std::size_t width, ValueSpace space, double fill)
    : height_(height), width_(width), space_(space), pixels_(height * width, fill) {}

TextureImage::TextureImage(std::size_t height, std::size_t width, ValueSpace space,
                           std::vector<double> pixels)
    : height_(height), width_(width), space_(space), pixels_(std::move(pixels)) {
  if (pixels_.size() != height * width)
    throw ValidationError("TextureImage: pixel count does not match " + std::to_string(height) +
                          "x" + std::to_string(width));
}

bool TextureImage::in_range() const {
  const double lo = space_ == ValueSpace::model ? -1.0 : 0.0;
  return std::all_of(pixels_.begin(), pixels_.end(),
                     [lo](double v) { return v >= lo && v <= 1.0; });
}

TextureImage TextureImage::to_storage() const {
  if (space_ == ValueSpace::storage) return *this;
  TextureImage out(height_, width_, ValueSpace::storage);
  std::transform(pixels_.begin(), pixels_.end(), out.pixels_.begin(), model_to_storage);
  return out;
}

TextureImage TextureImage::to_model() const {
  if (space_ == ValueSpace::model) return *this;
  TextureImage out(height_, width_, ValueSpace::model);
  std::transform(pixels_.begin(), pixels_.end(), out.pixels_.begin(), storage_to_model);
  return out;
}

TextureImage TextureImage::in_space(ValueSpace space) const {
  return space == ValueSpace::model ? to_model() : to_storage();
}

TextureImage TextureImage::quantized() const {
  TextureImage out = to_storage();
  for (double& v : out.pixels_) v = std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
  return out.in_space(space_);
}

TextureImage SourceImage::as_texture() const {
  return TextureImage(height, width, ValueSpace::storage, pixels);
}

Tensor to_batch(const std::vector<TextureImage>& images) {
  if (images.empty()) throw ValidationError("to_batch: no images");
  const std::size_t h = images.front().height(), w = images.front().width();
  Tensor out(images.size(), 1, h, w);
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].height() != h || images[i].width() != w)
      throw ValidationError("to_batch: images differ in size");
    const TextureImage m = images[i].to_model();
    std::copy(m.pixels().begin(), m.pixels().end(), out.sample(i));
  }
  return out;
}

std::vector<TextureImage> from_batch(const Tensor& batch, ValueSpace space) {
  if (batch.c() != 1) throw ValidationError("from_batch: expected a single-channel tensor");
  std::vector<TextureImage> out;
  out.reserve(batch.n());
  const std::size_t count = batch.h() * batch.w();
  for (std::size_t i = 0; i < batch.n(); ++i)
    out.emplace_back(batch.h(), batch.w(), space,
                     std::vector<double>(batch.sample(i), batch.sample(i) + count));
  return out;
}

}  // namespace dsgan
