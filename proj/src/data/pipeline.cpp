#include "dsgan/data/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dsgan/core/error.hpp"
#include "dsgan/data/png_io.hpp"

namespace dsgan {

SourceImage load_source(const std::filesystem::path& path) {
  const GrayImage8 raw = read_png_gray8(path);
  SourceImage src;
  src.height = raw.height;
  src.width = raw.width;
  src.pixels.resize(raw.bytes.size());
  std::transform(raw.bytes.begin(), raw.bytes.end(), src.pixels.begin(),
                 [](std::uint8_t b) { return b / 255.0; });
  return src;
}

void save_source(const std::filesystem::path& path, const SourceImage& source) {
  write_png(path, source.as_texture());
}

namespace {

SourceImage make_stripes(std::size_t height, std::size_t width, const ToyParams& p) {
  SourceImage img{height, width, 2, std::vector<double>(height * width)};
  const auto band = static_cast<std::size_t>(p.band_width);
  for (std::size_t r = 0; r < height; ++r)
    for (std::size_t c = 0; c < width; ++c) {
      const std::size_t idx = p.orientation == Orientation::vertical ? c : r;
      img.pixels[r * width + c] = (idx / band) % 2 == 0 ? 1.0 : 0.0;
    }
  return img;
}

// Channels are drawn running along the columns of a (across x along) canvas.
SourceImage make_channels(std::size_t height, std::size_t width, const ToyParams& p,
                          std::uint64_t seed) {
  const bool vertical = p.orientation == Orientation::vertical;
  const std::size_t across = vertical ? width : height;
  const std::size_t along = vertical ? height : width;
  std::vector<double> canvas(across * along, 0.0);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> start(0.0, static_cast<double>(across));
  std::normal_distribution<double> innovation(0.0, p.meander);
  std::normal_distribution<double> initial_slope(0.0, 0.3);

  const double thickness = p.band_width;
  const auto count = static_cast<std::size_t>(
      std::max(1.0, std::ceil(p.channel_fraction * static_cast<double>(across) / thickness)));
  const auto wrap = [across](long v) {
    const long n = static_cast<long>(across);
    return static_cast<std::size_t>(((v % n) + n) % n);
  };

  for (std::size_t ch = 0; ch < count; ++ch) {
    double centre = start(rng);
    double slope = initial_slope(rng);
    double previous = centre;
    for (std::size_t t = 0; t < along; ++t) {
      slope = std::clamp(0.95 * slope + innovation(rng), -1.5, 1.5);
      centre += slope;
      const double lo = std::min(previous, centre) - thickness / 2.0;
      const double hi = std::max(previous, centre) + thickness / 2.0;
      for (long k = std::lround(std::ceil(lo)); k < std::lround(std::ceil(hi)); ++k)
        canvas[wrap(k) * along + t] = 1.0;
      previous = centre;
    }
  }

  SourceImage img{height, width, 2, std::vector<double>(height * width)};
  for (std::size_t r = 0; r < height; ++r)
    for (std::size_t c = 0; c < width; ++c)
      img.pixels[r * width + c] = vertical ? canvas[c * along + r] : canvas[r * along + c];
  return img;
}

}  // namespace

SourceImage make_toy_texture(ToyKind kind, std::size_t height, std::size_t width,
                             const ToyParams& params, std::uint64_t seed) {
  if (height < 16 || width < 16)
    throw ValidationError("make_toy_texture: height and width must be at least 16");
  if (params.band_width <= 0) throw ValidationError("make_toy_texture: band_width must be > 0");
  if (kind == ToyKind::channels &&
      (!(params.channel_fraction > 0.0 && params.channel_fraction <= 1.0) || params.meander < 0))
    throw ValidationError(
        "make_toy_texture: channel_fraction must be in (0,1] and meander must be >= 0");
  return kind == ToyKind::stripes ? make_stripes(height, width, params)
                                  : make_channels(height, width, params, seed);
}

PatchSampler::PatchSampler(std::shared_ptr<const SourceImage> source, std::size_t patch_size,
                           std::uint64_t seed)
    : source_(std::move(source)), patch_size_(patch_size), rng_(seed) {
  if (!source_) throw ValidationError("PatchSampler: no source image");
  if (patch_size_ == 0) throw ValidationError("PatchSampler: patch_size must be >= 1");
  if (patch_size_ > source_->height || patch_size_ > source_->width)
    throw ValidationError("PatchSampler: patch_size " + std::to_string(patch_size_) +
                          " exceeds the source image (" + std::to_string(source_->height) + "x" +
                          std::to_string(source_->width) + ")");
}

PatchCorner PatchSampler::next_corner() {
  std::uniform_int_distribution<std::size_t> rows(0, source_->height - patch_size_);
  std::uniform_int_distribution<std::size_t> cols(0, source_->width - patch_size_);
  const std::size_t r = rows(rng_);
  return {r, cols(rng_)};
}

TextureImage PatchSampler::extract(PatchCorner corner) const {
  TextureImage patch(patch_size_, patch_size_, ValueSpace::model);
  for (std::size_t r = 0; r < patch_size_; ++r)
    for (std::size_t c = 0; c < patch_size_; ++c)
      patch(r, c) = storage_to_model((*source_)(corner.row + r, corner.col + c));
  return patch;
}

TextureImage PatchSampler::sample(PatchCorner* corner) {
  const PatchCorner at = next_corner();
  if (corner != nullptr) *corner = at;
  return extract(at);
}

std::string PatchSampler::rng_state() const {
  std::ostringstream out;
  out << rng_;
  return out.str();
}

void PatchSampler::set_rng_state(const std::string& state) {
  std::istringstream in(state);
  in >> rng_;
  if (!in) throw FormatError("PatchSampler: malformed RNG state");
}

BatchStream::BatchStream(PatchSampler& sampler, std::size_t batch_size)
    : sampler_(&sampler), batch_size_(batch_size) {
  if (batch_size_ == 0) throw ValidationError("batch_size must be >= 1");
}

Tensor BatchStream::next() {
  const std::size_t p = sampler_->patch_size();
  Tensor batch(batch_size_, 1, p, p);
  for (std::size_t i = 0; i < batch_size_; ++i) {
    const TextureImage patch = sampler_->sample();
    std::copy(patch.pixels().begin(), patch.pixels().end(), batch.sample(i));
  }
  return batch;
}

}  // namespace dsgan
