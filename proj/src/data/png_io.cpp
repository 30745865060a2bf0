#include "dsgan/data/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>

#include "dsgan/core/error.hpp"

namespace dsgan {
namespace {

constexpr char kExpected[] = "expected an 8-bit grayscale PNG (colour type 0, bit depth 8)";

// Bit depth and colour type live at fixed offsets of the IHDR chunk.
void check_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open image '" + path.string() + "'");
  std::array<unsigned char, 26> head{};
  in.read(reinterpret_cast<char*>(head.data()), head.size());
  static constexpr std::array<unsigned char, 8> kSignature{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a,
                                                           '\n'};
  if (in.gcount() != static_cast<std::streamsize>(head.size()) ||
      !std::equal(kSignature.begin(), kSignature.end(), head.begin()) ||
      std::memcmp(head.data() + 12, "IHDR", 4) != 0)
    throw ValidationError("'" + path.string() + "' is not a PNG file; " + kExpected);
  const int bit_depth = head[24];
  const int colour_type = head[25];
  if (colour_type != 0)
    throw ValidationError("'" + path.string() + "' has PNG colour type " +
                          std::to_string(colour_type) + "; " + kExpected);
  if (bit_depth != 8)
    throw ValidationError("'" + path.string() + "' has bit depth " + std::to_string(bit_depth) +
                          "; " + kExpected);
}

}  // namespace

GrayImage8 read_png_gray8(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw ValidationError("image file '" + path.string() + "' does not exist");
  check_header(path);
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_file(&image, path.string().c_str()) == 0)
    throw FormatError("cannot decode '" + path.string() + "': " + image.message);
  image.format = PNG_FORMAT_GRAY;
  GrayImage8 out{image.height, image.width, std::vector<std::uint8_t>(PNG_IMAGE_SIZE(image))};
  if (png_image_finish_read(&image, nullptr, out.bytes.data(), 0, nullptr) == 0) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw FormatError("cannot decode '" + path.string() + "': " + msg);
  }
  return out;
}

void write_png_gray8(const std::filesystem::path& path, const GrayImage8& image) {
  if (image.bytes.size() != image.height * image.width)
    throw ValidationError("write_png_gray8: byte count does not match dimensions");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_GRAY;
  if (png_image_write_to_file(&png, path.string().c_str(), 0, image.bytes.data(), 0, nullptr) ==
      0)
    throw std::runtime_error("cannot write '" + path.string() + "': " + png.message);
}

void write_png(const std::filesystem::path& path, const TextureImage& image) {
  const TextureImage s = image.to_storage();
  GrayImage8 out{s.height(), s.width(), std::vector<std::uint8_t>(s.pixels().size())};
  std::transform(s.pixels().begin(), s.pixels().end(), out.bytes.begin(), [](double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
  });
  write_png_gray8(path, out);
}

TextureImage read_png(const std::filesystem::path& path) {
  const GrayImage8 raw = read_png_gray8(path);
  std::vector<double> px(raw.bytes.size());
  std::transform(raw.bytes.begin(), raw.bytes.end(), px.begin(),
                 [](std::uint8_t b) { return b / 255.0; });
  return TextureImage(raw.height, raw.width, ValueSpace::storage, std::move(px));
}

TextureImage make_sheet(const std::vector<TextureImage>& images, std::size_t columns) {
  if (images.empty() || columns == 0) throw ValidationError("make_sheet: nothing to tile");
  constexpr std::size_t kGutter = 2;
  const std::size_t h = images.front().height(), w = images.front().width();
  const std::size_t cols = std::min(columns, images.size());
  const std::size_t rows = (images.size() + cols - 1) / cols;
  TextureImage sheet(rows * h + (rows - 1) * kGutter, cols * w + (cols - 1) * kGutter,
                     ValueSpace::storage, 0.5);
  for (std::size_t i = 0; i < images.size(); ++i) {
    const TextureImage s = images[i].to_storage();
    if (s.height() != h || s.width() != w) throw ValidationError("make_sheet: size mismatch");
    const std::size_t r0 = (i / cols) * (h + kGutter), c0 = (i % cols) * (w + kGutter);
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t c = 0; c < w; ++c) sheet(r0 + r, c0 + c) = s(r, c);
  }
  return sheet;
}

}  // namespace dsgan
