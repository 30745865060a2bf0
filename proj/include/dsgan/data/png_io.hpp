#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dsgan/data/image.hpp"

namespace dsgan {

struct GrayImage8 {
  std::size_t height = 0, width = 0;
  std::vector<std::uint8_t> bytes;
};

// Reads an 8-bit grayscale PNG (colour type 0, bit depth 8). Anything else is
// rejected with a ValidationError naming the expected format.
GrayImage8 read_png_gray8(const std::filesystem::path& path);
void write_png_gray8(const std::filesystem::path& path, const GrayImage8& image);

// Writes any image as 8-bit grayscale after conversion to storage space.
void write_png(const std::filesystem::path& path, const TextureImage& image);
TextureImage read_png(const std::filesystem::path& path);

// Tiles images into a grid with `columns` columns and a 2-pixel mid-gray gutter.
TextureImage make_sheet(const std::vector<TextureImage>& images, std::size_t columns);

}  // namespace dsgan
