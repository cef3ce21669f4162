#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "agewave/tensor.hpp"

namespace agewave {

/// 8-bit image with interleaved channels (1 = gray, 3 = RGB).
struct Image8 {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 3;
  std::vector<std::uint8_t> pixels;
};

/// Reads binary PPM (P6), PGM (P5) or PNG, chosen by file signature.
Image8 read_image(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const Image8& image);
void write_pgm(const std::filesystem::path& path, const Image8& image);
void write_png(const std::filesystem::path& path, const Image8& image);
/// PNG for a ".png" extension, otherwise PPM/PGM by channel count.
void write_image(const std::filesystem::path& path, const Image8& image);

/// Bilinear resampling with half-pixel centers.
Image8 resize_bilinear(const Image8& image, std::size_t width, std::size_t height);

inline float byte_to_unit(std::uint8_t b) { return static_cast<float>(b) / 127.5f - 1.0f; }
std::uint8_t unit_to_byte(float v);

/// [3,H,W] in [-1,1]; gray images are replicated across the three channels.
Tensorf image_to_tensor(const Image8& image);
/// Accepts [C,H,W] or [1,C,H,W] with C in {1,3}.
Image8 tensor_to_image(const Tensorf& tensor);

}  // namespace agewave
