#include "agewave/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

#include "agewave/tensor_io.hpp"

namespace agewave {

namespace {

// Skips whitespace and '#' comments in a PNM header.
std::size_t read_pnm_number(std::istream& in, const std::string& path) {
  int ch = in.peek();
  while (ch != EOF) {
    if (std::isspace(ch)) {
      in.get();
    } else if (ch == '#') {
      std::string line;
      std::getline(in, line);
    } else {
      break;
    }
    ch = in.peek();
  }
  std::size_t value = 0;
  if (!(in >> value)) throw FormatError("malformed PNM header in " + path);
  return value;
}

Image8 read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  char magic[2];
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6'))
    throw FormatError(path.string() + ": only binary P5/P6 PNM files are supported");
  Image8 img;
  img.channels = magic[1] == '6' ? 3 : 1;
  img.width = read_pnm_number(in, path.string());
  img.height = read_pnm_number(in, path.string());
  const auto maxval = read_pnm_number(in, path.string());
  if (maxval != 255) throw FormatError(path.string() + ": only maxval 255 is supported");
  in.get();  // single whitespace before the raster
  if (img.width == 0 || img.height == 0) throw FormatError(path.string() + ": empty image");
  img.pixels.resize(img.width * img.height * img.channels);
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (!in) throw FormatError(path.string() + ": truncated raster");
  return img;
}

Image8 read_png(const std::filesystem::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str()))
    throw FormatError(path.string() + ": " + png.message);
  png.format = PNG_FORMAT_RGB;
  Image8 img;
  img.width = png.width;
  img.height = png.height;
  img.channels = 3;
  img.pixels.resize(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, img.pixels.data(), 0, nullptr)) {
    const std::string message = png.message;
    png_image_free(&png);
    throw FormatError(path.string() + ": " + message);
  }
  return img;
}

void write_pnm(const std::filesystem::path& path, const Image8& image, char kind) {
  write_file_atomically(path, [&](std::ostream& out) {
    out << 'P' << kind << '\n' << image.width << ' ' << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.pixels.data()),
              static_cast<std::streamsize>(image.pixels.size()));
  });
}

void check_image(const Image8& image) {
  if (image.channels != 1 && image.channels != 3)
    throw std::invalid_argument("images must have 1 or 3 channels");
  if (image.pixels.size() != image.width * image.height * image.channels)
    throw std::invalid_argument("image pixel buffer does not match its dimensions");
}

}  // namespace

Image8 read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open image " + path.string());
  unsigned char sig[8] = {};
  in.read(reinterpret_cast<char*>(sig), 8);
  in.close();
  if (png_sig_cmp(sig, 0, 8) == 0) return read_png(path);
  return read_pnm(path);
}

void write_ppm(const std::filesystem::path& path, const Image8& image) {
  check_image(image);
  if (image.channels != 3) throw std::invalid_argument("write_ppm needs an RGB image");
  write_pnm(path, image, '6');
}

void write_pgm(const std::filesystem::path& path, const Image8& image) {
  check_image(image);
  if (image.channels != 1) throw std::invalid_argument("write_pgm needs a gray image");
  write_pnm(path, image, '5');
}

void write_png(const std::filesystem::path& path, const Image8& image) {
  check_image(image);
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = image.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&png, path.c_str(), 0, image.pixels.data(), 0, nullptr))
    throw FormatError(path.string() + ": " + png.message);
}

void write_image(const std::filesystem::path& path, const Image8& image) {
  if (path.extension() == ".png") return write_png(path, image);
  if (image.channels == 3) return write_ppm(path, image);
  write_pgm(path, image);
}

Image8 resize_bilinear(const Image8& image, std::size_t width, std::size_t height) {
  check_image(image);
  if (width == 0 || height == 0) throw std::invalid_argument("resize target must be non-empty");
  if (width == image.width && height == image.height) return image;
  Image8 out{width, height, image.channels, std::vector<std::uint8_t>(width * height * image.channels)};
  const double sx = static_cast<double>(image.width) / static_cast<double>(width);
  const double sy = static_cast<double>(image.height) / static_cast<double>(height);
  for (std::size_t y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(image.height - 1));
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, image.height - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(image.width - 1));
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, image.width - 1);
      const double wx = fx - static_cast<double>(x0);
      for (std::size_t c = 0; c < image.channels; ++c) {
        auto px = [&](std::size_t yy, std::size_t xx) {
          return static_cast<double>(image.pixels[(yy * image.width + xx) * image.channels + c]);
        };
        const double v = (1 - wy) * ((1 - wx) * px(y0, x0) + wx * px(y0, x1)) +
                         wy * ((1 - wx) * px(y1, x0) + wx * px(y1, x1));
        out.pixels[(y * width + x) * image.channels + c] =
            static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return out;
}

std::uint8_t unit_to_byte(float v) {
  const float scaled = (std::clamp(v, -1.0f, 1.0f) + 1.0f) * 127.5f;
  return static_cast<std::uint8_t>(std::clamp(std::lround(scaled), 0L, 255L));
}

Tensorf image_to_tensor(const Image8& image) {
  check_image(image);
  const std::size_t plane = image.width * image.height;
  std::vector<float> values(3 * plane);
  for (std::size_t c = 0; c < 3; ++c) {
    const std::size_t src = image.channels == 3 ? c : 0;
    for (std::size_t i = 0; i < plane; ++i)
      values[c * plane + i] = byte_to_unit(image.pixels[i * image.channels + src]);
  }
  return Tensorf(Shape{3, image.height, image.width}, std::move(values));
}

Image8 tensor_to_image(const Tensorf& tensor) {
  Shape s = tensor.shape();
  if (s.size() == 4 && s[0] == 1) s.erase(s.begin());
  if (s.size() != 3 || (s[0] != 1 && s[0] != 3))
    throw ShapeError("tensor_to_image expects [C,H,W] with C in {1,3}, got " +
                     shape_string(tensor.shape()));
  Image8 img{s[2], s[1], s[0], {}};
  const std::size_t plane = img.width * img.height;
  img.pixels.resize(plane * img.channels);
  for (std::size_t c = 0; c < img.channels; ++c)
    for (std::size_t i = 0; i < plane; ++i)
      img.pixels[i * img.channels + c] = unit_to_byte(tensor.data()[c * plane + i]);
  return img;
}

}  // namespace agewave
