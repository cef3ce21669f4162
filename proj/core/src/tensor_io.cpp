#include "agewave/tensor_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <functional>

namespace agewave {

namespace {
constexpr std::uint32_t kMaxRank = 8;
constexpr std::uint32_t kMaxString = 1u << 24;

void require(std::istream& in, const char* what) {
  if (!in) throw FormatError(std::string("truncated stream while reading ") + what);
}
}  // namespace

void write_u32(std::ostream& out, std::uint32_t value) {
  std::array<char, 4> bytes{};
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFFu);
  out.write(bytes.data(), 4);
}

std::uint32_t read_u32(std::istream& in) {
  std::array<unsigned char, 4> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), 4);
  require(in, "u32");
  std::uint32_t value = 0;
  for (int i = 0; i < 4; ++i) value |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
  return value;
}

void write_f32(std::ostream& out, float value) { write_u32(out, std::bit_cast<std::uint32_t>(value)); }

float read_f32(std::istream& in) { return std::bit_cast<float>(read_u32(in)); }

void write_string(std::ostream& out, const std::string& value) {
  write_u32(out, static_cast<std::uint32_t>(value.size()));
  out.write(value.data(), static_cast<std::streamsize>(value.size()));
}

std::string read_string(std::istream& in) {
  const auto size = read_u32(in);
  if (size > kMaxString) throw FormatError("string length " + std::to_string(size) + " too large");
  std::string value(size, '\0');
  in.read(value.data(), size);
  require(in, "string");
  return value;
}

void write_tensor(std::ostream& out, const Tensorf& tensor) {
  out.write(kTensorMagic, 4);
  write_u32(out, kTensorFormatVersion);
  write_u32(out, static_cast<std::uint32_t>(tensor.rank()));
  for (auto d : tensor.shape()) write_u32(out, static_cast<std::uint32_t>(d));
  for (float v : tensor.data()) write_f32(out, v);
}

Tensorf read_tensor(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  require(in, "tensor magic");
  if (std::memcmp(magic, kTensorMagic, 4) != 0) throw FormatError("bad tensor magic");
  const auto version = read_u32(in);
  if (version != kTensorFormatVersion)
    throw FormatError("unsupported tensor format version " + std::to_string(version) +
                      " (expected " + std::to_string(kTensorFormatVersion) + ")");
  const auto rank = read_u32(in);
  if (rank == 0 || rank > kMaxRank) throw FormatError("bad tensor rank " + std::to_string(rank));
  Shape shape(rank);
  for (auto& d : shape) {
    d = read_u32(in);
    if (d == 0) throw FormatError("zero tensor dimension");
  }
  std::vector<float> values(shape_numel(shape));
  for (auto& v : values) v = read_f32(in);
  return Tensorf(std::move(shape), std::move(values));
}

void save_tensor(const std::filesystem::path& path, const Tensorf& tensor) {
  write_file_atomically(path, [&](std::ostream& out) { write_tensor(out, tensor); });
}

Tensorf load_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open tensor file " + path.string());
  return read_tensor(in);
}

void write_file_atomically(const std::filesystem::path& path,
                           const std::function<void(std::ostream&)>& writer) {
  if (path.empty()) throw std::invalid_argument("empty output path");
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + tmp.string() + " for writing");
    writer(out);
    out.flush();
    if (!out) throw FormatError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace agewave
