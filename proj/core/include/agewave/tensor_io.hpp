#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <iosfwd>
#include <stdexcept>

#include "agewave/tensor.hpp"

namespace agewave {

/// Raised on malformed or incompatible files.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr char kTensorMagic[4] = {'A', 'G', 'W', 'T'};
inline constexpr std::uint32_t kTensorFormatVersion = 1;

// Raw tensor layout: "AGWT", u32 version, u32 rank, u32 dims[rank], then
// little-endian float32 values in row-major order.
void write_tensor(std::ostream& out, const Tensorf& tensor);
Tensorf read_tensor(std::istream& in);

void save_tensor(const std::filesystem::path& path, const Tensorf& tensor);
Tensorf load_tensor(const std::filesystem::path& path);

// Little-endian primitives shared by the checkpoint formats.
void write_u32(std::ostream& out, std::uint32_t value);
std::uint32_t read_u32(std::istream& in);
void write_f32(std::ostream& out, float value);
float read_f32(std::istream& in);
void write_string(std::ostream& out, const std::string& value);
std::string read_string(std::istream& in);

/// Writes to a sibling temp file and renames it into place.
void write_file_atomically(const std::filesystem::path& path,
                           const std::function<void(std::ostream&)>& writer);

}  // namespace agewave
