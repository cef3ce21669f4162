#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "agewave/tensor.hpp"

namespace agewave {

enum class CheckpointKind : std::uint32_t { Generator = 1, Discriminator = 2, TrainState = 3 };

inline constexpr char kCheckpointMagic[4] = {'A', 'G', 'W', 'C'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

using KeyValues = std::map<std::string, std::string>;

/// "AGWC", u32 version, u32 kind, u32 n + n (key, value) strings, then
/// u32 m + m (name, raw tensor) entries.
struct Checkpoint {
  CheckpointKind kind = CheckpointKind::Generator;
  KeyValues config;
  std::vector<std::pair<std::string, Tensorf>> tensors;

  const Tensorf& tensor(const std::string& name) const;
  const std::string& value(const std::string& key) const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// 16-hex-digit FNV-1a hash of the "key=value\n" lines in key order.
std::string config_hash(const KeyValues& values);

// Lossless text round-trip for reals stored in config blocks.
std::string format_exact(double value);
double parse_double(const std::string& text, const std::string& what);
std::uint64_t parse_u64(const std::string& text, const std::string& what);
bool parse_bool(const std::string& text, const std::string& what);

}  // namespace agewave
