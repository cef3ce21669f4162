#include "agewave/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "agewave/tensor_io.hpp"

namespace agewave {

const Tensorf& Checkpoint::tensor(const std::string& name) const {
  for (const auto& [key, t] : tensors)
    if (key == name) return t;
  throw FormatError("checkpoint has no tensor '" + name + "'");
}

const std::string& Checkpoint::value(const std::string& key) const {
  auto it = config.find(key);
  if (it == config.end()) throw FormatError("checkpoint config lacks key '" + key + "'");
  return it->second;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  if (path.empty()) throw std::invalid_argument("save_checkpoint: empty path");
  write_file_atomically(path, [&](std::ostream& out) {
    out.write(kCheckpointMagic, 4);
    write_u32(out, kCheckpointVersion);
    write_u32(out, static_cast<std::uint32_t>(checkpoint.kind));
    write_u32(out, static_cast<std::uint32_t>(checkpoint.config.size()));
    for (const auto& [k, v] : checkpoint.config) {
      write_string(out, k);
      write_string(out, v);
    }
    write_u32(out, static_cast<std::uint32_t>(checkpoint.tensors.size()));
    for (const auto& [name, t] : checkpoint.tensors) {
      write_string(out, name);
      write_tensor(out, t);
    }
  });
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  if (path.empty()) throw std::invalid_argument("load_checkpoint: empty path");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kCheckpointMagic, 4) != 0)
    throw FormatError(path.string() + " is not a checkpoint (bad magic)");
  const auto version = read_u32(in);
  if (version != kCheckpointVersion)
    throw FormatError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  Checkpoint cp;
  const auto kind = read_u32(in);
  if (kind < 1 || kind > 3) throw FormatError("unknown checkpoint kind " + std::to_string(kind));
  cp.kind = static_cast<CheckpointKind>(kind);
  const auto entries = read_u32(in);
  for (std::uint32_t i = 0; i < entries; ++i) {
    auto key = read_string(in);
    cp.config[key] = read_string(in);
  }
  const auto count = read_u32(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    auto name = read_string(in);
    cp.tensors.emplace_back(std::move(name), read_tensor(in));
  }
  return cp;
}

std::string config_hash(const KeyValues& values) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&](const std::string& text) {
    for (unsigned char ch : text) {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& [key, value] : values) feed(key + "=" + value + "\n");
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(h));
  return buffer;
}

std::string format_exact(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%a", value);
  return buffer;
}

double parse_double(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument(what + ": expected a number, got '" + text + "'");
  }
}

std::uint64_t parse_u64(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    if (!text.empty() && text[0] == '-') throw std::invalid_argument(text);
    const auto v = std::stoull(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument(what + ": expected a non-negative integer, got '" + text + "'");
  }
}

bool parse_bool(const std::string& text, const std::string& what) {
  if (text == "true" || text == "1" || text == "on" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "off" || text == "no") return false;
  throw std::invalid_argument(what + ": expected true/false, got '" + text + "'");
}

}  // namespace agewave
