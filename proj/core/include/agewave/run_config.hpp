#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "agewave/checkpoint.hpp"
#include "agewave/synthetic.hpp"
#include "agewave/trainer.hpp"

namespace agewave {

struct ConfigKey {
  std::string key;
  std::string default_value;
  std::string owner;  // module that reads the key
  std::string help;
  /// No default; commands that read the key fail until it is set.
  bool required = false;
};

/// Every recognised key, in help order.
const std::vector<ConfigKey>& config_keys();

/// Flat key=value configuration: defaults, then a config file, then overrides.
class RunConfig {
 public:
  RunConfig();

  /// Lines are `key=value`; blank lines and `#` comments are skipped.
  void load_file(const std::filesystem::path& path);
  /// "key=value".
  void apply(const std::string& assignment);
  void set(const std::string& key, const std::string& value);

  bool is_set(const std::string& key) const;
  /// Throws with the key name when a required key is unset.
  const std::string& get(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  /// Effective values of every key that has one.
  const KeyValues& values() const { return values_; }
  /// Re-loadable `key=value` lines.
  std::string echo() const;
  std::string hash() const { return config_hash(values_); }

  TrainConfig train_config() const;
  SyntheticAgingSpec synthetic_spec() const;

 private:
  KeyValues values_;
};

/// Lists every key with its default and owning module.
std::string config_help();

/// `<root>/<command>-<config hash>`, created, with `config.cfg` echoed into it.
std::filesystem::path prepare_run_directory(const std::filesystem::path& root,
                                            const std::string& command,
                                            const RunConfig& config);

}  // namespace agewave
