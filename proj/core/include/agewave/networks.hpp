#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "agewave/checkpoint.hpp"
#include "agewave/tensor.hpp"
#include "agewave/wavelet.hpp"

namespace agewave {

/// Ordered name -> tensor table.
template <typename T>
class ParameterTable {
 public:
  Tensor<T>& add(const std::string& name, Tensor<T> tensor);
  const std::vector<std::pair<std::string, Tensor<T>>>& entries() const { return entries_; }
  std::vector<std::pair<std::string, Tensor<T>>>& entries() { return entries_; }
  std::vector<Tensor<T>> tensors() const;
  const Tensor<T>& get(const std::string& name) const;
  Tensor<T>& get(const std::string& name);
  std::size_t scalar_count() const;
  void zero_grad();

 private:
  std::vector<std::pair<std::string, Tensor<T>>> entries_;
};

/// Comma-separated level lists such as "1,2,3".
std::string join_levels(const std::vector<std::size_t>& levels);
std::vector<std::size_t> parse_levels(const std::string& text);

struct GeneratorConfig {
  std::size_t input_resolution = 64;
  std::size_t base_channels = 32;
  std::size_t num_residual_blocks = 4;
  std::size_t attribute_dim = 4;
  bool use_attribute_embedding = true;

  void validate() const;
  KeyValues to_key_values() const;
  static GeneratorConfig from_key_values(const KeyValues& values);
};

struct DiscriminatorConfig {
  std::size_t input_resolution = 64;
  /// Levels feeding a pathway when use_wpt is on; 0 is the raw image.
  std::vector<std::size_t> wpt_levels{1, 2, 3};
  std::size_t pathway_channels = 32;
  std::size_t attribute_dim = 4;
  bool use_wpt = true;
  bool use_attribute_embedding = true;
  WaveletFamily wavelet = WaveletFamily::Haar;

  void validate() const;
  /// Sorted pathway levels actually built: {0} when use_wpt is off.
  std::vector<std::size_t> active_levels() const;
  KeyValues to_key_values() const;
  static DiscriminatorConfig from_key_values(const KeyValues& values);
};

/// Hourglass generator: three stride-2 encoder blocks, residual bottleneck,
/// attribute tiles concatenated after the last residual block, three
/// transposed-conv decoder blocks, then tanh(input + decoded).
template <typename T>
class Generator {
 public:
  Generator(const GeneratorConfig& config, std::uint64_t seed);

  /// images [N,3,R,R] in [-1,1]; attributes [N,p] (ignored without embedding).
  Tensor<T> forward(const Tensor<T>& images, const Tensor<T>& attributes) const;

  /// Zeroes the last decoder layer so that forward(x, a) == tanh(x).
  void zero_output_layer();

  std::size_t bottleneck_channels() const;
  const GeneratorConfig& config() const { return config_; }
  ParameterTable<T>& parameters() { return params_; }
  const ParameterTable<T>& parameters() const { return params_; }

 private:
  GeneratorConfig config_;
  ParameterTable<T> params_;
};

/// Multi-pathway least-squares discriminator over fixed wavelet-packet
/// features. Each pathway reduces its level to R/8 x R/8, takes the tiled
/// attributes at its midpoint, and the pathways are fused by channel
/// concatenation and one 3x3 conv to a 1-channel label map.
template <typename T>
class Discriminator {
 public:
  Discriminator(const DiscriminatorConfig& config, std::uint64_t seed);

  /// Unbounded [N,1,R/8,R/8] label map.
  Tensor<T> forward(const Tensor<T>& images, const Tensor<T>& attributes) const;

  std::size_t pathway_midpoint_channels() const;
  std::size_t label_map_extent() const { return config_.input_resolution / 8; }
  const DiscriminatorConfig& config() const { return config_; }
  ParameterTable<T>& parameters() { return params_; }
  const ParameterTable<T>& parameters() const { return params_; }
  /// Frozen wavelet kernels, "wpt.level<k>".
  ParameterTable<T>& buffers() { return buffers_; }
  const ParameterTable<T>& buffers() const { return buffers_; }

 private:
  DiscriminatorConfig config_;
  ParameterTable<T> params_;
  ParameterTable<T> buffers_;
};

template <typename T>
std::size_t count_parameters(const ParameterTable<T>& table) {
  return table.scalar_count();
}

/// `extra` entries are stored next to the model config, e.g. the attribute schema.
void save_model(const std::filesystem::path& path, const Generator<float>& model,
                const KeyValues& extra = {});
void save_model(const std::filesystem::path& path, const Discriminator<float>& model,
                const KeyValues& extra = {});
Generator<float> load_generator(const std::filesystem::path& path);
Discriminator<float> load_discriminator(const std::filesystem::path& path);

// Table <-> checkpoint helpers, shared with training-state checkpoints.
void append_tensors(Checkpoint& checkpoint, const std::string& prefix,
                    const ParameterTable<float>& table);
void restore_tensors(const Checkpoint& checkpoint, const std::string& prefix,
                     ParameterTable<float>& table);

}  // namespace agewave
