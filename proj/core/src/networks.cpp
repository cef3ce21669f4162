#include "agewave/networks.hpp"

#include <algorithm>
#include <random>
#include <sstream>
#include <stdexcept>

#include "agewave/init.hpp"
#include "agewave/ops.hpp"
#include "agewave/tensor_io.hpp"

namespace agewave {

namespace {

constexpr double kLeakySlope = 0.2;
constexpr std::size_t kImageChannels = 3;
constexpr std::size_t kFusionStages = 3;  // fusion grid is R / 2^3

bool is_power_of_two(std::size_t n) { return n && (n & (n - 1)) == 0; }

template <typename T>
void check_inputs(const Tensor<T>& images, const Tensor<T>& attributes, std::size_t resolution,
                  bool embed, std::size_t p, const char* who) {
  if (images.rank() != 4 || images.dim(1) != kImageChannels || images.dim(2) != resolution ||
      images.dim(3) != resolution)
    throw ShapeError(std::string(who) + ": expected images [N,3," + std::to_string(resolution) +
                     "," + std::to_string(resolution) + "], got " + shape_string(images.shape()));
  if (!embed) return;
  if (!attributes.defined() || attributes.rank() != 2 || attributes.dim(0) != images.dim(0) ||
      attributes.dim(1) != p)
    throw ShapeError(std::string(who) + ": expected attributes [" +
                     std::to_string(images.dim(0)) + "," + std::to_string(p) + "], got " +
                     (attributes.defined() ? shape_string(attributes.shape()) : "none"));
}

template <typename T>
Tensor<T> with_attributes(const Tensor<T>& features, const Tensor<T>& attributes) {
  return concat<T>({features, tile_spatial(attributes, features.dim(2), features.dim(3))}, 1);
}

}  // namespace

std::string join_levels(const std::vector<std::size_t>& levels) {
  std::string out;
  for (auto l : levels) out += (out.empty() ? "" : ",") + std::to_string(l);
  return out;
}

std::vector<std::size_t> parse_levels(const std::string& text) {
  std::vector<std::size_t> levels;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) levels.push_back(parse_u64(item, "wpt_levels"));
  return levels;
}

template <typename T>
Tensor<T>& ParameterTable<T>::add(const std::string& name, Tensor<T> tensor) {
  for (const auto& e : entries_)
    if (e.first == name) throw std::invalid_argument("duplicate parameter name '" + name + "'");
  entries_.emplace_back(name, std::move(tensor));
  return entries_.back().second;
}

template <typename T>
std::vector<Tensor<T>> ParameterTable<T>::tensors() const {
  std::vector<Tensor<T>> out;
  for (const auto& e : entries_) out.push_back(e.second);
  return out;
}

template <typename T>
const Tensor<T>& ParameterTable<T>::get(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.first == name) return e.second;
  throw std::out_of_range("no parameter named '" + name + "'");
}

template <typename T>
Tensor<T>& ParameterTable<T>::get(const std::string& name) {
  for (auto& e : entries_)
    if (e.first == name) return e.second;
  throw std::out_of_range("no parameter named '" + name + "'");
}

template <typename T>
std::size_t ParameterTable<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.second.numel();
  return n;
}

template <typename T>
void ParameterTable<T>::zero_grad() {
  for (auto& e : entries_) e.second.zero_grad();
}

void GeneratorConfig::validate() const {
  if (!is_power_of_two(input_resolution) || input_resolution < 8)
    throw std::invalid_argument("generator resolution must be a power of two >= 8, got " +
                                std::to_string(input_resolution));
  if (base_channels == 0) throw std::invalid_argument("generator base_channels must be positive");
  if (num_residual_blocks < 1)
    throw std::invalid_argument("generator needs at least one residual block");
  if (use_attribute_embedding && attribute_dim == 0)
    throw std::invalid_argument("attribute embedding needs attribute_dim > 0");
}

KeyValues GeneratorConfig::to_key_values() const {
  return {{"resolution", std::to_string(input_resolution)},
          {"base_channels", std::to_string(base_channels)},
          {"residual_blocks", std::to_string(num_residual_blocks)},
          {"attribute_dim", std::to_string(attribute_dim)},
          {"use_attribute_embedding", use_attribute_embedding ? "true" : "false"}};
}

GeneratorConfig GeneratorConfig::from_key_values(const KeyValues& values) {
  auto get = [&](const char* key) -> const std::string& {
    auto it = values.find(key);
    if (it == values.end()) throw FormatError(std::string("generator config lacks '") + key + "'");
    return it->second;
  };
  GeneratorConfig c;
  c.input_resolution = parse_u64(get("resolution"), "resolution");
  c.base_channels = parse_u64(get("base_channels"), "base_channels");
  c.num_residual_blocks = parse_u64(get("residual_blocks"), "residual_blocks");
  c.attribute_dim = parse_u64(get("attribute_dim"), "attribute_dim");
  c.use_attribute_embedding = parse_bool(get("use_attribute_embedding"), "use_attribute_embedding");
  c.validate();
  return c;
}

void DiscriminatorConfig::validate() const {
  if (!is_power_of_two(input_resolution) || input_resolution < 8)
    throw std::invalid_argument("discriminator resolution must be a power of two >= 8, got " +
                                std::to_string(input_resolution));
  if (pathway_channels == 0)
    throw std::invalid_argument("discriminator pathway_channels must be positive");
  if (use_attribute_embedding && attribute_dim == 0)
    throw std::invalid_argument("attribute embedding needs attribute_dim > 0");
  if (use_wpt) {
    if (wpt_levels.empty()) throw std::invalid_argument("discriminator needs at least one pathway");
    for (auto l : wpt_levels)
      if (l > kFusionStages)
        throw std::invalid_argument("wpt level " + std::to_string(l) + " exceeds maximum " +
                                    std::to_string(kFusionStages));
    if (WaveletFilterPair::of(wavelet).low.size() != 2)
      throw std::invalid_argument("discriminator wavelet front end needs a 2-tap family (haar)");
  }
}

std::vector<std::size_t> DiscriminatorConfig::active_levels() const {
  if (!use_wpt) return {0};
  auto levels = wpt_levels;
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  return levels;
}

KeyValues DiscriminatorConfig::to_key_values() const {
  return {{"resolution", std::to_string(input_resolution)},
          {"wpt_levels", join_levels(wpt_levels)},
          {"pathway_channels", std::to_string(pathway_channels)},
          {"attribute_dim", std::to_string(attribute_dim)},
          {"use_wpt", use_wpt ? "true" : "false"},
          {"use_attribute_embedding", use_attribute_embedding ? "true" : "false"},
          {"wavelet", to_string(wavelet)}};
}

DiscriminatorConfig DiscriminatorConfig::from_key_values(const KeyValues& values) {
  auto get = [&](const char* key) -> const std::string& {
    auto it = values.find(key);
    if (it == values.end())
      throw FormatError(std::string("discriminator config lacks '") + key + "'");
    return it->second;
  };
  DiscriminatorConfig c;
  c.input_resolution = parse_u64(get("resolution"), "resolution");
  c.wpt_levels = parse_levels(get("wpt_levels"));
  c.pathway_channels = parse_u64(get("pathway_channels"), "pathway_channels");
  c.attribute_dim = parse_u64(get("attribute_dim"), "attribute_dim");
  c.use_wpt = parse_bool(get("use_wpt"), "use_wpt");
  c.use_attribute_embedding = parse_bool(get("use_attribute_embedding"), "use_attribute_embedding");
  c.wavelet = parse_wavelet_family(get("wavelet"));
  c.validate();
  return c;
}

template <typename T>
Generator<T>::Generator(const GeneratorConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  std::mt19937_64 rng(seed);
  const std::size_t b = config_.base_channels;
  params_.add("enc1.weight", gaussian_tensor<T>({b, kImageChannels, 4, 4}, rng));
  params_.add("enc2.weight", gaussian_tensor<T>({2 * b, b, 4, 4}, rng));
  params_.add("enc3.weight", gaussian_tensor<T>({4 * b, 2 * b, 4, 4}, rng));
  for (std::size_t r = 0; r < config_.num_residual_blocks; ++r) {
    const std::string prefix = "res" + std::to_string(r);
    params_.add(prefix + ".conv1.weight", gaussian_tensor<T>({4 * b, 4 * b, 3, 3}, rng));
    params_.add(prefix + ".conv2.weight", gaussian_tensor<T>({4 * b, 4 * b, 3, 3}, rng));
  }
  // Transposed-conv kernels are [in, out, kh, kw].
  params_.add("dec1.weight", gaussian_tensor<T>({bottleneck_channels(), 2 * b, 4, 4}, rng));
  params_.add("dec2.weight", gaussian_tensor<T>({2 * b, b, 4, 4}, rng));
  params_.add("dec3.weight", gaussian_tensor<T>({b, kImageChannels, 4, 4}, rng));
  params_.add("dec3.bias", Tensor<T>(Shape{kImageChannels}, T(0), true));
}

template <typename T>
std::size_t Generator<T>::bottleneck_channels() const {
  return 4 * config_.base_channels +
         (config_.use_attribute_embedding ? config_.attribute_dim : 0);
}

template <typename T>
void Generator<T>::zero_output_layer() {
  for (const char* name : {"dec3.weight", "dec3.bias"}) {
    auto values = params_.get(name).mutable_data();
    std::fill(values.begin(), values.end(), T(0));
  }
}

template <typename T>
Tensor<T> Generator<T>::forward(const Tensor<T>& images, const Tensor<T>& attributes) const {
  check_inputs(images, attributes, config_.input_resolution, config_.use_attribute_embedding,
               config_.attribute_dim, "generator_forward");
  auto block = [](const Tensor<T>& x, const Tensor<T>& w) {
    return relu(instance_norm(conv2d(x, w, 2, 1)));
  };
  Tensor<T> h = block(images, params_.get("enc1.weight"));
  h = block(h, params_.get("enc2.weight"));
  h = block(h, params_.get("enc3.weight"));
  for (std::size_t r = 0; r < config_.num_residual_blocks; ++r) {
    const std::string prefix = "res" + std::to_string(r);
    Tensor<T> branch = relu(instance_norm(conv2d(h, params_.get(prefix + ".conv1.weight"), 1, 1)));
    branch = instance_norm(conv2d(branch, params_.get(prefix + ".conv2.weight"), 1, 1));
    h = h + branch;
  }
  if (config_.use_attribute_embedding) h = with_attributes(h, attributes);
  h = relu(instance_norm(conv2d_transpose(h, params_.get("dec1.weight"), 2, 1)));
  h = relu(instance_norm(conv2d_transpose(h, params_.get("dec2.weight"), 2, 1)));
  h = conv2d_transpose(h, params_.get("dec3.weight"), 2, 1, 0,
                       std::optional<Tensor<T>>(params_.get("dec3.bias")));
  return tanh(images + h);
}

template <typename T>
Discriminator<T>::Discriminator(const DiscriminatorConfig& config, std::uint64_t seed)
    : config_(config) {
  config_.validate();
  std::mt19937_64 rng(seed);
  const std::size_t pc = config_.pathway_channels;
  const auto filters = WaveletFilterPair::of(config_.wavelet);
  const auto levels = config_.active_levels();
  for (auto level : levels) {
    const std::string prefix = "path" + std::to_string(level);
    std::size_t in_channels = kImageChannels;
    if (level > 0) {
      buffers_.add("wpt.level" + std::to_string(level),
                   wpt_as_conv<T>(level, filters, kImageChannels));
      in_channels = kImageChannels << (2 * level);
    }
    params_.add(prefix + ".stem.weight", gaussian_tensor<T>({pc, in_channels, 3, 3}, rng));
    for (std::size_t s = 0; s < kFusionStages - level; ++s)
      params_.add(prefix + ".down" + std::to_string(s) + ".weight",
                  gaussian_tensor<T>({pc, pc, 4, 4}, rng));
    params_.add(prefix + ".tail.weight",
                gaussian_tensor<T>({pc, pathway_midpoint_channels(), 3, 3}, rng));
  }
  params_.add("fuse.weight", gaussian_tensor<T>({1, pc * levels.size(), 3, 3}, rng));
  params_.add("fuse.bias", Tensor<T>(Shape{1}, T(0), true));
}

template <typename T>
std::size_t Discriminator<T>::pathway_midpoint_channels() const {
  return config_.pathway_channels + (config_.use_attribute_embedding ? config_.attribute_dim : 0);
}

template <typename T>
Tensor<T> Discriminator<T>::forward(const Tensor<T>& images, const Tensor<T>& attributes) const {
  check_inputs(images, attributes, config_.input_resolution, config_.use_attribute_embedding,
               config_.attribute_dim, "discriminator_forward");
  const T slope = static_cast<T>(kLeakySlope);
  std::vector<Tensor<T>> outputs;
  for (auto level : config_.active_levels()) {
    const std::string prefix = "path" + std::to_string(level);
    Tensor<T> h = images;
    if (level > 0)
      h = conv2d(images, buffers_.get("wpt.level" + std::to_string(level)), std::size_t{1} << level,
                 0);
    h = leaky_relu(instance_norm(conv2d(h, params_.get(prefix + ".stem.weight"), 1, 1)), slope);
    for (std::size_t s = 0; s < kFusionStages - level; ++s)
      h = leaky_relu(
          instance_norm(conv2d(h, params_.get(prefix + ".down" + std::to_string(s) + ".weight"), 2, 1)),
          slope);
    if (config_.use_attribute_embedding) h = with_attributes(h, attributes);
    h = leaky_relu(instance_norm(conv2d(h, params_.get(prefix + ".tail.weight"), 1, 1)), slope);
    outputs.push_back(h);
  }
  Tensor<T> fused = outputs.size() == 1 ? outputs.front() : concat(outputs, 1);
  return conv2d(fused, params_.get("fuse.weight"), 1, 1,
                std::optional<Tensor<T>>(params_.get("fuse.bias")));
}

void append_tensors(Checkpoint& checkpoint, const std::string& prefix,
                    const ParameterTable<float>& table) {
  for (const auto& [name, t] : table.entries())
    checkpoint.tensors.emplace_back(prefix + name, t.detach());
}

void restore_tensors(const Checkpoint& checkpoint, const std::string& prefix,
                     ParameterTable<float>& table) {
  for (auto& [name, t] : table.entries()) {
    const Tensorf& stored = checkpoint.tensor(prefix + name);
    if (stored.shape() != t.shape())
      throw FormatError("checkpoint tensor '" + prefix + name + "' has shape " +
                        shape_string(stored.shape()) + ", model expects " +
                        shape_string(t.shape()));
    auto dst = t.mutable_data();
    std::copy(stored.data().begin(), stored.data().end(), dst.begin());
  }
}

void save_model(const std::filesystem::path& path, const Generator<float>& model,
                const KeyValues& extra) {
  Checkpoint cp;
  cp.kind = CheckpointKind::Generator;
  cp.config = model.config().to_key_values();
  for (const auto& [key, value] : extra) cp.config.emplace(key, value);
  append_tensors(cp, "", model.parameters());
  save_checkpoint(path, cp);
}

void save_model(const std::filesystem::path& path, const Discriminator<float>& model,
                const KeyValues& extra) {
  Checkpoint cp;
  cp.kind = CheckpointKind::Discriminator;
  cp.config = model.config().to_key_values();
  for (const auto& [key, value] : extra) cp.config.emplace(key, value);
  append_tensors(cp, "", model.parameters());
  save_checkpoint(path, cp);
}

Generator<float> load_generator(const std::filesystem::path& path) {
  const auto cp = load_checkpoint(path);
  if (cp.kind != CheckpointKind::Generator)
    throw FormatError(path.string() + " does not hold a generator");
  Generator<float> model(GeneratorConfig::from_key_values(cp.config), 0);
  restore_tensors(cp, "", model.parameters());
  return model;
}

Discriminator<float> load_discriminator(const std::filesystem::path& path) {
  const auto cp = load_checkpoint(path);
  if (cp.kind != CheckpointKind::Discriminator)
    throw FormatError(path.string() + " does not hold a discriminator");
  Discriminator<float> model(DiscriminatorConfig::from_key_values(cp.config), 0);
  restore_tensors(cp, "", model.parameters());
  return model;
}

template class ParameterTable<float>;
template class ParameterTable<double>;
template class Generator<float>;
template class Generator<double>;
template class Discriminator<float>;
template class Discriminator<double>;

}  // namespace agewave
