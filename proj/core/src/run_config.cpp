#include "agewave/run_config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "agewave/tensor_io.hpp"

namespace agewave {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string owner_of(const std::string& key) {
  if (key.rfind("train.", 0) == 0) return "trainer";
  if (key.rfind("model.", 0) == 0) return "aging-networks";
  if (key.rfind("loss.", 0) == 0) return "objectives";
  return "cli";
}

std::string help_of(const std::string& key) {
  static const KeyValues help{
      {"seed", "master seed for initialisation, batching and synthesis"},
      {"train.target_group", "older age group the generator maps Under30 faces to"},
      {"train.iterations", "number of alternating D/G iterations"},
      {"train.batch_size", "samples per young/old/negative batch"},
      {"train.lr", "Adam learning rate for both networks"},
      {"train.beta1", "Adam first-moment decay"},
      {"train.beta2", "Adam second-moment decay"},
      {"train.epsilon", "Adam denominator offset"},
      {"train.pixel_critic_period", "pixel critic fires when iteration % period == 0"},
      {"train.pixel_critic_mode", "term (pixel loss joins L_G) or separate_step"},
      {"train.checkpoint_every", "iterations between state checkpoints (0 = end only)"},
      {"model.use_fae", "attribute embedding in G and D, and attribute-matched pairing"},
      {"model.use_wpt", "wavelet-packet pathways in D (off: one raw-image pathway)"},
      {"model.base_channels", "generator width after the first encoder block"},
      {"model.residual_blocks", "generator bottleneck residual blocks"},
      {"model.pathway_channels", "discriminator pathway width"},
      {"model.wpt_levels", "comma-separated WPT levels feeding D pathways"},
      {"model.wavelet", "wavelet family for D pathways (haar)"},
      {"loss.auto_scale", "set lambdas from warm-up loss magnitudes"},
      {"loss.warmup", "warm-up iterations with lambda = 0 before auto-scaling"},
      {"loss.lambda_pix", "pixel loss weight when auto-scaling is off"},
      {"loss.lambda_id", "identity loss weight when auto-scaling is off"},
      {"loss.identity_seed", "seed of the frozen identity encoder"},
  };
  auto it = help.find(key);
  return it == help.end() ? std::string() : it->second;
}

std::vector<ConfigKey> build_keys() {
  std::vector<ConfigKey> keys;
  keys.push_back({"seed", "1", "cli", help_of("seed")});
  keys.push_back({"data.dir", "", "dataset-io", "dataset directory holding dataset.cfg", true});
  keys.push_back({"data.eval_dir", "", "evaluation-harness",
                  "held-out dataset directory (empty: data.dir)"});
  keys.push_back({"synth.resolution", "", "dataset-io",
                  "synthetic image size, a power of two >= 32", true});
  keys.push_back({"synth.n_per_cell", "50", "dataset-io",
                  "samples per (shape, hue, age group) cell"});
  keys.push_back({"synth.label_flip", "0", "dataset-io", "probability of a flipped manifest label"});
  keys.push_back({"synth.stripe_amplitudes", "0,0.08,0.16,0.24", "dataset-io",
                  "aging texture amplitude per age group"});
  for (const auto& [key, value] : TrainConfig{}.to_key_values()) {
    if (key == "seed") continue;
    keys.push_back({key, value, owner_of(key), help_of(key)});
  }
  keys.push_back({"eval.max_samples", "0", "evaluation-harness",
                  "Under30 samples to evaluate (0 = all)"});
  keys.push_back({"eval.grid_rows", "8", "evaluation-harness",
                  "rows in the input | outputs image grid (0 = none)"});
  keys.push_back({"gradcheck.seeds", "10", "tensor-autodiff-core", "seeds per gradient check"});
  keys.push_back({"gradcheck.tolerance", "1e-4", "tensor-autodiff-core",
                  "largest accepted relative gradient error"});
  keys.push_back({"wpt.levels", "3", "wavelet-packet", "decomposition depth for the wpt command"});
  keys.push_back({"wpt.family", "haar", "wavelet-packet", "haar or db2"});
  return keys;
}

const ConfigKey* find_key(const std::string& key) {
  for (const auto& k : config_keys())
    if (k.key == key) return &k;
  return nullptr;
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = build_keys();
  return keys;
}

RunConfig::RunConfig() {
  for (const auto& k : config_keys())
    if (!k.required) values_[k.key] = k.default_value;
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config file " + path.string());
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    try {
      apply(line);
    } catch (const std::exception& e) {
      throw std::invalid_argument(path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
}

void RunConfig::apply(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw std::invalid_argument("expected key=value, got '" + assignment + "'");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (find_key(key) == nullptr)
    throw std::invalid_argument("unknown config key '" + key + "' (see --help-config)");
  values_[key] = value;
}

bool RunConfig::is_set(const std::string& key) const {
  auto it = values_.find(key);
  return it != values_.end() && !it->second.empty();
}

const std::string& RunConfig::get(const std::string& key) const {
  const ConfigKey* k = find_key(key);
  if (k == nullptr) throw std::invalid_argument("unknown config key '" + key + "'");
  auto it = values_.find(key);
  if (it == values_.end() || (k->required && it->second.empty()))
    throw std::invalid_argument("config key '" + key + "' is required: " + k->help);
  return it->second;
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
  return parse_u64(get(key), key);
}

double RunConfig::get_double(const std::string& key) const {
  return parse_double(get(key), key);
}

bool RunConfig::get_bool(const std::string& key) const { return parse_bool(get(key), key); }

std::string RunConfig::echo() const {
  std::ostringstream out;
  for (const auto& [key, value] : values_) out << key << '=' << value << '\n';
  return out.str();
}

TrainConfig RunConfig::train_config() const { return TrainConfig::from_key_values(values_); }

SyntheticAgingSpec RunConfig::synthetic_spec() const {
  SyntheticAgingSpec spec;
  spec.resolution = get_u64("synth.resolution");
  spec.label_flip_probability = get_double("synth.label_flip");
  std::istringstream in(get("synth.stripe_amplitudes"));
  std::string item;
  std::size_t g = 0;
  while (std::getline(in, item, ',')) {
    if (g >= kAgeGroupCount)
      throw std::invalid_argument("synth.stripe_amplitudes needs exactly 4 values");
    spec.stripe_amplitude[g++] = parse_double(trim(item), "synth.stripe_amplitudes");
  }
  if (g != kAgeGroupCount)
    throw std::invalid_argument("synth.stripe_amplitudes needs exactly 4 values");
  spec.validate();
  return spec;
}

std::string config_help() {
  std::ostringstream out;
  out << "Configuration keys (key = default  [owner]  description):\n";
  for (const auto& k : config_keys()) {
    out << "  " << k.key << " = " << (k.required ? "(required)" : k.default_value) << "  ["
        << k.owner << "]  " << k.help << '\n';
  }
  return out.str();
}

std::filesystem::path prepare_run_directory(const std::filesystem::path& root,
                                            const std::string& command,
                                            const RunConfig& config) {
  const auto dir = root / (command + "-" + config.hash());
  std::filesystem::create_directories(dir);
  write_file_atomically(dir / "config.cfg", [&](std::ostream& out) { out << config.echo(); });
  return dir;
}

}  // namespace agewave
