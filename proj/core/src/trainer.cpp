#include "agewave/trainer.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "agewave/ops.hpp"
#include "agewave/tensor_io.hpp"

namespace agewave {

namespace {

constexpr std::uint64_t kDiscriminatorSeedSalt = 0x9E3779B97F4A7C15ULL;

std::string shortest(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

const std::string& require(const KeyValues& values, const std::string& key) {
  auto it = values.find(key);
  if (it == values.end()) throw FormatError("training config lacks '" + key + "'");
  return it->second;
}

void append_moments(Checkpoint& cp, const std::string& prefix, const ParameterTable<float>& table,
                    const AdamState<float>& adam) {
  const auto& entries = table.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const std::size_t n = adam.first_moment[i].size();
    cp.tensors.emplace_back(prefix + "m." + entries[i].first,
                            Tensorf(Shape{n}, adam.first_moment[i]));
    cp.tensors.emplace_back(prefix + "v." + entries[i].first,
                            Tensorf(Shape{n}, adam.second_moment[i]));
  }
}

void restore_moments(const Checkpoint& cp, const std::string& prefix,
                     const ParameterTable<float>& table, AdamState<float>& adam) {
  const auto& entries = table.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& m = cp.tensor(prefix + "m." + entries[i].first);
    const auto& v = cp.tensor(prefix + "v." + entries[i].first);
    if (m.numel() != adam.first_moment[i].size() || v.numel() != adam.second_moment[i].size())
      throw FormatError("optimizer moments for '" + entries[i].first + "' have the wrong size");
    adam.first_moment[i].assign(m.data().begin(), m.data().end());
    adam.second_moment[i].assign(v.data().begin(), v.data().end());
  }
}

bool all_finite(const LossRecord& r) {
  return std::isfinite(r.l_g) && std::isfinite(r.gan_g) && std::isfinite(r.pix) &&
         std::isfinite(r.id) && std::isfinite(r.l_d);
}

}  // namespace

std::string to_string(PixelCriticMode mode) {
  return mode == PixelCriticMode::Term ? "term" : "separate_step";
}

PixelCriticMode parse_pixel_critic_mode(const std::string& text) {
  if (text == "term") return PixelCriticMode::Term;
  if (text == "separate_step") return PixelCriticMode::SeparateStep;
  throw std::invalid_argument("unknown pixel critic mode '" + text +
                              "' (expected term or separate_step)");
}

void TrainConfig::validate() const {
  if (target_group == AgeGroup::Under30)
    throw std::invalid_argument("train.target_group must be G31_40, G41_50 or G51plus");
  if (batch_size == 0) throw std::invalid_argument("train.batch_size must be >= 1");
  if (pixel_critic_period == 0) throw std::invalid_argument("train.pixel_critic_period must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("train.lr must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw std::invalid_argument("Adam betas must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw std::invalid_argument("train.epsilon must be positive");
  if (auto_scale && warmup_iterations == 0)
    throw std::invalid_argument("loss.warmup must be >= 1 when loss.auto_scale is on");
  if (lambda_pix < 0.0 || lambda_id < 0.0)
    throw std::invalid_argument("loss weights must be non-negative");
}

KeyValues TrainConfig::to_key_values() const {
  return {{"seed", std::to_string(seed)},
          {"train.target_group", to_string(target_group)},
          {"train.iterations", std::to_string(iterations)},
          {"train.batch_size", std::to_string(batch_size)},
          {"train.lr", shortest(learning_rate)},
          {"train.beta1", shortest(beta1)},
          {"train.beta2", shortest(beta2)},
          {"train.epsilon", shortest(epsilon)},
          {"train.pixel_critic_period", std::to_string(pixel_critic_period)},
          {"train.pixel_critic_mode", to_string(pixel_critic_mode)},
          {"train.checkpoint_every", std::to_string(checkpoint_every)},
          {"model.use_fae", use_fae ? "true" : "false"},
          {"model.use_wpt", use_wpt ? "true" : "false"},
          {"model.base_channels", std::to_string(base_channels)},
          {"model.residual_blocks", std::to_string(residual_blocks)},
          {"model.pathway_channels", std::to_string(pathway_channels)},
          {"model.wpt_levels", join_levels(wpt_levels)},
          {"model.wavelet", to_string(wavelet)},
          {"loss.auto_scale", auto_scale ? "true" : "false"},
          {"loss.warmup", std::to_string(warmup_iterations)},
          {"loss.lambda_pix", shortest(lambda_pix)},
          {"loss.lambda_id", shortest(lambda_id)},
          {"loss.identity_seed", std::to_string(identity_seed)}};
}

TrainConfig TrainConfig::from_key_values(const KeyValues& v) {
  TrainConfig c;
  c.seed = parse_u64(require(v, "seed"), "seed");
  c.target_group = parse_age_group(require(v, "train.target_group"));
  c.iterations = parse_u64(require(v, "train.iterations"), "train.iterations");
  c.batch_size = parse_u64(require(v, "train.batch_size"), "train.batch_size");
  c.learning_rate = parse_double(require(v, "train.lr"), "train.lr");
  c.beta1 = parse_double(require(v, "train.beta1"), "train.beta1");
  c.beta2 = parse_double(require(v, "train.beta2"), "train.beta2");
  c.epsilon = parse_double(require(v, "train.epsilon"), "train.epsilon");
  c.pixel_critic_period =
      parse_u64(require(v, "train.pixel_critic_period"), "train.pixel_critic_period");
  c.pixel_critic_mode = parse_pixel_critic_mode(require(v, "train.pixel_critic_mode"));
  c.checkpoint_every = parse_u64(require(v, "train.checkpoint_every"), "train.checkpoint_every");
  c.use_fae = parse_bool(require(v, "model.use_fae"), "model.use_fae");
  c.use_wpt = parse_bool(require(v, "model.use_wpt"), "model.use_wpt");
  c.base_channels = parse_u64(require(v, "model.base_channels"), "model.base_channels");
  c.residual_blocks = parse_u64(require(v, "model.residual_blocks"), "model.residual_blocks");
  c.pathway_channels = parse_u64(require(v, "model.pathway_channels"), "model.pathway_channels");
  c.wpt_levels = parse_levels(require(v, "model.wpt_levels"));
  c.wavelet = parse_wavelet_family(require(v, "model.wavelet"));
  c.auto_scale = parse_bool(require(v, "loss.auto_scale"), "loss.auto_scale");
  c.warmup_iterations = parse_u64(require(v, "loss.warmup"), "loss.warmup");
  c.lambda_pix = parse_double(require(v, "loss.lambda_pix"), "loss.lambda_pix");
  c.lambda_id = parse_double(require(v, "loss.lambda_id"), "loss.lambda_id");
  c.identity_seed = parse_u64(require(v, "loss.identity_seed"), "loss.identity_seed");
  c.validate();
  return c;
}

GeneratorConfig TrainConfig::generator_config(std::size_t resolution,
                                              std::size_t attribute_dim) const {
  GeneratorConfig g;
  g.input_resolution = resolution;
  g.base_channels = base_channels;
  g.num_residual_blocks = residual_blocks;
  g.attribute_dim = attribute_dim;
  g.use_attribute_embedding = use_fae;
  g.validate();
  return g;
}

DiscriminatorConfig TrainConfig::discriminator_config(std::size_t resolution,
                                                      std::size_t attribute_dim) const {
  DiscriminatorConfig d;
  d.input_resolution = resolution;
  d.wpt_levels = wpt_levels;
  d.pathway_channels = pathway_channels;
  d.attribute_dim = attribute_dim;
  d.use_wpt = use_wpt;
  d.use_attribute_embedding = use_fae;
  d.wavelet = wavelet;
  d.validate();
  return d;
}

PairingPolicy TrainConfig::pairing_policy() const {
  PairingPolicy p;
  p.target_group = target_group;
  p.match_attributes = use_fae;
  return p;
}

std::string loss_csv_row(const LossRecord& r) {
  std::ostringstream out;
  out << r.iteration << ',' << shortest(r.l_g) << ',' << shortest(r.gan_g) << ','
      << shortest(r.pix) << ',' << shortest(r.id) << ',' << shortest(r.l_d);
  return out.str();
}

Trainer::Trainer(const TrainConfig& config, const Dataset& dataset)
    : config_(config),
      dataset_(&dataset),
      stream_(dataset, (config.validate(), config.pairing_policy()), config.batch_size,
              config.seed) {
  const std::size_t res = dataset.config.resolution;
  const std::size_t p = dataset.config.schema.dim();
  generator_ = std::make_unique<Generator<float>>(config_.generator_config(res, p), config_.seed);
  discriminator_ = std::make_unique<Discriminator<float>>(
      config_.discriminator_config(res, p), config_.seed ^ kDiscriminatorSeedSalt);
  encoder_ = std::make_shared<RandomConvEncoder<float>>(config_.identity_seed);
  const auto lr = static_cast<float>(config_.learning_rate);
  const auto b1 = static_cast<float>(config_.beta1);
  const auto b2 = static_cast<float>(config_.beta2);
  const auto eps = static_cast<float>(config_.epsilon);
  generator_adam_ = make_adam_state(generator_->parameters().tensors(), lr, b1, b2, eps);
  discriminator_adam_ = make_adam_state(discriminator_->parameters().tensors(), lr, b1, b2, eps);
  if (config_.auto_scale) {
    weights_ = LossWeights{0.0, 0.0, true, false};
  } else {
    weights_ = LossWeights{config_.lambda_pix, config_.lambda_id, false, true};
  }
}

void Trainer::set_encoder(std::shared_ptr<const IdentityEncoder<float>> encoder) {
  if (!encoder) throw std::invalid_argument("identity encoder must not be null");
  encoder_ = std::move(encoder);
}

double Trainer::discriminator_step(const Batch& batch) {
  generator_->parameters().zero_grad();
  discriminator_->parameters().zero_grad();
  Tensorf fake;
  {
    NoGradGuard guard;
    fake = generator_->forward(batch.young, batch.young_attributes);
  }
  const auto& d = *discriminator_;
  const Tensorf loss = loss_gan_d(d.forward(batch.old, batch.old_attributes),
                                  d.forward(fake.detach(), batch.young_attributes),
                                  d.forward(batch.negative, batch.negative_attributes));
  const double value = loss.item();
  if (!std::isfinite(value)) return value;
  loss.backward();
  auto params = discriminator_->parameters().tensors();
  adam_step(params, discriminator_adam_);
  ++discriminator_updates_;
  if (after_discriminator_step) after_discriminator_step(*this);
  return value;
}

LossRecord Trainer::generator_step(const Batch& batch, bool pixel_step) {
  generator_->parameters().zero_grad();
  discriminator_->parameters().zero_grad();
  const Tensorf fake = generator_->forward(batch.young, batch.young_attributes);
  const Tensorf gan = loss_gan_g(discriminator_->forward(fake, batch.young_attributes));
  const Tensorf pix = loss_pix(fake, batch.young);
  const Tensorf id = loss_id(fake, batch.young, *encoder_);
  const bool pixel_in_term = pixel_step && config_.pixel_critic_mode == PixelCriticMode::Term;
  const auto totals = total_losses(gan, pix, id, gan, weights_, pixel_in_term);

  LossRecord r;
  r.l_g = totals.generator.item();
  r.gan_g = gan.item();
  r.pix = pix.item();
  r.id = id.item();
  r.pixel_step = pixel_step;
  r.applied_lambda_pix = pixel_step ? weights_.lambda_pix : 0.0;
  if (!all_finite(r)) return r;

  totals.generator.backward();
  auto params = generator_->parameters().tensors();
  adam_step(params, generator_adam_);
  ++generator_updates_;

  if (pixel_step && config_.pixel_critic_mode == PixelCriticMode::SeparateStep &&
      weights_.lambda_pix > 0.0) {
    generator_->parameters().zero_grad();
    const Tensorf again = generator_->forward(batch.young, batch.young_attributes);
    (loss_pix(again, batch.young) * static_cast<float>(weights_.lambda_pix)).backward();
    adam_step(params, generator_adam_);
    ++generator_updates_;
  }
  discriminator_->parameters().zero_grad();
  if (after_generator_step) after_generator_step(*this);
  return r;
}

void Trainer::maybe_finish_warmup() {
  if (weights_.frozen || warmup_.count < config_.warmup_iterations) return;
  weights_ = auto_scale_lambdas(warmup_.stats());
}

LossRecord Trainer::step() {
  const std::uint64_t it = iteration_ + 1;
  const Batch batch = stream_.batch(it - 1);
  const double l_d = discriminator_step(batch);
  LossRecord r;
  if (std::isfinite(l_d)) {
    r = generator_step(batch, it % config_.pixel_critic_period == 0);
  }
  r.iteration = it;
  r.l_d = l_d;
  if (!all_finite(r))
    throw NumericError("non-finite loss at iteration " + std::to_string(it));
  if (!weights_.frozen) {
    warmup_.add(r.gan_g, r.pix, r.id);
    maybe_finish_warmup();
  }
  iteration_ = it;
  return r;
}

std::vector<LossRecord> Trainer::run_until(std::uint64_t last) {
  std::vector<LossRecord> out;
  while (iteration_ < last) out.push_back(step());
  return out;
}

void Trainer::save_state(const std::filesystem::path& path) const {
  Checkpoint cp;
  cp.kind = CheckpointKind::TrainState;
  cp.config = config_.to_key_values();
  cp.config["state.iteration"] = std::to_string(iteration_);
  cp.config["state.resolution"] = std::to_string(dataset_->config.resolution);
  cp.config["state.attributes"] = dataset_->config.schema.to_string();
  cp.config["state.lambda_pix"] = format_exact(weights_.lambda_pix);
  cp.config["state.lambda_id"] = format_exact(weights_.lambda_id);
  cp.config["state.frozen"] = weights_.frozen ? "true" : "false";
  cp.config["state.warmup_gan_g"] = format_exact(warmup_.sum_gan_g);
  cp.config["state.warmup_pix"] = format_exact(warmup_.sum_pix);
  cp.config["state.warmup_id"] = format_exact(warmup_.sum_id);
  cp.config["state.warmup_count"] = std::to_string(warmup_.count);
  cp.config["state.generator_adam_step"] = std::to_string(generator_adam_.step);
  cp.config["state.discriminator_adam_step"] = std::to_string(discriminator_adam_.step);
  cp.config["state.generator_updates"] = std::to_string(generator_updates_);
  cp.config["state.discriminator_updates"] = std::to_string(discriminator_updates_);
  append_tensors(cp, "G.", generator_->parameters());
  append_tensors(cp, "D.", discriminator_->parameters());
  append_moments(cp, "G.adam.", generator_->parameters(), generator_adam_);
  append_moments(cp, "D.adam.", discriminator_->parameters(), discriminator_adam_);
  save_checkpoint(path, cp);
}

void Trainer::set_schedule(std::uint64_t iterations, std::uint64_t checkpoint_every) {
  config_.iterations = iterations;
  config_.checkpoint_every = checkpoint_every;
}

Trainer Trainer::resume(const std::filesystem::path& state_path, const Dataset& dataset) {
  const Checkpoint cp = load_checkpoint(state_path);
  if (cp.kind != CheckpointKind::TrainState)
    throw FormatError(state_path.string() + " is not a training-state checkpoint");
  if (parse_u64(cp.value("state.resolution"), "state.resolution") != dataset.config.resolution ||
      cp.value("state.attributes") != dataset.config.schema.to_string())
    throw std::invalid_argument(state_path.string() +
                                " was trained on a dataset with a different resolution or "
                                "attribute schema");
  Trainer t(TrainConfig::from_key_values(cp.config), dataset);
  restore_tensors(cp, "G.", t.generator_->parameters());
  restore_tensors(cp, "D.", t.discriminator_->parameters());
  restore_moments(cp, "G.adam.", t.generator_->parameters(), t.generator_adam_);
  restore_moments(cp, "D.adam.", t.discriminator_->parameters(), t.discriminator_adam_);
  t.iteration_ = parse_u64(cp.value("state.iteration"), "state.iteration");
  t.weights_.lambda_pix = parse_double(cp.value("state.lambda_pix"), "state.lambda_pix");
  t.weights_.lambda_id = parse_double(cp.value("state.lambda_id"), "state.lambda_id");
  t.weights_.frozen = parse_bool(cp.value("state.frozen"), "state.frozen");
  t.warmup_.sum_gan_g = parse_double(cp.value("state.warmup_gan_g"), "state.warmup_gan_g");
  t.warmup_.sum_pix = parse_double(cp.value("state.warmup_pix"), "state.warmup_pix");
  t.warmup_.sum_id = parse_double(cp.value("state.warmup_id"), "state.warmup_id");
  t.warmup_.count = parse_u64(cp.value("state.warmup_count"), "state.warmup_count");
  t.generator_adam_.step =
      parse_u64(cp.value("state.generator_adam_step"), "state.generator_adam_step");
  t.discriminator_adam_.step =
      parse_u64(cp.value("state.discriminator_adam_step"), "state.discriminator_adam_step");
  t.generator_updates_ =
      parse_u64(cp.value("state.generator_updates"), "state.generator_updates");
  t.discriminator_updates_ =
      parse_u64(cp.value("state.discriminator_updates"), "state.discriminator_updates");
  return t;
}

TrainResult train(const TrainConfig& config, const Dataset& dataset,
                  const std::filesystem::path& out_dir,
                  const std::optional<std::filesystem::path>& resume_from) {
  config.validate();
  std::filesystem::create_directories(out_dir);
  TrainResult result;
  result.state_path = out_dir / "state.agwc";
  result.generator_path = out_dir / "generator.agwc";
  result.loss_csv_path = out_dir / "losses.csv";

  Trainer trainer = resume_from ? Trainer::resume(*resume_from, dataset)
                                : Trainer(config, dataset);
  if (resume_from) trainer.set_schedule(config.iterations, config.checkpoint_every);
  std::optional<std::filesystem::path> last_good = resume_from;

  // Keep only rows the resumed state has already accounted for.
  std::vector<std::string> kept;
  if (resume_from && std::filesystem::exists(result.loss_csv_path)) {
    std::ifstream in(result.loss_csv_path);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (parse_u64(line.substr(0, line.find(',')), "loss CSV iteration") <= trainer.iteration())
        kept.push_back(line);
    }
  }
  std::ofstream csv(result.loss_csv_path, std::ios::trunc);
  if (!csv) throw FormatError("cannot write " + result.loss_csv_path.string());
  csv << kLossCsvHeader << '\n';
  for (const auto& line : kept) csv << line << '\n';

  while (trainer.iteration() < config.iterations) {
    LossRecord r;
    try {
      r = trainer.step();
    } catch (const NumericError& e) {
      throw NumericError("training aborted at iteration " +
                         std::to_string(trainer.iteration() + 1) + ": " + e.what() +
                         "; last good checkpoint: " +
                         (last_good ? last_good->string() : std::string("none")));
    }
    csv << loss_csv_row(r) << '\n';
    result.records.push_back(r);
    if (config.checkpoint_every != 0 && trainer.iteration() % config.checkpoint_every == 0 &&
        trainer.iteration() < config.iterations) {
      csv.flush();
      trainer.save_state(result.state_path);
      last_good = result.state_path;
    }
  }
  csv.flush();
  trainer.save_state(result.state_path);
  const KeyValues extra{{"schema", dataset.config.schema.to_string()},
                        {"target_group", to_string(trainer.config().target_group)}};
  save_model(result.generator_path, trainer.generator(), extra);
  save_model(out_dir / "discriminator.agwc", trainer.discriminator(), extra);
  return result;
}

}  // namespace agewave
