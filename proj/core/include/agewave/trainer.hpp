#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "agewave/adam.hpp"
#include "agewave/checkpoint.hpp"
#include "agewave/dataset.hpp"
#include "agewave/networks.hpp"
#include "agewave/objectives.hpp"

namespace agewave {

/// How the periodic pixel critic acts on the generator.
enum class PixelCriticMode {
  /// lambda_pix * L_pix joins L_G on cadence iterations.
  Term,
  /// A separate generator update on lambda_pix * L_pix alone on cadence iterations.
  SeparateStep,
};

std::string to_string(PixelCriticMode mode);
PixelCriticMode parse_pixel_critic_mode(const std::string& text);

struct TrainConfig {
  AgeGroup target_group = AgeGroup::G51plus;
  std::uint64_t iterations = 2000;
  std::size_t batch_size = 16;
  double learning_rate = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t pixel_critic_period = 5;
  PixelCriticMode pixel_critic_mode = PixelCriticMode::Term;
  std::uint64_t seed = 1;
  bool use_fae = true;
  bool use_wpt = true;

  bool auto_scale = true;
  std::uint64_t warmup_iterations = 50;
  /// Used as given when auto_scale is off.
  double lambda_pix = 0.0;
  double lambda_id = 0.0;
  std::uint64_t identity_seed = 7;

  std::size_t base_channels = 32;
  std::size_t residual_blocks = 4;
  std::size_t pathway_channels = 32;
  std::vector<std::size_t> wpt_levels{1, 2, 3};
  WaveletFamily wavelet = WaveletFamily::Haar;

  /// 0 writes a training-state checkpoint only at the end.
  std::uint64_t checkpoint_every = 0;

  void validate() const;
  KeyValues to_key_values() const;
  static TrainConfig from_key_values(const KeyValues& values);

  GeneratorConfig generator_config(std::size_t resolution, std::size_t attribute_dim) const;
  DiscriminatorConfig discriminator_config(std::size_t resolution,
                                           std::size_t attribute_dim) const;
  PairingPolicy pairing_policy() const;
};

/// One iteration's losses; every field is filled on every iteration.
struct LossRecord {
  std::uint64_t iteration = 0;
  double l_g = 0.0;
  double gan_g = 0.0;
  double pix = 0.0;
  double id = 0.0;
  double l_d = 0.0;
  /// The pixel critic fired this iteration (iteration % period == 0).
  bool pixel_step = false;
  /// lambda_pix actually applied on this iteration (0 off-cadence or in warm-up).
  double applied_lambda_pix = 0.0;
};

inline constexpr const char* kLossCsvHeader = "iteration,L_G,L_GAN_G,L_pix,L_id,L_D";
std::string loss_csv_row(const LossRecord& record);

/// Alternating LSGAN optimization: each iteration runs one discriminator
/// update on (real old, detached fake, real young), then one generator
/// update. The dataset must outlive the trainer.
class Trainer {
 public:
  Trainer(const TrainConfig& config, const Dataset& dataset);

  /// Rebuilds a trainer from a training-state checkpoint; the next step()
  /// continues the interrupted trajectory exactly.
  static Trainer resume(const std::filesystem::path& state_path, const Dataset& dataset);

  LossRecord step();
  /// Steps until `iteration() == last`.
  std::vector<LossRecord> run_until(std::uint64_t last);

  void save_state(const std::filesystem::path& path) const;

  /// Replaces the iteration target and checkpoint cadence recorded in the
  /// config; neither affects the trajectory.
  void set_schedule(std::uint64_t iterations, std::uint64_t checkpoint_every);

  std::uint64_t iteration() const { return iteration_; }
  const TrainConfig& config() const { return config_; }
  const LossWeights& weights() const { return weights_; }
  Generator<float>& generator() { return *generator_; }
  const Generator<float>& generator() const { return *generator_; }
  Discriminator<float>& discriminator() { return *discriminator_; }
  const Discriminator<float>& discriminator() const { return *discriminator_; }
  const IdentityEncoder<float>& encoder() const { return *encoder_; }
  std::uint64_t generator_updates() const { return generator_updates_; }
  std::uint64_t discriminator_updates() const { return discriminator_updates_; }

  /// Replaces the identity encoder, e.g. with phi = identity.
  void set_encoder(std::shared_ptr<const IdentityEncoder<float>> encoder);

  /// Test hooks run right after each update of the named network.
  std::function<void(const Trainer&)> after_discriminator_step;
  std::function<void(const Trainer&)> after_generator_step;

 private:
  double discriminator_step(const Batch& batch);
  LossRecord generator_step(const Batch& batch, bool pixel_step);
  void maybe_finish_warmup();

  TrainConfig config_;
  const Dataset* dataset_;
  std::unique_ptr<Generator<float>> generator_;
  std::unique_ptr<Discriminator<float>> discriminator_;
  std::shared_ptr<const IdentityEncoder<float>> encoder_;
  AdamState<float> generator_adam_;
  AdamState<float> discriminator_adam_;
  BatchStream stream_;
  LossWeights weights_;
  WarmupAccumulator warmup_;
  std::uint64_t iteration_ = 0;
  std::uint64_t generator_updates_ = 0;
  std::uint64_t discriminator_updates_ = 0;
};

struct TrainResult {
  std::vector<LossRecord> records;
  std::filesystem::path state_path;
  std::filesystem::path generator_path;
  std::filesystem::path loss_csv_path;
};

/// Trains until config.iterations, starting fresh or from the state at
/// `resume_from` (whose stored config then governs everything but the
/// iteration count and checkpoint cadence), writing
/// `state.agwc` every checkpoint_every iterations and at the end, plus
/// `generator.agwc` and `losses.csv` under `out_dir`. A non-finite loss throws
/// NumericError naming the iteration and the last good state checkpoint.
TrainResult train(const TrainConfig& config, const Dataset& dataset,
                  const std::filesystem::path& out_dir,
                  const std::optional<std::filesystem::path>& resume_from = std::nullopt);

}  // namespace agewave
