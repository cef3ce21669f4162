#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "agewave/dataset.hpp"
#include "agewave/networks.hpp"
#include "agewave/objectives.hpp"
#include "agewave/synthetic.hpp"
#include "agewave/trainer.hpp"

namespace agewave {

/// Mean squared level-1 Haar high-pass coefficient (LH, HL, HH, all
/// channels) of one [3,H,W] image. A proxy for apparent age on synthetic data.
double texture_energy(const Tensorf& image);

struct StatSummary {
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t count = 0;
};

StatSummary summarize(const std::vector<double>& values);
StatSummary texture_statistics(const std::vector<Tensorf>& images);

/// Batched image-to-image map: ([N,3,R,R], [N,p]) -> [N,3,R,R].
using ImageMap = std::function<Tensorf(const Tensorf& images, const Tensorf& attributes)>;

/// Gradient-free view of a generator.
ImageMap generator_map(const Generator<float>& generator);

/// Applies `map` to every sample in batches and returns one [3,R,R] image per sample.
std::vector<Tensorf> apply_map(const ImageMap& map, const std::vector<TrainingSample>& samples,
                               std::size_t batch_size = 16);

struct AttributeRates {
  /// Percentage of outputs whose oracle labels all equal the input's labels.
  double overall = 0.0;
  /// Per attribute group, in schema order.
  std::vector<double> per_group;
};

/// Compares oracle labels of each output against the input's recorded labels.
AttributeRates attribute_preservation(const std::vector<Tensorf>& outputs,
                                      const std::vector<TrainingSample>& inputs,
                                      const AttributeOracle& oracle);

struct DistanceStats {
  double mean = 0.0;
  double stddev = 0.0;
  double min = 0.0;
  double max = 0.0;
};

/// Per-sample ||phi(output) - phi(input)||_F.
DistanceStats identity_distance(const std::vector<Tensorf>& outputs,
                                const std::vector<TrainingSample>& inputs,
                                const IdentityEncoder<float>& encoder);

/// Labels reported metrics as proxies for the face-analysis estimators.
inline constexpr const char* kProxyNote =
    "proxy metrics: texture energy stands in for estimated age, a rule-based oracle for "
    "attribute estimation, frozen-encoder distance for face verification";

struct EvalReport {
  std::string cell = "full";
  AgeGroup target_group = AgeGroup::G51plus;
  std::uint64_t seed = 0;
  std::string config_hash;
  /// Oracle accuracy on clean inputs; must be 100 before any model metric.
  double oracle_gate = 0.0;
  std::array<StatSummary, kAgeGroupCount> generic_texture{};
  StatSummary input_texture;
  StatSummary generated_texture;
  AttributeRates preservation;
  DistanceStats identity;
  std::size_t samples = 0;
};

struct EvalOptions {
  std::string cell = "full";
  std::uint64_t seed = 0;
  std::string config_hash;
  /// 0 evaluates every source-group sample.
  std::size_t max_samples = 0;
  std::size_t batch_size = 16;
};

/// Evaluates a generator on the source-group samples of `dataset`. Throws
/// std::runtime_error if the oracle gate on clean data is below 100%.
EvalReport evaluate(const ImageMap& map, const Dataset& dataset, AgeGroup target_group,
                    const IdentityEncoder<float>& encoder, const EvalOptions& options);

std::string report_csv_header();
std::string report_csv_row(const EvalReport& report);
void write_reports_csv(const std::filesystem::path& path, const std::vector<EvalReport>& reports);
/// Fixed-width human-readable table.
std::string format_report_table(const std::vector<EvalReport>& reports);

/// Grid image: one row per input, columns input | outputs[0] | outputs[1] ...
void write_image_grid(const std::filesystem::path& path, const std::vector<Tensorf>& inputs,
                      const std::vector<std::vector<Tensorf>>& outputs);

struct AblationCell {
  std::string name;  // e.g. "wFAE/woWPT"
  bool use_fae = true;
  bool use_wpt = true;
};

/// woFAE/woWPT, woFAE/wWPT, wFAE/woWPT, wFAE/wWPT.
std::vector<AblationCell> ablation_cells();

struct AblationResult {
  std::vector<TrainConfig> configs;
  std::vector<EvalReport> reports;
};

/// Trains the four cells from `base` (only the two flags differ) on
/// `train_set`, evaluates each on `eval_set`, and writes per-cell run
/// directories plus ablation.csv and ablation.txt under `out_dir`.
AblationResult run_ablation_grid(const Dataset& train_set, const Dataset& eval_set,
                                 const TrainConfig& base, const std::filesystem::path& out_dir,
                                 std::size_t max_eval_samples = 0);

}  // namespace agewave
