#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "agewave/attributes.hpp"
#include "agewave/tensor.hpp"

namespace agewave {

enum class AgeGroup : std::uint8_t { Under30 = 0, G31_40 = 1, G41_50 = 2, G51plus = 3 };
inline constexpr std::size_t kAgeGroupCount = 4;
inline constexpr std::array<AgeGroup, kAgeGroupCount> kAllAgeGroups{
    AgeGroup::Under30, AgeGroup::G31_40, AgeGroup::G41_50, AgeGroup::G51plus};
inline constexpr int kMaxAge = 120;

/// 0-30, 31-40, 41-50, 51-120. Throws std::out_of_range outside 0..120.
AgeGroup age_to_group(int age);
/// Age written into generated manifests for each group.
int representative_age(AgeGroup group);
std::string to_string(AgeGroup group);
/// Accepts "Under30", "G31_40", "G41_50", "G51plus" and "30-", "31-40", "41-50", "51+".
AgeGroup parse_age_group(const std::string& text);

struct TrainingSample {
  Tensorf image;  // [3,R,R] in [-1,1]
  AttributeVector attributes;
  AgeGroup age_group = AgeGroup::Under30;
  std::string id;
};

/// Flat key=value dataset description stored as dataset.cfg.
struct DatasetConfig {
  std::size_t resolution = 0;
  AttributeSchema schema;
  std::string manifest = "manifest.csv";
  std::string image_dir = "images";

  void validate() const;
};

DatasetConfig read_dataset_config(const std::filesystem::path& path);
void write_dataset_config(const std::filesystem::path& path, const DatasetConfig& config);

struct Dataset {
  DatasetConfig config;
  std::vector<TrainingSample> samples;

  std::vector<std::size_t> indices_of(AgeGroup group) const;
};

/// Thread cap for loading: AGEWAVE_THREADS if set, else hardware concurrency.
std::size_t data_threads();

/// Reads a CSV with header `filename,age,<group>...` whose attribute columns
/// name the schema groups in schema order. Images are decoded, resized to
/// `resolution` and scaled to [-1,1].
std::vector<TrainingSample> load_manifest(const std::filesystem::path& image_dir,
                                          const std::filesystem::path& manifest_path,
                                          const AttributeSchema& schema,
                                          std::size_t resolution, std::size_t threads = 0);

/// Loads `<dir>/dataset.cfg` and the manifest it names.
Dataset load_dataset(const std::filesystem::path& dir);
/// Writes images as PPM, the manifest and dataset.cfg under `dir`.
void write_dataset(const std::filesystem::path& dir, const Dataset& dataset);

/// Young inputs come from `source_group`; positives from `target_group`.
struct PairingPolicy {
  AgeGroup source_group = AgeGroup::Under30;
  AgeGroup target_group = AgeGroup::G51plus;
  bool match_attributes = true;

  void validate() const;
};

struct Batch {
  std::uint64_t index = 0;
  Tensorf young;             // [B,3,R,R]
  Tensorf young_attributes;  // [B,p]
  Tensorf old;
  Tensorf old_attributes;
  Tensorf negative;
  Tensorf negative_attributes;
  std::vector<std::size_t> young_ids;
  std::vector<std::size_t> old_ids;
  std::vector<std::size_t> negative_ids;
};

/// Deterministic stream of (young, old positive, young negative) batches.
/// Young and negative batches walk independent per-epoch permutations of the
/// source group; positives are drawn with replacement from the target group,
/// restricted to the young sample's attribute cell when matching is on.
/// Batch i depends only on (seed, i). The dataset must outlive the stream.
class BatchStream {
 public:
  BatchStream(const Dataset& dataset, const PairingPolicy& policy, std::size_t batch_size,
              std::uint64_t seed);

  Batch next();
  Batch batch(std::uint64_t index) const;
  std::uint64_t cursor() const { return cursor_; }
  void seek(std::uint64_t index) { cursor_ = index; }
  std::size_t batch_size() const { return batch_size_; }

 private:
  std::vector<std::size_t> epoch_order(std::uint64_t epoch, std::uint64_t stream) const;
  Tensorf stack_images(const std::vector<std::size_t>& ids) const;
  Tensorf stack_attributes(const std::vector<std::size_t>& ids) const;

  const Dataset* dataset_;
  PairingPolicy policy_;
  std::size_t batch_size_;
  std::uint64_t seed_;
  std::uint64_t cursor_ = 0;
  std::vector<std::size_t> young_;
  std::vector<std::size_t> old_;
  std::map<std::vector<float>, std::vector<std::size_t>> old_by_cell_;
};

}  // namespace agewave
