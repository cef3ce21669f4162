#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "agewave/attributes.hpp"
#include "agewave/dataset.hpp"
#include "agewave/tensor.hpp"

namespace agewave {

/// Flat-shaded shape on a dark background. `shape` stands in for gender and
/// `hue` for race; aging adds row-alternating stripes inside the shape whose
/// amplitude grows with the age group.
struct SyntheticAgingSpec {
  std::size_t resolution = 64;
  std::array<double, kAgeGroupCount> stripe_amplitude{0.0, 0.08, 0.16, 0.24};
  /// Probability that a manifest label is replaced by the other value.
  double label_flip_probability = 0.0;

  void validate() const;
  /// shape=circle|square;hue=A|B
  static AttributeSchema schema();
};

/// n_per_cell samples for every (shape, hue, age group) cell, quantized to
/// 8-bit levels so that a PPM round trip is exact.
Dataset generate_synthetic(const SyntheticAgingSpec& spec, std::size_t n_per_cell,
                           std::uint64_t seed);

/// Rule-based attribute classifier for synthetic images: the foreground is
/// the largest connected bright region, hue is the sign of mean(R - B) over
/// it, and shape is decided by how much of its bounding box it fills.
class AttributeOracle {
 public:
  /// image [3,H,W] or [1,3,H,W]; returns {shape, hue}.
  std::vector<std::string> classify(const Tensorf& image) const;
  AttributeVector classify_code(const Tensorf& image) const;
  /// Percentage of samples whose oracle labels equal their recorded labels.
  double accuracy(const std::vector<TrainingSample>& samples) const;
};

}  // namespace agewave
