#pragma once

#include <vector>

#include "agewave/synthetic.hpp"
#include "agewave/trainer.hpp"
#include "support.hpp"

namespace agewave::testing {

/// Narrow networks on 32x32 images: fast enough for per-iteration assertions.
inline TrainConfig tiny_train_config() {
  TrainConfig c;
  c.iterations = 10;
  c.batch_size = 4;
  c.base_channels = 4;
  c.residual_blocks = 1;
  c.pathway_channels = 4;
  c.auto_scale = false;
  c.lambda_pix = 0.01;
  c.lambda_id = 0.1;
  return c;
}

inline Dataset tiny_dataset(std::size_t resolution = 32, std::size_t n_per_cell = 2,
                            std::uint64_t seed = 3) {
  SyntheticAgingSpec spec;
  spec.resolution = resolution;
  return generate_synthetic(spec, n_per_cell, seed);
}

/// Flat copy of every value in a parameter table, in table order.
inline std::vector<float> snapshot(const ParameterTable<float>& table) {
  std::vector<float> out;
  for (const auto& [name, t] : table.entries()) out.insert(out.end(), t.data().begin(), t.data().end());
  return out;
}

}  // namespace agewave::testing
