#pragma once

#include <cstdint>
#include <random>

#include "agewave/tensor.hpp"

namespace agewave {

/// Kernel/weight init: zero-mean Gaussian with std 0.02.
inline constexpr double kInitStddev = 0.02;

template <typename T>
Tensor<T> gaussian_tensor(Shape shape, std::mt19937_64& rng, double stddev = kInitStddev,
                          bool requires_grad = true) {
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<T> values(shape_numel(shape));
  for (auto& v : values) v = static_cast<T>(dist(rng));
  return Tensor<T>(std::move(shape), std::move(values), requires_grad);
}

template <typename T>
Tensor<T> uniform_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0,
                         bool requires_grad = false) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<T> values(shape_numel(shape));
  for (auto& v : values) v = static_cast<T>(dist(rng));
  return Tensor<T>(std::move(shape), std::move(values), requires_grad);
}

}  // namespace agewave
