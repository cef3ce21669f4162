#pragma once

#include <cstdint>
#include <vector>

#include "agewave/tensor.hpp"

namespace agewave {

template <typename T>
struct AdamState {
  std::uint64_t step = 0;
  std::vector<std::vector<T>> first_moment;
  std::vector<std::vector<T>> second_moment;
  T learning_rate = T(1e-4);
  T beta1 = T(0.5);
  T beta2 = T(0.999);
  T epsilon = T(1e-8);
};

/// Zeroed moments matching each parameter's size.
template <typename T>
AdamState<T> make_adam_state(const std::vector<Tensor<T>>& params, T learning_rate, T beta1,
                             T beta2, T epsilon);

/// One bias-corrected Adam update using each parameter's accumulated grad.
/// A parameter without a grad is treated as having a zero gradient.
template <typename T>
void adam_step(std::vector<Tensor<T>>& params, AdamState<T>& state);

}  // namespace agewave
