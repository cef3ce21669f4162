#include "agewave/adam.hpp"

#include <cmath>
#include <string>

namespace agewave {

template <typename T>
AdamState<T> make_adam_state(const std::vector<Tensor<T>>& params, T learning_rate, T beta1,
                             T beta2, T epsilon) {
  AdamState<T> state;
  state.learning_rate = learning_rate;
  state.beta1 = beta1;
  state.beta2 = beta2;
  state.epsilon = epsilon;
  for (const auto& p : params) {
    state.first_moment.emplace_back(p.numel(), T(0));
    state.second_moment.emplace_back(p.numel(), T(0));
  }
  return state;
}

template <typename T>
void adam_step(std::vector<Tensor<T>>& params, AdamState<T>& state) {
  if (state.first_moment.size() != params.size() || state.second_moment.size() != params.size())
    throw ShapeError("adam_step: state tracks " + std::to_string(state.first_moment.size()) +
                     " parameters, got " + std::to_string(params.size()));
  ++state.step;
  const T t = static_cast<T>(state.step);
  const T correction1 = T(1) - std::pow(state.beta1, t);
  const T correction2 = T(1) - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    auto values = params[k].mutable_data();
    if (m.size() != values.size() || v.size() != values.size())
      throw ShapeError("adam_step: moment size mismatch for parameter " + std::to_string(k));
    auto grad = params[k].grad();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const T g = grad.empty() ? T(0) : grad[i];
      m[i] = state.beta1 * m[i] + (T(1) - state.beta1) * g;
      v[i] = state.beta2 * v[i] + (T(1) - state.beta2) * g * g;
      const T m_hat = m[i] / correction1;
      const T v_hat = v[i] / correction2;
      values[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

template AdamState<float> make_adam_state(const std::vector<Tensor<float>>&, float, float, float,
                                          float);
template AdamState<double> make_adam_state(const std::vector<Tensor<double>>&, double, double,
                                           double, double);
template void adam_step(std::vector<Tensor<float>>&, AdamState<float>&);
template void adam_step(std::vector<Tensor<double>>&, AdamState<double>&);

}  // namespace agewave
