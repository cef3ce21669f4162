#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "agewave/tensor.hpp"

namespace agewave {

// Elementwise arithmetic. Binary ops need identical shapes; the only
// broadcasts are scalar-with-tensor and the explicit replicate ops below.
template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> add_scalar(const Tensor<T>& a, T s);
template <typename T> Tensor<T> mul_scalar(const Tensor<T>& a, T s);
/// Multiplies a tensor by a 1-element tensor, differentiable in both.
template <typename T> Tensor<T> scale_by(const Tensor<T>& a, const Tensor<T>& s);
template <typename T> Tensor<T> square(const Tensor<T>& a);

template <typename T> Tensor<T> relu(const Tensor<T>& a);
template <typename T> Tensor<T> leaky_relu(const Tensor<T>& a, T slope);
/// Hyperbolic tangent, clamped to the open interval (-1, 1) so that
/// saturation in finite precision never reaches the endpoints.
template <typename T> Tensor<T> tanh(const Tensor<T>& a);

// Reductions (fixed sequential order) to a 1-element tensor.
template <typename T> Tensor<T> sum(const Tensor<T>& a);
template <typename T> Tensor<T> mean(const Tensor<T>& a);
/// Sum of squared differences; the squared Frobenius norm of a - b.
template <typename T> Tensor<T> frobenius_sq(const Tensor<T>& a, const Tensor<T>& b);

/// Concatenates along `axis`; all other extents must agree.
template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& tensors, std::size_t axis);

/// Replicates a [N, P] code over new spatial axes to [N, P, H, W].
template <typename T>
Tensor<T> tile_spatial(const Tensor<T>& code, std::size_t height, std::size_t width);

/// 1-D lookup: out[i] = table[indices[i]].
template <typename T>
Tensor<T> gather(const Tensor<T>& table, const std::vector<std::size_t>& indices);

/// Cross-correlation of [N,C,H,W] with [F,C,kh,kw] plus optional bias [F].
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel, std::size_t stride,
                 std::size_t padding, const std::optional<Tensor<T>>& bias = std::nullopt);

/// Adjoint of conv2d with respect to its input: maps [N,F,H,W] with kernel
/// [F,C,kh,kw] to [N,C,(H-1)*stride - 2*padding + kh + output_padding, ...].
template <typename T>
Tensor<T> conv2d_transpose(const Tensor<T>& input, const Tensor<T>& kernel, std::size_t stride,
                           std::size_t padding, std::size_t output_padding = 0,
                           const std::optional<Tensor<T>>& bias = std::nullopt);

/// Per-sample, per-channel normalization over the spatial axes (no affine).
template <typename T>
Tensor<T> instance_norm(const Tensor<T>& input, T epsilon = T(1e-5));

std::size_t conv_output_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                               std::size_t padding);

template <typename T> Tensor<T> operator+(const Tensor<T>& a, const Tensor<T>& b) { return add(a, b); }
template <typename T> Tensor<T> operator-(const Tensor<T>& a, const Tensor<T>& b) { return sub(a, b); }
template <typename T> Tensor<T> operator*(const Tensor<T>& a, const Tensor<T>& b) { return mul(a, b); }
template <typename T> Tensor<T> operator+(const Tensor<T>& a, T s) { return add_scalar(a, s); }
template <typename T> Tensor<T> operator-(const Tensor<T>& a, T s) { return add_scalar(a, -s); }
template <typename T> Tensor<T> operator*(const Tensor<T>& a, T s) { return mul_scalar(a, s); }
template <typename T> Tensor<T> operator*(T s, const Tensor<T>& a) { return mul_scalar(a, s); }

}  // namespace agewave
