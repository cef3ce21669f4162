#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "agewave/tensor.hpp"

namespace agewave {

enum class WaveletFamily { Haar, Db2 };

std::string to_string(WaveletFamily family);
WaveletFamily parse_wavelet_family(const std::string& name);

/// Orthonormal analysis filter pair. Synthesis uses the same taps (the
/// transform is orthogonal), so no separate reconstruction taps are stored.
struct WaveletFilterPair {
  std::vector<double> low;
  std::vector<double> high;
  WaveletFamily family = WaveletFamily::Haar;

  static WaveletFilterPair haar();
  static WaveletFilterPair db2();
  static WaveletFilterPair of(WaveletFamily family);

  /// Equal lengths, unit norms and mutual orthogonality within 1e-12.
  void validate() const;
};

/// All 4^level subbands of one decomposition level, each [N, C, H/2^level, W/2^level].
///
/// Subbands are ordered breadth-first: the children of subband s at the next
/// level are 4s + 2r + c, where r selects the filter applied along rows
/// (horizontal) and c the filter applied along columns (vertical); 0 is
/// low-pass and 1 is high-pass. Level 1 is therefore LL, LH, HL, HH.
template <typename T>
struct CoefficientPacket {
  std::size_t level = 0;
  std::vector<Tensor<T>> subbands;

  /// Channel-major flattening to [N, C*4^level, h, w]: channel c, subband s
  /// lands at c*4^level + s.
  Tensor<T> flatten() const;
};

/// Packets for levels 1..levels. Image dims must be divisible by 2^levels.
/// Filters wrap periodically at the border, which is a no-op for Haar.
template <typename T>
std::vector<CoefficientPacket<T>> wpt_forward(const Tensor<T>& image, std::size_t levels,
                                              const WaveletFilterPair& filters);

/// Inverse transform of a single packet back to image space.
template <typename T>
Tensor<T> wpt_inverse(const CoefficientPacket<T>& packet, const WaveletFilterPair& filters);

/// Fixed kernel [C*4^levels, C, 2^levels, 2^levels]; conv2d with stride
/// 2^levels reproduces the flattened level packet. Needs 2-tap filters.
template <typename T>
Tensor<T> wpt_as_conv(std::size_t levels, const WaveletFilterPair& filters, std::size_t channels);

/// Two-letter path names per level, e.g. "LL.HL" for subband 2 at level 2.
std::string subband_name(std::size_t level, std::size_t index);

}  // namespace agewave
