#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>

#include "agewave/networks.hpp"
#include "agewave/tensor.hpp"

namespace agewave {

/// Least-squares generator loss: mean of (D(G(x,a),a) - 1)^2.
template <typename T>
Tensor<T> loss_gan_g(const Tensor<T>& d_out_fake);

/// Three-term least-squares discriminator loss: real old faces toward 1,
/// generated faces and real young faces toward 0. Each term is a mean.
template <typename T>
Tensor<T> loss_gan_d(const Tensor<T>& d_real_old, const Tensor<T>& d_fake,
                     const Tensor<T>& d_real_young);

/// Batch mean of the squared Frobenius norm of generated - input.
template <typename T>
Tensor<T> loss_pix(const Tensor<T>& generated, const Tensor<T>& input);

/// Frozen feature extractor used by the identity loss.
template <typename T>
class IdentityEncoder {
 public:
  virtual ~IdentityEncoder() = default;
  virtual Tensor<T> features(const Tensor<T>& images) const = 0;
  virtual const ParameterTable<T>& parameters() const = 0;
};

/// Four conv layers with fixed-seed Gaussian weights that never train.
template <typename T>
class RandomConvEncoder final : public IdentityEncoder<T> {
 public:
  explicit RandomConvEncoder(std::uint64_t seed, std::size_t in_channels = 3);
  Tensor<T> features(const Tensor<T>& images) const override;
  const ParameterTable<T>& parameters() const override { return params_; }

 private:
  ParameterTable<T> params_;
};

/// phi(x) = x. With it, the identity loss equals the pixel loss.
template <typename T>
class IdentityMapEncoder final : public IdentityEncoder<T> {
 public:
  Tensor<T> features(const Tensor<T>& images) const override { return images; }
  const ParameterTable<T>& parameters() const override { return params_; }

 private:
  ParameterTable<T> params_;
};

/// Batch mean of ||phi(generated) - phi(input)||_F^2; phi(input) is detached.
template <typename T>
Tensor<T> loss_id(const Tensor<T>& generated, const Tensor<T>& input,
                  const IdentityEncoder<T>& encoder);

struct LossWeights {
  double lambda_pix = 0.0;
  double lambda_id = 0.0;
  bool auto_scale = true;
  /// Set once auto-scaling has fixed the weights.
  bool frozen = false;
};

template <typename T>
struct LossTotals {
  Tensor<T> generator;
  Tensor<T> discriminator;
};

/// L_G = L_GAN(G) + lambda_pix * L_pix + lambda_id * L_id (the pixel term only
/// when `include_pixel`), and L_D = L_GAN(D).
template <typename T>
LossTotals<T> total_losses(const Tensor<T>& gan_g, const Tensor<T>& pix, const Tensor<T>& id,
                           const Tensor<T>& gan_d, const LossWeights& weights,
                           bool include_pixel = true);

struct WarmupStats {
  double mean_gan_g = 0.0;
  double mean_pix = 0.0;
  double mean_id = 0.0;
};

/// Matches each auxiliary term's magnitude to L_GAN(G), then divides by 10.
LossWeights auto_scale_lambdas(const WarmupStats& stats);

/// Running sums of loss magnitudes over the warm-up window.
struct WarmupAccumulator {
  double sum_gan_g = 0.0;
  double sum_pix = 0.0;
  double sum_id = 0.0;
  std::size_t count = 0;

  void add(double gan_g, double pix, double id);
  WarmupStats stats() const;
};

}  // namespace agewave
