#include "agewave/objectives.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "agewave/init.hpp"
#include "agewave/ops.hpp"

namespace agewave {

template <typename T>
Tensor<T> loss_gan_g(const Tensor<T>& d_out_fake) {
  return mean(square(d_out_fake - T(1)));
}

template <typename T>
Tensor<T> loss_gan_d(const Tensor<T>& d_real_old, const Tensor<T>& d_fake,
                     const Tensor<T>& d_real_young) {
  return mean(square(d_real_old - T(1))) + mean(square(d_fake)) + mean(square(d_real_young));
}

template <typename T>
Tensor<T> loss_pix(const Tensor<T>& generated, const Tensor<T>& input) {
  if (generated.rank() < 1) throw ShapeError("loss_pix: needs a batch axis");
  return frobenius_sq(generated, input) * (T(1) / static_cast<T>(generated.dim(0)));
}

template <typename T>
RandomConvEncoder<T>::RandomConvEncoder(std::uint64_t seed, std::size_t in_channels) {
  std::mt19937_64 rng(seed);
  params_.add("conv1.weight", gaussian_tensor<T>({16, in_channels, 4, 4}, rng, kInitStddev, false));
  params_.add("conv2.weight", gaussian_tensor<T>({32, 16, 4, 4}, rng, kInitStddev, false));
  params_.add("conv3.weight", gaussian_tensor<T>({32, 32, 4, 4}, rng, kInitStddev, false));
  params_.add("conv4.weight", gaussian_tensor<T>({32, 32, 3, 3}, rng, kInitStddev, false));
}

template <typename T>
Tensor<T> RandomConvEncoder<T>::features(const Tensor<T>& images) const {
  const T slope = T(0.2);
  Tensor<T> h = leaky_relu(conv2d(images, params_.get("conv1.weight"), 2, 1), slope);
  h = leaky_relu(conv2d(h, params_.get("conv2.weight"), 2, 1), slope);
  h = leaky_relu(conv2d(h, params_.get("conv3.weight"), 2, 1), slope);
  return conv2d(h, params_.get("conv4.weight"), 1, 1);
}

template <typename T>
Tensor<T> loss_id(const Tensor<T>& generated, const Tensor<T>& input,
                  const IdentityEncoder<T>& encoder) {
  if (generated.shape() != input.shape())
    throw ShapeError("loss_id: shape mismatch " + shape_string(generated.shape()) + " vs " +
                     shape_string(input.shape()));
  const Tensor<T> target = encoder.features(input.detach()).detach();
  return frobenius_sq(encoder.features(generated), target) *
         (T(1) / static_cast<T>(generated.dim(0)));
}

template <typename T>
LossTotals<T> total_losses(const Tensor<T>& gan_g, const Tensor<T>& pix, const Tensor<T>& id,
                           const Tensor<T>& gan_d, const LossWeights& weights,
                           bool include_pixel) {
  if (weights.lambda_pix < 0 || weights.lambda_id < 0)
    throw std::invalid_argument("loss weights must be non-negative");
  Tensor<T> generator = gan_g;
  if (include_pixel && weights.lambda_pix != 0.0)
    generator = generator + pix * static_cast<T>(weights.lambda_pix);
  if (weights.lambda_id != 0.0) generator = generator + id * static_cast<T>(weights.lambda_id);
  return {generator, gan_d};
}

LossWeights auto_scale_lambdas(const WarmupStats& stats) {
  if (!(stats.mean_gan_g > 0.0) || !(stats.mean_pix > 0.0) || !(stats.mean_id > 0.0))
    throw std::invalid_argument(
        "auto_scale_lambdas: a warm-up loss magnitude is zero; run a longer warm-up");
  LossWeights w;
  w.lambda_pix = stats.mean_gan_g / stats.mean_pix / 10.0;
  w.lambda_id = stats.mean_gan_g / stats.mean_id / 10.0;
  w.auto_scale = true;
  w.frozen = true;
  return w;
}

void WarmupAccumulator::add(double gan_g, double pix, double id) {
  sum_gan_g += std::abs(gan_g);
  sum_pix += std::abs(pix);
  sum_id += std::abs(id);
  ++count;
}

WarmupStats WarmupAccumulator::stats() const {
  if (count == 0) return {};
  const double n = static_cast<double>(count);
  return {sum_gan_g / n, sum_pix / n, sum_id / n};
}

#define AGEWAVE_INSTANTIATE_OBJECTIVES(T)                                                     \
  template Tensor<T> loss_gan_g(const Tensor<T>&);                                            \
  template Tensor<T> loss_gan_d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);        \
  template Tensor<T> loss_pix(const Tensor<T>&, const Tensor<T>&);                            \
  template Tensor<T> loss_id(const Tensor<T>&, const Tensor<T>&, const IdentityEncoder<T>&);  \
  template LossTotals<T> total_losses(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,   \
                                      const Tensor<T>&, const LossWeights&, bool);            \
  template class RandomConvEncoder<T>;

AGEWAVE_INSTANTIATE_OBJECTIVES(float)
AGEWAVE_INSTANTIATE_OBJECTIVES(double)

}  // namespace agewave
