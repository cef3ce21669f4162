#include <benchmark/benchmark.h>

#include <random>

#include "agewave/init.hpp"
#include "agewave/networks.hpp"
#include "agewave/objectives.hpp"
#include "agewave/ops.hpp"
#include "agewave/synthetic.hpp"
#include "agewave/trainer.hpp"
#include "agewave/wavelet.hpp"

using namespace agewave;

namespace {

Tensorf one_hot(std::size_t n, std::size_t p) {
  Tensorf a(Shape{n, p}, 0.f);
  for (std::size_t i = 0; i < n; ++i) a.mutable_data()[i * p + i % p] = 1.f;
  return a;
}

void BM_Conv2dForwardBackward(benchmark::State& state) {
  const auto channels = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  auto x = uniform_tensor<float>({16, channels, 32, 32}, rng, -1.f, 1.f, true);
  auto w = uniform_tensor<float>({channels, channels, 3, 3}, rng, -0.1f, 0.1f, true);
  for (auto _ : state) {
    x.zero_grad();
    w.zero_grad();
    auto y = sum(conv2d(x, w, 1, 1));
    y.backward();
    benchmark::DoNotOptimize(w.grad().data());
  }
}
BENCHMARK(BM_Conv2dForwardBackward)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_WptForward(benchmark::State& state) {
  const auto levels = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  const auto img = uniform_tensor<float>({16, 3, 64, 64}, rng);
  const auto haar = WaveletFilterPair::haar();
  for (auto _ : state) benchmark::DoNotOptimize(wpt_forward(img, levels, haar));
}
BENCHMARK(BM_WptForward)->DenseRange(1, 3)->Unit(benchmark::kMicrosecond);

void BM_WptAsConv(benchmark::State& state) {
  const auto levels = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  const auto img = uniform_tensor<float>({16, 3, 64, 64}, rng);
  const auto kernel = wpt_as_conv<float>(levels, WaveletFilterPair::haar(), 3);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(img, kernel, std::size_t{1} << levels, 0));
}
BENCHMARK(BM_WptAsConv)->DenseRange(1, 3)->Unit(benchmark::kMicrosecond);

void BM_GeneratorForward(benchmark::State& state) {
  GeneratorConfig c;
  c.base_channels = static_cast<std::size_t>(state.range(0));
  const Generator<float> g(c, 1);
  std::mt19937_64 rng(4);
  const auto x = uniform_tensor<float>({16, 3, 64, 64}, rng);
  const auto a = one_hot(16, c.attribute_dim);
  for (auto _ : state) {
    NoGradGuard guard;
    benchmark::DoNotOptimize(g.forward(x, a));
  }
}
BENCHMARK(BM_GeneratorForward)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_DiscriminatorForward(benchmark::State& state) {
  DiscriminatorConfig c;
  c.pathway_channels = static_cast<std::size_t>(state.range(0));
  const Discriminator<float> d(c, 1);
  std::mt19937_64 rng(5);
  const auto x = uniform_tensor<float>({16, 3, 64, 64}, rng);
  const auto a = one_hot(16, c.attribute_dim);
  for (auto _ : state) {
    NoGradGuard guard;
    benchmark::DoNotOptimize(d.forward(x, a));
  }
}
BENCHMARK(BM_DiscriminatorForward)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_TrainerStep(benchmark::State& state) {
  SyntheticAgingSpec spec;
  const auto ds = generate_synthetic(spec, 8, 1);
  TrainConfig c;
  c.base_channels = static_cast<std::size_t>(state.range(0));
  c.pathway_channels = c.base_channels;
  c.residual_blocks = 2;
  Trainer trainer(c, ds);
  for (auto _ : state) benchmark::DoNotOptimize(trainer.step());
}
BENCHMARK(BM_TrainerStep)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
