#include "agewave/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "agewave/init.hpp"
#include "agewave/networks.hpp"
#include "agewave/objectives.hpp"
#include "agewave/ops.hpp"

namespace agewave {

double gradcheck(const ScalarFunction& fn, const std::vector<Tensord>& inputs, double step) {
  for (auto input : inputs) input.zero_grad();
  const Tensord loss = fn(inputs);
  loss.backward();

  double worst = 0.0;
  for (auto input : inputs) {
    if (!input.requires_grad()) continue;
    std::vector<double> analytic(input.numel(), 0.0);
    if (input.has_grad()) std::copy(input.grad().begin(), input.grad().end(), analytic.begin());

    std::vector<double> numeric(input.numel());
    auto values = input.mutable_data();
    {
      NoGradGuard guard;
      for (std::size_t i = 0; i < values.size(); ++i) {
        const double saved = values[i];
        values[i] = saved + step;
        const double plus = fn(inputs).item();
        values[i] = saved - step;
        const double minus = fn(inputs).item();
        values[i] = saved;
        numeric[i] = (plus - minus) / (2.0 * step);
      }
    }
    double diff = 0, norm_a = 0, norm_n = 0;
    for (std::size_t i = 0; i < numeric.size(); ++i) {
      diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
      norm_a += analytic[i] * analytic[i];
      norm_n += numeric[i] * numeric[i];
    }
    const double scale = std::max({std::sqrt(norm_a), std::sqrt(norm_n), 1e-300});
    const double error = std::sqrt(diff) / scale;
    // Both gradients exactly zero counts as agreement.
    worst = std::max(worst, (norm_a == 0 && norm_n == 0) ? 0.0 : error);
  }
  return worst;
}

namespace {

// Random values kept at least `margin` away from zero so piecewise-linear
// ops are not probed across their kink.
Tensord away_from_zero(Shape shape, std::mt19937_64& rng, double margin = 0.05) {
  auto t = uniform_tensor<double>(std::move(shape), rng, -1.0, 1.0, true);
  for (auto& v : t.mutable_data())
    if (std::abs(v) < margin) v = v < 0 ? v - margin : v + margin;
  return t;
}

Tensord random(Shape shape, std::mt19937_64& rng, bool requires_grad = true) {
  return uniform_tensor<double>(std::move(shape), rng, -1.0, 1.0, requires_grad);
}

// Reduces any output to a scalar through fixed random weights shaped like the output.
ScalarFunction weighted(std::function<Tensord(const std::vector<Tensord>&)> op, const Shape&,
                        std::mt19937_64& rng) {
  const std::uint64_t weight_seed = rng();
  return [op = std::move(op), weight_seed](const std::vector<Tensord>& in) {
    const Tensord y = op(in);
    std::mt19937_64 wrng(weight_seed);
    return sum(y * random(y.shape(), wrng, false));
  };
}

GradcheckEntry unary_entry(std::string name, std::function<Tensord(const Tensord&)> op,
                           bool kinked) {
  return {name, [op, kinked](std::uint64_t seed) {
            std::mt19937_64 rng(seed);
            Shape s{2, 3, 4};
            Tensord x = kinked ? away_from_zero(s, rng) : random(s, rng);
            return GradcheckCase{
                weighted([op](const std::vector<Tensord>& in) { return op(in[0]); }, s, rng), {x}};
          }};
}

GeneratorConfig tiny_generator(bool embed) {
  GeneratorConfig c;
  c.input_resolution = 16;
  c.base_channels = 2;
  c.num_residual_blocks = 1;
  c.attribute_dim = 2;
  c.use_attribute_embedding = embed;
  return c;
}

DiscriminatorConfig tiny_discriminator() {
  DiscriminatorConfig c;
  c.input_resolution = 16;
  c.pathway_channels = 2;
  c.attribute_dim = 2;
  c.wpt_levels = {0, 1, 2, 3};
  return c;
}

std::vector<GradcheckEntry> build_registry() {
  std::vector<GradcheckEntry> r;
  auto binary = [](std::string name, std::function<Tensord(const Tensord&, const Tensord&)> op) {
    return GradcheckEntry{name, [op](std::uint64_t seed) {
                            std::mt19937_64 rng(seed);
                            Shape s{3, 4};
                            auto a = random(s, rng), b = random(s, rng);
                            return GradcheckCase{
                                weighted([op](const std::vector<Tensord>& in) { return op(in[0], in[1]); },
                                         s, rng),
                                {a, b}};
                          }};
  };
  r.push_back(binary("add", [](const Tensord& a, const Tensord& b) { return add(a, b); }));
  r.push_back(binary("sub", [](const Tensord& a, const Tensord& b) { return sub(a, b); }));
  r.push_back(binary("mul", [](const Tensord& a, const Tensord& b) { return mul(a, b); }));
  r.push_back(binary("frobenius_sq", [](const Tensord& a, const Tensord& b) { return frobenius_sq(a, b); }));
  r.push_back(unary_entry("add_scalar", [](const Tensord& x) { return add_scalar(x, 0.7); }, false));
  r.push_back(unary_entry("mul_scalar", [](const Tensord& x) { return mul_scalar(x, -1.3); }, false));
  r.push_back(unary_entry("square", [](const Tensord& x) { return square(x); }, false));
  r.push_back(unary_entry("relu", [](const Tensord& x) { return relu(x); }, true));
  r.push_back(unary_entry("leaky_relu", [](const Tensord& x) { return leaky_relu(x, 0.2); }, true));
  r.push_back(unary_entry("tanh", [](const Tensord& x) { return tanh(x * 2.0); }, false));
  r.push_back(unary_entry("sum", [](const Tensord& x) { return sum(x); }, false));
  r.push_back(unary_entry("mean", [](const Tensord& x) { return mean(x); }, false));
  r.push_back(unary_entry("reshape", [](const Tensord& x) { return x.reshape({6, 4}); }, false));
  r.push_back({"scale_by", [](std::uint64_t seed) {
                 std::mt19937_64 rng(seed);
                 auto a = random({3, 4}, rng), s = random({1}, rng);
                 return GradcheckCase{
                     weighted([](const std::vector<Tensord>& in) { return scale_by(in[0], in[1]); },
                              {3, 4}, rng),
                     {a, s}};
               }});
  r.push_back({"concat", [](std::uint64_t seed) {
                 std::mt19937_64 rng(seed);
                 auto a = random({2, 3, 2, 2}, rng), b = random({2, 1, 2, 2}, rng),
                      c = random({2, 2, 2, 2}, rng);
                 return GradcheckCase{
                     weighted([](const std::vector<Tensord>& in) { return concat(in, 1); },
                              {2, 6, 2, 2}, rng),
                     {a, b, c}};
               }});
  r.push_back({"tile_spatial", [](std::uint64_t seed) {
                 std::mt19937_64 rng(seed);
                 auto code = random({2, 3}, rng);
                 return GradcheckCase{
                     weighted([](const std::vector<Tensord>& in) { return tile_spatial(in[0], 3, 2); },
                              {2, 3, 3, 2}, rng),
                     {code}};
               }});
  r.push_back({"gather", [](std::uint64_t seed) {
                 std::mt19937_64 rng(seed);
                 auto table = random({5}, rng);
                 std::vector<std::size_t> idx{0, 3, 3, 1, 4, 0};
                 return GradcheckCase{
                     weighted([idx](const std::vector<Tensord>& in) { return gather(in[0], idx); },
                              {idx.size()}, rng),
                     {table}};
               }});
  r.push_back({"conv2d", [](std::uint64_t seed) {
                 std::mt19937_64 rng(seed);
                 auto x = random({2, 2, 5, 5}, rng), k = random({3, 2, 3, 3}, rng);
                 return GradcheckCase{
                     weighted([](const std::vector<Tensord>& in) { return conv2d(in[0], in[1], 1, 1); },
                              {2, 3, 5, 5}, rng),
                     {x, k}};
               }});
  r.push_back({"conv2d_stride2_bias", [](std::uint64_t seed) {
                 std::mt19937_64 rng(seed);
                 auto x = random({2, 2, 6, 6}, rng), k = random({3, 2, 4, 4}, rng),
                      b = random({3}, rng);
                 return GradcheckCase{
                     weighted(
                         [](const std::vector<Tensord>& in) {
                           return conv2d(in[0], in[1], 2, 1, std::optional<Tensord>(in[2]));
                         },
                         {2, 3, 3, 3}, rng),
                     {x, k, b}};
               }});
  r.push_back({"conv2d_transpose", [](std::uint64_t seed) {
                 std::mt19937_64 rng(seed);
                 auto x = random({2, 3, 3, 3}, rng), k = random({3, 2, 4, 4}, rng),
                      b = random({2}, rng);
                 return GradcheckCase{
                     weighted(
                         [](const std::vector<Tensord>& in) {
                           return conv2d_transpose(in[0], in[1], 2, 1, 0,
                                                   std::optional<Tensord>(in[2]));
                         },
                         {2, 2, 6, 6}, rng),
                     {x, k, b}};
               }});
  r.push_back({"conv2d_transpose_output_padding", [](std::uint64_t seed) {
                 std::mt19937_64 rng(seed);
                 auto x = random({1, 2, 3, 3}, rng), k = random({2, 2, 3, 3}, rng);
                 return GradcheckCase{
                     weighted(
                         [](const std::vector<Tensord>& in) {
                           return conv2d_transpose(in[0], in[1], 2, 1, 1);
                         },
                         {1, 2, 6, 6}, rng),
                     {x, k}};
               }});
  r.push_back({"instance_norm", [](std::uint64_t seed) {
                 std::mt19937_64 rng(seed);
                 auto x = random({2, 3, 4, 4}, rng);
                 return GradcheckCase{
                     weighted([](const std::vector<Tensord>& in) { return instance_norm(in[0]); },
                              {2, 3, 4, 4}, rng),
                     {x}};
               }});
  r.push_back({"conv_relu_sum", [](std::uint64_t seed) {
                 std::mt19937_64 rng(seed);
                 auto x = random({2, 2, 5, 5}, rng), k = random({3, 2, 3, 3}, rng);
                 return GradcheckCase{[](const std::vector<Tensord>& in) {
                                        return sum(relu(conv2d(in[0], in[1], 1, 0)));
                                      },
                                      {x, k}};
               }});
  r.push_back({"loss_gan_g", [](std::uint64_t seed) {
                 std::mt19937_64 rng(seed);
                 return GradcheckCase{
                     [](const std::vector<Tensord>& in) { return loss_gan_g(in[0]); },
                     {random({3, 1, 2, 2}, rng)}};
               }});
  r.push_back({"loss_gan_d", [](std::uint64_t seed) {
                 std::mt19937_64 rng(seed);
                 return GradcheckCase{
                     [](const std::vector<Tensord>& in) { return loss_gan_d(in[0], in[1], in[2]); },
                     {random({3, 1, 2, 2}, rng), random({3, 1, 2, 2}, rng),
                      random({3, 1, 2, 2}, rng)}};
               }});
  r.push_back({"loss_pix", [](std::uint64_t seed) {
                 std::mt19937_64 rng(seed);
                 return GradcheckCase{
                     [](const std::vector<Tensord>& in) { return loss_pix(in[0], in[1]); },
                     {random({2, 3, 4, 4}, rng), random({2, 3, 4, 4}, rng, false)}};
               }});
  r.push_back({"loss_id", [](std::uint64_t seed) {
                 std::mt19937_64 rng(seed);
                 auto encoder = std::make_shared<RandomConvEncoder<double>>(seed);
                 return GradcheckCase{
                     [encoder](const std::vector<Tensord>& in) {
                       return loss_id(in[0], in[1], *encoder);
                     },
                     {random({2, 3, 16, 16}, rng), random({2, 3, 16, 16}, rng, false)}};
               }});
  r.push_back({"total_loss_generator", [](std::uint64_t seed) {
                 std::mt19937_64 rng(seed);
                 auto encoder = std::make_shared<RandomConvEncoder<double>>(seed + 1);
                 LossWeights w{0.3, 0.7, false, true};
                 return GradcheckCase{
                     [encoder, w](const std::vector<Tensord>& in) {
                       auto gan_g = loss_gan_g(in[0]);
                       auto pix = loss_pix(in[1], in[2]);
                       auto id = loss_id(in[1], in[2], *encoder);
                       return total_losses(gan_g, pix, id, gan_g, w).generator;
                     },
                     {random({2, 1, 2, 2}, rng), random({2, 3, 16, 16}, rng),
                      random({2, 3, 16, 16}, rng, false)}};
               }});
  r.push_back({"generator_forward", [](std::uint64_t seed) {
                 auto g = std::make_shared<Generator<double>>(tiny_generator(true), seed);
                 // Larger weights keep activations away from kinks' noise floor.
                 std::mt19937_64 rng(seed);
                 for (auto& [name, p] : g->parameters().entries())
                   for (auto& v : p.mutable_data()) v = std::normal_distribution<double>(0, 0.5)(rng);
                 auto x = random({2, 3, 16, 16}, rng, false);
                 Tensord a(Shape{2, 2}, std::vector<double>{1, 0, 0, 1});
                 std::vector<Tensord> inputs = g->parameters().tensors();
                 const Shape out{2, 3, 16, 16};
                 const Tensord w = random(out, rng, false);
                 return GradcheckCase{[g, x, a, w](const std::vector<Tensord>&) {
                                        return sum(g->forward(x, a) * w);
                                      },
                                      inputs};
               }});
  r.push_back({"discriminator_forward", [](std::uint64_t seed) {
                 auto d = std::make_shared<Discriminator<double>>(tiny_discriminator(), seed);
                 std::mt19937_64 rng(seed);
                 for (auto& [name, p] : d->parameters().entries())
                   for (auto& v : p.mutable_data()) v = std::normal_distribution<double>(0, 0.5)(rng);
                 auto x = random({2, 3, 16, 16}, rng, true);
                 Tensord a(Shape{2, 2}, std::vector<double>{0, 1, 1, 0});
                 std::vector<Tensord> inputs = d->parameters().tensors();
                 inputs.push_back(x);
                 return GradcheckCase{[d, a](const std::vector<Tensord>& in) {
                                        return loss_gan_g(d->forward(in.back(), a));
                                      },
                                      inputs};
               }});
  return r;
}

}  // namespace

const std::vector<GradcheckEntry>& gradcheck_registry() {
  static const std::vector<GradcheckEntry> registry = build_registry();
  return registry;
}

std::vector<GradcheckReport> run_gradcheck_suite(std::size_t seeds, double tolerance) {
  std::vector<GradcheckReport> reports;
  for (const auto& entry : gradcheck_registry()) {
    GradcheckReport report{entry.name, 0.0, seeds, true};
    for (std::size_t s = 1; s <= seeds; ++s) {
      const auto c = entry.make(s);
      report.worst_error = std::max(report.worst_error, gradcheck(c.fn, c.inputs));
    }
    report.passed = report.worst_error < tolerance;
    reports.push_back(report);
  }
  return reports;
}

}  // namespace agewave
