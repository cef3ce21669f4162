#include <doctest.h>

#include <fstream>
#include <iterator>
#include <random>

#include "agewave/adam.hpp"
#include "agewave/init.hpp"
#include "agewave/networks.hpp"
#include "agewave/objectives.hpp"
#include "agewave/ops.hpp"
#include "agewave/tensor_io.hpp"
#include "support.hpp"

using namespace agewave;
using agewave::testing::bitwise_equal;
using agewave::testing::ScratchDir;

namespace {

GeneratorConfig small_generator(std::size_t p = 4, bool embed = true) {
  GeneratorConfig c;
  c.input_resolution = 32;
  c.base_channels = 4;
  c.num_residual_blocks = 1;
  c.attribute_dim = p;
  c.use_attribute_embedding = embed;
  return c;
}

DiscriminatorConfig small_discriminator(std::size_t p = 4, bool wpt = true, bool embed = true) {
  DiscriminatorConfig c;
  c.input_resolution = 32;
  c.pathway_channels = 4;
  c.attribute_dim = p;
  c.use_wpt = wpt;
  c.use_attribute_embedding = embed;
  return c;
}

Tensorf one_hot_batch(std::size_t n, std::size_t p, std::size_t hot) {
  Tensorf a(Shape{n, p}, 0.f);
  for (std::size_t i = 0; i < n; ++i) a.mutable_data()[i * p + (hot + i) % p] = 1.f;
  return a;
}

template <typename Table>
void randomize(Table& table, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> d(0.f, 0.3f);
  for (auto& [name, t] : table.entries())
    for (auto& v : t.mutable_data()) v = d(rng);
}

}  // namespace

TEST_CASE("generator: default-width output shape and range") {
  GeneratorConfig c;
  c.attribute_dim = 8;
  Generator<float> g(c, 1);
  std::mt19937_64 rng(2);
  auto x = uniform_tensor<float>({16, 3, 64, 64}, rng);
  auto y = g.forward(x, one_hot_batch(16, 8, 0));
  CHECK(y.shape() == Shape{16, 3, 64, 64});
  for (float v : y.data()) {
    REQUIRE(v > -1.f);
    REQUIRE(v < 1.f);
  }
}

TEST_CASE("generator: output stays inside (-1, 1) for saturated inputs") {
  Generator<float> g(small_generator(), 3);
  randomize(g.parameters(), 4);
  Tensorf x(Shape{2, 3, 32, 32}, 1.f);
  const auto y = g.forward(x, one_hot_batch(2, 4, 1));
  for (float v : y.data()) {
    REQUIRE(v > -1.f);
    REQUIRE(v < 1.f);
  }
}

TEST_CASE("generator: zeroed output layer gives tanh(x) exactly") {
  Generator<float> g(small_generator(), 5);
  randomize(g.parameters(), 6);
  g.zero_output_layer();
  std::mt19937_64 rng(7);
  auto x = uniform_tensor<float>({3, 3, 32, 32}, rng);
  auto y = g.forward(x, one_hot_batch(3, 4, 2));
  CHECK(bitwise_equal(y.data(), tanh(x).data()));
}

TEST_CASE("generator: wrong resolution or attribute length is rejected") {
  Generator<float> g(small_generator(), 1);
  CHECK_THROWS_AS(g.forward(Tensorf(Shape{1, 3, 16, 16}), one_hot_batch(1, 4, 0)), ShapeError);
  CHECK_THROWS_AS(g.forward(Tensorf(Shape{1, 3, 32, 32}), one_hot_batch(1, 3, 0)), ShapeError);
  GeneratorConfig bad = small_generator();
  bad.num_residual_blocks = 0;
  CHECK_THROWS(Generator<float>(bad, 1));
}

TEST_CASE("embedding changes channel counts by exactly p") {
  for (std::size_t p : {2u, 4u, 8u}) {
    Generator<float> with(small_generator(p, true), 1), without(small_generator(p, false), 1);
    CHECK(with.bottleneck_channels() - without.bottleneck_channels() == p);
    CHECK(with.parameters().get("dec1.weight").dim(0) -
              without.parameters().get("dec1.weight").dim(0) ==
          p);
    Discriminator<float> dw(small_discriminator(p, true, true), 1),
        dwo(small_discriminator(p, true, false), 1);
    CHECK(dw.pathway_midpoint_channels() - dwo.pathway_midpoint_channels() == p);
    for (std::size_t level : {1u, 2u, 3u}) {
      const auto name = "path" + std::to_string(level) + ".tail.weight";
      CHECK(dw.parameters().get(name).dim(1) - dwo.parameters().get(name).dim(1) == p);
    }
  }
}

TEST_CASE("woFAE generator ignores attributes") {
  Generator<float> g(small_generator(4, false), 9);
  std::mt19937_64 rng(1);
  auto x = uniform_tensor<float>({2, 3, 32, 32}, rng);
  CHECK(bitwise_equal(g.forward(x, one_hot_batch(2, 4, 0)).data(),
                      g.forward(x, one_hot_batch(2, 4, 1)).data()));
}

TEST_CASE("generator: attribute bit flip changes a trained toy model") {
  Generator<float> g(small_generator(2), 11);
  std::mt19937_64 rng(12);
  auto x = uniform_tensor<float>({4, 3, 32, 32}, rng);
  Tensorf a(Shape{4, 2}, std::vector<float>{1, 0, 1, 0, 0, 1, 0, 1});
  auto params = g.parameters().tensors();
  auto adam = make_adam_state<float>(params, 1e-3f, 0.5f, 0.999f, 1e-8f);
  for (int i = 0; i < 10; ++i) {
    g.parameters().zero_grad();
    loss_pix(g.forward(x, a), x).backward();
    adam_step(params, adam);
  }
  Tensorf flipped(Shape{4, 2}, std::vector<float>{0, 1, 0, 1, 1, 0, 1, 0});
  auto y0 = g.forward(x, a), y1 = g.forward(x, flipped);
  CHECK(frobenius_sq(y0, y1).item() > 0.f);
}

TEST_CASE("discriminator: label map shape") {
  DiscriminatorConfig c;
  c.attribute_dim = 4;
  Discriminator<float> d(c, 1);
  Tensorf x(Shape{16, 3, 64, 64}, 0.1f);
  CHECK(d.forward(x, one_hot_batch(16, 4, 0)).shape() == Shape{16, 1, 8, 8});
  CHECK(d.label_map_extent() == 8);

  c.use_wpt = false;
  Discriminator<float> raw(c, 1);
  CHECK(raw.config().active_levels() == std::vector<std::size_t>{0});
  CHECK(raw.buffers().entries().empty());
  CHECK(raw.forward(x, one_hot_batch(16, 4, 0)).shape() == Shape{16, 1, 8, 8});
}

TEST_CASE("discriminator: level subsets and the raw pathway") {
  auto c = small_discriminator();
  c.wpt_levels = {0, 2};
  Discriminator<float> d(c, 1);
  CHECK(d.buffers().entries().size() == 1);
  CHECK(d.forward(Tensorf(Shape{2, 3, 32, 32}, 0.f), one_hot_batch(2, 4, 0)).shape() ==
        Shape{2, 1, 4, 4});
  c.wpt_levels = {};
  CHECK_THROWS(Discriminator<float>(c, 1));
  c.wpt_levels = {4};
  CHECK_THROWS(Discriminator<float>(c, 1));
}

TEST_CASE("discriminator: swapping two subband channels changes the output") {
  Discriminator<float> d(small_discriminator(), 13);
  randomize(d.parameters(), 14);
  std::mt19937_64 rng(15);
  auto x = uniform_tensor<float>({2, 3, 32, 32}, rng);
  auto a = one_hot_batch(2, 4, 0);
  const auto before = d.forward(x, a);
  // Swap output channels 1 and 2 (LH and HL of the red plane) of the level-1 front end.
  auto k = d.buffers().get("wpt.level1").mutable_data();
  const std::size_t per = 3 * 2 * 2;
  for (std::size_t i = 0; i < per; ++i) std::swap(k[1 * per + i], k[2 * per + i]);
  const auto after = d.forward(x, a);
  CHECK(frobenius_sq(before, after).item() > 0.f);
}

TEST_CASE("gradient flow reaches every trainable parameter") {
  std::mt19937_64 rng(21);
  auto x = uniform_tensor<float>({2, 3, 32, 32}, rng);
  auto a = one_hot_batch(2, 4, 0);

  Generator<float> g(small_generator(), 22);
  Discriminator<float> d(small_discriminator(), 23);
  auto fake = g.forward(x, a);
  auto loss = add(loss_gan_g(d.forward(fake, a)), loss_pix(fake, x));
  loss.backward();
  auto nonzero = [](const Tensorf& t) {
    if (!t.has_grad()) return false;
    for (float v : t.grad())
      if (v != 0.f) return true;
    return false;
  };
  for (const auto& [name, t] : g.parameters().entries()) {
    INFO("generator " << name);
    CHECK(nonzero(t));
  }
  for (const auto& [name, t] : d.parameters().entries()) {
    INFO("discriminator " << name);
    CHECK(nonzero(t));
  }
  for (const auto& [name, t] : d.buffers().entries()) {
    INFO("buffer " << name);
    CHECK_FALSE(t.requires_grad());
    CHECK_FALSE(t.has_grad());
  }
}

TEST_CASE("count_parameters counts scalars") {
  Generator<float> g(small_generator(), 1);
  std::size_t expected = 0;
  for (const auto& [name, t] : g.parameters().entries()) expected += t.numel();
  CHECK(count_parameters(g.parameters()) == expected);
  // enc1 alone: 4 x 3 x 4 x 4.
  CHECK(g.parameters().get("enc1.weight").numel() == 192);
}

TEST_CASE("save/load: bit-identical forward outputs") {
  ScratchDir dir("networks");
  Generator<float> g(small_generator(), 31);
  randomize(g.parameters(), 32);
  Discriminator<float> d(small_discriminator(), 33);
  randomize(d.parameters(), 34);
  save_model(dir.path() / "g.agwc", g, {{"schema", "shape=circle|square;hue=A|B"}});
  save_model(dir.path() / "d.agwc", d);

  auto g2 = load_generator(dir.path() / "g.agwc");
  auto d2 = load_discriminator(dir.path() / "d.agwc");
  std::mt19937_64 rng(35);
  auto x = uniform_tensor<float>({2, 3, 32, 32}, rng);
  auto a = one_hot_batch(2, 4, 3);
  CHECK(bitwise_equal(g.forward(x, a).data(), g2.forward(x, a).data()));
  CHECK(bitwise_equal(d.forward(x, a).data(), d2.forward(x, a).data()));
  CHECK(load_checkpoint(dir.path() / "g.agwc").value("schema") == "shape=circle|square;hue=A|B");
  CHECK_THROWS_AS(load_discriminator(dir.path() / "g.agwc"), FormatError);
}

TEST_CASE("save/load: empty path and header errors") {
  ScratchDir dir("networks-errors");
  Generator<float> g(small_generator(), 1);
  CHECK_THROWS(save_model("", g));
  CHECK_THROWS(load_generator(""));

  const auto path = dir.path() / "g.agwc";
  save_model(path, g);
  std::string bytes;
  {
    std::ifstream in(path, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  std::string bumped = bytes;
  bumped[4] = 7;  // version field follows the 4-byte magic
  {
    std::ofstream out(path, std::ios::binary);
    out << bumped;
  }
  CHECK_THROWS_WITH_AS(load_generator(path), doctest::Contains("version 7"), FormatError);

  std::string bad_magic = bytes;
  bad_magic[0] = 'Z';
  {
    std::ofstream out(path, std::ios::binary);
    out << bad_magic;
  }
  CHECK_THROWS_WITH_AS(load_generator(path), doctest::Contains("magic"), FormatError);
}

TEST_CASE("configs round-trip through key-values") {
  auto gc = small_generator(6, false);
  auto gc2 = GeneratorConfig::from_key_values(gc.to_key_values());
  CHECK(gc2.to_key_values() == gc.to_key_values());
  auto dc = small_discriminator(6, true, true);
  dc.wpt_levels = {1, 3};
  auto dc2 = DiscriminatorConfig::from_key_values(dc.to_key_values());
  CHECK(dc2.wpt_levels == dc.wpt_levels);
  CHECK(parse_levels(join_levels({0, 1, 3})) == std::vector<std::size_t>{0, 1, 3});
}
