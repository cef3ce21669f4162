#include <doctest.h>

#include <cmath>
#include <random>

#include "agewave/ops.hpp"
#include "agewave/wavelet.hpp"
#include "support.hpp"

using namespace agewave;
using agewave::testing::max_abs_diff;
using agewave::testing::random_tensor;

namespace {

using Plane = std::vector<double>;

// One analysis step on a single plane: 2-D correlation with the outer product
// of the column and row taps, downsampled by 2, periodic border.
Plane analyze(const Plane& in, std::size_t h, std::size_t w, const std::vector<double>& col,
              const std::vector<double>& row) {
  Plane out((h / 2) * (w / 2), 0.0);
  for (std::size_t y = 0; y < h / 2; ++y)
    for (std::size_t x = 0; x < w / 2; ++x)
      for (std::size_t a = 0; a < col.size(); ++a)
        for (std::size_t b = 0; b < row.size(); ++b)
          out[y * (w / 2) + x] += col[a] * row[b] * in[((2 * y + a) % h) * w + (2 * x + b) % w];
  return out;
}

// Reference level-k packet of a single-channel plane, breadth-first order.
std::vector<Plane> reference_packet(const Plane& image, std::size_t h, std::size_t w,
                                    std::size_t levels, const WaveletFilterPair& f) {
  std::vector<Plane> current{image};
  for (std::size_t k = 0; k < levels; ++k) {
    std::vector<Plane> next;
    for (const auto& band : current)
      for (std::size_t r = 0; r < 2; ++r)
        for (std::size_t c = 0; c < 2; ++c)
          next.push_back(analyze(band, h, w, c ? f.high : f.low, r ? f.high : f.low));
    current = std::move(next);
    h /= 2;
    w /= 2;
  }
  return current;
}

double energy(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace

TEST_CASE("filters: Haar taps and orthonormality") {
  const auto haar = WaveletFilterPair::haar();
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(haar.low == std::vector<double>{r, r});
  CHECK(haar.high == std::vector<double>{r, -r});
  CHECK_NOTHROW(haar.validate());
  CHECK_NOTHROW(WaveletFilterPair::db2().validate());
  CHECK(WaveletFilterPair::db2().low.size() == 4);
  WaveletFilterPair bad = haar;
  bad.high = {r, r};
  CHECK_THROWS(bad.validate());
  bad.high = {1.0};
  CHECK_THROWS(bad.validate());
}

TEST_CASE("wpt_forward: constant 2x2 image") {
  const double c = 0.37;
  Tensord img(Shape{1, 1, 2, 2}, c);
  auto packets = wpt_forward(img, 1, WaveletFilterPair::haar());
  REQUIRE(packets.size() == 1);
  REQUIRE(packets[0].subbands.size() == 4);
  CHECK(packets[0].subbands[0].item() == doctest::Approx(2 * c).epsilon(1e-15));
  for (std::size_t s = 1; s < 4; ++s) CHECK(std::abs(packets[0].subbands[s].item()) < 1e-15);
}

TEST_CASE("wpt_forward: subband bookkeeping") {
  Tensord img(Shape{2, 3, 64, 64}, 0.0);
  auto packets = wpt_forward(img, 3, WaveletFilterPair::haar());
  REQUIRE(packets.size() == 3);
  for (std::size_t k = 1; k <= 3; ++k) {
    const auto& p = packets[k - 1];
    CHECK(p.level == k);
    CHECK(p.subbands.size() == std::size_t{1} << (2 * k));
    for (const auto& s : p.subbands) CHECK(s.shape() == Shape{2, 3, 64u >> k, 64u >> k});
    CHECK(p.flatten().shape() == Shape{2, 3u << (2 * k), 64u >> k, 64u >> k});
  }
  CHECK(packets[1].subbands.size() == 16);
  CHECK(packets[1].subbands[0].dim(2) == 16);
}

TEST_CASE("wpt_forward: non-divisible dims are rejected") {
  Tensord img(Shape{1, 1, 12, 12}, 0.0);
  CHECK_THROWS_WITH(wpt_forward(img, 3, WaveletFilterPair::haar()),
                    doctest::Contains("resize"));
}

TEST_CASE("wpt_forward: matches the loop reference") {
  for (auto family : {WaveletFamily::Haar, WaveletFamily::Db2}) {
    const auto f = WaveletFilterPair::of(family);
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      std::mt19937_64 rng(seed);
      auto img = random_tensor(Shape{1, 1, 8, 8}, rng);
      Plane plane(img.data().begin(), img.data().end());
      auto packets = wpt_forward(img, 2, f);
      for (std::size_t k = 1; k <= 2; ++k) {
        const auto ref = reference_packet(plane, 8, 8, k, f);
        for (std::size_t s = 0; s < ref.size(); ++s)
          CHECK(max_abs_diff(packets[k - 1].subbands[s].data(), ref[s]) < 1e-10);
      }
    }
  }
}

TEST_CASE("wpt_forward: subband names follow breadth-first order") {
  CHECK(subband_name(1, 0) == "LL");
  CHECK(subband_name(1, 1) == "LH");
  CHECK(subband_name(1, 2) == "HL");
  CHECK(subband_name(1, 3) == "HH");
  CHECK(subband_name(2, 2) == "LL.HL");
  CHECK(subband_name(2, 13) == "HH.LH");
}

TEST_CASE("wpt_inverse: perfect reconstruction") {
  for (auto family : {WaveletFamily::Haar, WaveletFamily::Db2}) {
    const auto f = WaveletFilterPair::of(family);
    std::mt19937_64 rng(5);
    auto img = random_tensor(Shape{2, 3, 16, 16}, rng);
    auto packets = wpt_forward(img, 3, f);
    for (const auto& p : packets) CHECK(max_abs_diff(wpt_inverse(p, f).data(), img.data()) < 1e-8);
  }
}

TEST_CASE("wpt_inverse: zero packet and impulse") {
  const auto haar = WaveletFilterPair::haar();
  CoefficientPacket<double> zero{1, {}};
  for (int s = 0; s < 4; ++s) zero.subbands.emplace_back(Shape{1, 1, 4, 4}, 0.0);
  const auto rebuilt = wpt_inverse(zero, haar);
  for (double v : rebuilt.data()) CHECK(v == 0.0);

  Tensord delta(Shape{1, 1, 8, 8}, 0.0);
  delta.mutable_data()[0] = 1.0;
  for (const auto& p : wpt_forward(delta, 3, haar))
    CHECK(max_abs_diff(wpt_inverse(p, haar).data(), delta.data()) < 1e-15);

  CoefficientPacket<double> bad{1, {}};
  for (int s = 0; s < 3; ++s) bad.subbands.emplace_back(Shape{1, 1, 4, 4}, 0.0);
  CHECK_THROWS(wpt_inverse(bad, haar));
}

TEST_CASE("wpt: Parseval energy conservation") {
  for (auto family : {WaveletFamily::Haar, WaveletFamily::Db2}) {
    std::mt19937_64 rng(8);
    auto img = random_tensor(Shape{1, 3, 32, 32}, rng);
    const double e0 = energy(img.data());
    for (const auto& p : wpt_forward(img, 3, WaveletFilterPair::of(family))) {
      double e = 0.0;
      for (const auto& s : p.subbands) e += energy(s.data());
      CHECK(std::abs(e - e0) / e0 < 1e-8);
    }
  }
}

TEST_CASE("wpt: linearity") {
  std::mt19937_64 rng(12);
  auto x = random_tensor(Shape{1, 2, 16, 16}, rng), y = random_tensor(Shape{1, 2, 16, 16}, rng);
  const double a = 1.7, b = -0.4;
  const auto f = WaveletFilterPair::haar();
  auto px = wpt_forward(x, 2, f), py = wpt_forward(y, 2, f);
  auto pz = wpt_forward(add(mul_scalar(x, a), mul_scalar(y, b)), 2, f);
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t s = 0; s < pz[k].subbands.size(); ++s)
      for (std::size_t i = 0; i < pz[k].subbands[s].numel(); ++i)
        CHECK(std::abs(pz[k].subbands[s].data()[i] -
                       (a * px[k].subbands[s].data()[i] + b * py[k].subbands[s].data()[i])) <
              1e-10);
}

TEST_CASE("wpt: constant image has only all-low-pass energy") {
  Tensord img(Shape{1, 3, 16, 16}, -0.6);
  for (const auto& p : wpt_forward(img, 3, WaveletFilterPair::haar())) {
    CHECK(energy(p.subbands[0].data()) > 0.0);
    for (std::size_t s = 1; s < p.subbands.size(); ++s)
      CHECK(energy(p.subbands[s].data()) < 1e-24);
  }
}

TEST_CASE("wpt_as_conv: level-1 Haar kernels are outer products") {
  auto k = wpt_as_conv<double>(1, WaveletFilterPair::haar(), 1);
  REQUIRE(k.shape() == Shape{4, 1, 2, 2});
  const std::vector<std::vector<double>> expected{
      {0.5, 0.5, 0.5, 0.5},      // LL
      {0.5, 0.5, -0.5, -0.5},    // LH: high-pass down the columns
      {0.5, -0.5, 0.5, -0.5},    // HL: high-pass along the rows
      {0.5, -0.5, -0.5, 0.5}};  // HH
  for (std::size_t s = 0; s < 4; ++s)
    for (std::size_t i = 0; i < 4; ++i)
      CHECK(k.data()[s * 4 + i] == doctest::Approx(expected[s][i]).epsilon(1e-15));
  CHECK_FALSE(k.requires_grad());
}

TEST_CASE("wpt_as_conv: equivalent to wpt_forward") {
  const auto f = WaveletFilterPair::haar();
  for (std::size_t k = 1; k <= 3; ++k) {
    std::mt19937_64 rng(30 + k);
    auto img = random_tensor(Shape{2, 3, 32, 32}, rng);
    auto conv = conv2d(img, wpt_as_conv<double>(k, f, 3), std::size_t{1} << k, 0);
    auto flat = wpt_forward(img, k, f).back().flatten();
    REQUIRE(conv.shape() == flat.shape());
    CHECK(max_abs_diff(conv.data(), flat.data()) < 1e-10);
  }
}

TEST_CASE("wpt_as_conv: per-channel application matches single-channel kernels") {
  const auto f = WaveletFilterPair::haar();
  std::mt19937_64 rng(44);
  auto img = random_tensor(Shape{1, 3, 16, 16}, rng);
  auto all = conv2d(img, wpt_as_conv<double>(2, f, 3), 4, 0);
  auto single = wpt_as_conv<double>(2, f, 1);
  for (std::size_t c = 0; c < 3; ++c) {
    std::vector<double> plane(img.data().begin() + c * 256, img.data().begin() + (c + 1) * 256);
    auto one = conv2d(Tensord(Shape{1, 1, 16, 16}, plane), single, 4, 0);
    // Channel-major: channel c occupies output channels c*16 .. c*16+15.
    std::span<const double> block(all.data().data() + c * 16 * 16, 16 * 16);
    CHECK(max_abs_diff(block, one.data()) < 1e-12);
  }
}

TEST_CASE("wpt_as_conv: needs 2-tap filters") {
  CHECK_THROWS(wpt_as_conv<double>(1, WaveletFilterPair::db2(), 1));
}
