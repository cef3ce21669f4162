#include "agewave/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>

#include "agewave/image_io.hpp"

namespace agewave {

namespace {

constexpr float kBackground = -0.6f;
// Clean foreground keeps its brightest channel at >= 0.8 * 0.7 - 0.3 = 0.26
// under the strongest stripes; the background sits at -0.6.
constexpr float kForegroundThreshold = 0.1f;
constexpr double kSquareFillThreshold = 0.9;

struct ShapeParams {
  bool square = false;
  bool hue_a = true;
  double cx = 0, cy = 0, half = 0, shade = 1;
};

Tensorf render(const ShapeParams& p, std::size_t res, double amplitude) {
  const std::size_t plane = res * res;
  std::vector<float> v(3 * plane, byte_to_unit(unit_to_byte(kBackground)));
  const std::array<double, 3> color =
      p.hue_a ? std::array<double, 3>{0.7, 0.15, -0.3} : std::array<double, 3>{-0.3, 0.15, 0.7};
  for (std::size_t y = 0; y < res; ++y) {
    const double dy = static_cast<double>(y) + 0.5 - p.cy;
    const double stripe = (y % 2 == 0 ? amplitude : -amplitude);
    for (std::size_t x = 0; x < res; ++x) {
      const double dx = static_cast<double>(x) + 0.5 - p.cx;
      const bool inside = p.square ? (std::abs(dx) <= p.half && std::abs(dy) <= p.half)
                                   : (dx * dx + dy * dy <= p.half * p.half);
      if (!inside) continue;
      for (std::size_t c = 0; c < 3; ++c) {
        const double value = std::clamp(color[c] * p.shade + stripe, -1.0, 1.0);
        // Quantize to the 8-bit grid so the in-memory and on-disk data agree.
        v[c * plane + y * res + x] = byte_to_unit(unit_to_byte(static_cast<float>(value)));
      }
    }
  }
  return Tensorf(Shape{3, res, res}, std::move(v));
}

}  // namespace

void SyntheticAgingSpec::validate() const {
  if (resolution < 32 || (resolution & (resolution - 1)) != 0)
    throw std::invalid_argument("synthetic resolution must be a power of two >= 32 (smaller discs are indistinguishable from squares)");
  for (std::size_t g = 0; g < kAgeGroupCount; ++g) {
    if (stripe_amplitude[g] < 0.0 || stripe_amplitude[g] > 0.3)
      throw std::invalid_argument("stripe amplitudes must lie in [0, 0.3]");
    if (g > 0 && !(stripe_amplitude[g] > stripe_amplitude[g - 1]))
      throw std::invalid_argument("stripe amplitudes must strictly increase with age group");
  }
  if (label_flip_probability < 0.0 || label_flip_probability > 1.0)
    throw std::invalid_argument("label flip probability must lie in [0, 1]");
}

AttributeSchema SyntheticAgingSpec::schema() {
  return AttributeSchema({{"shape", {"circle", "square"}}, {"hue", {"A", "B"}}});
}

Dataset generate_synthetic(const SyntheticAgingSpec& spec, std::size_t n_per_cell,
                           std::uint64_t seed) {
  spec.validate();
  Dataset ds;
  ds.config.resolution = spec.resolution;
  ds.config.schema = SyntheticAgingSpec::schema();
  const double scale = static_cast<double>(spec.resolution) / 64.0;
  const double mid = static_cast<double>(spec.resolution) / 2.0;
  const std::array<std::string, 2> shapes{"circle", "square"};
  const std::array<std::string, 2> hues{"A", "B"};

  std::uint64_t index = 0;
  for (AgeGroup group : kAllAgeGroups) {
    for (std::size_t s = 0; s < 2; ++s) {
      for (std::size_t h = 0; h < 2; ++h) {
        for (std::size_t n = 0; n < n_per_cell; ++n, ++index) {
          std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                            static_cast<std::uint32_t>(index)};
          std::mt19937_64 rng(seq);
          std::uniform_real_distribution<double> jitter(-6.0 * scale, 6.0 * scale);
          std::uniform_real_distribution<double> size(12.0 * scale, 18.0 * scale);
          std::uniform_real_distribution<double> shade(0.8, 1.0);
          ShapeParams p;
          p.square = s == 1;
          p.hue_a = h == 0;
          p.cx = mid + jitter(rng);
          p.cy = mid + jitter(rng);
          p.half = size(rng);
          p.shade = shade(rng);

          std::vector<std::string> labels{shapes[s], hues[h]};
          std::bernoulli_distribution flip(spec.label_flip_probability);
          std::uniform_int_distribution<std::size_t> which(0, 1);
          if (flip(rng)) {
            const std::size_t g = which(rng);
            labels[g] = g == 0 ? shapes[1 - s] : hues[1 - h];
          }

          TrainingSample sample;
          sample.image =
              render(p, spec.resolution, spec.stripe_amplitude[static_cast<std::size_t>(group)]);
          sample.attributes = AttributeVector::encode(ds.config.schema, labels);
          sample.age_group = group;
          char name[64];
          std::snprintf(name, sizeof name, "s%05llu_%s_%s_%s.ppm",
                        static_cast<unsigned long long>(index), shapes[s].c_str(),
                        hues[h].c_str(), to_string(group).c_str());
          sample.id = name;
          ds.samples.push_back(std::move(sample));
        }
      }
    }
  }
  return ds;
}

std::vector<std::string> AttributeOracle::classify(const Tensorf& image) const {
  Shape s = image.shape();
  if (s.size() == 4 && s[0] == 1) s.erase(s.begin());
  if (s.size() != 3 || s[0] != 3)
    throw ShapeError("oracle expects a [3,H,W] image, got " +
                     shape_string(image.shape()));
  const std::size_t h = s[1], w = s[2], plane = h * w;
  const auto& v = image.data();
  std::vector<char> mask(plane, 0);
  for (std::size_t i = 0; i < plane; ++i)
    mask[i] = std::max({v[i], v[plane + i], v[2 * plane + i]}) > kForegroundThreshold;
  // Largest 4-connected foreground component.
  std::vector<int> label(plane, -1);
  std::vector<std::size_t> best, current, stack;
  for (std::size_t start = 0; start < plane; ++start) {
    if (!mask[start] || label[start] >= 0) continue;
    current.clear();
    stack.assign(1, start);
    label[start] = static_cast<int>(start);
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      current.push_back(i);
      const std::size_t r = i / w, c = i % w;
      auto visit = [&](std::size_t j) {
        if (mask[j] && label[j] < 0) {
          label[j] = static_cast<int>(start);
          stack.push_back(j);
        }
      };
      if (r > 0) visit(i - w);
      if (r + 1 < h) visit(i + w);
      if (c > 0) visit(i - 1);
      if (c + 1 < w) visit(i + 1);
    }
    if (current.size() > best.size()) best = current;
  }

  double red_minus_blue = 0.0;
  std::size_t min_r = h, max_r = 0, min_c = w, max_c = 0;
  for (auto i : best) {
    red_minus_blue += v[i] - v[2 * plane + i];
    min_r = std::min(min_r, i / w);
    max_r = std::max(max_r, i / w);
    min_c = std::min(min_c, i % w);
    max_c = std::max(max_c, i % w);
  }
  const std::string hue = red_minus_blue >= 0 ? "A" : "B";
  if (best.empty()) return {"circle", hue};
  const double box = static_cast<double>((max_r - min_r + 1) * (max_c - min_c + 1));
  const double fill = static_cast<double>(best.size()) / box;
  return {fill >= kSquareFillThreshold ? "square" : "circle", hue};
}

AttributeVector AttributeOracle::classify_code(const Tensorf& image) const {
  return AttributeVector::encode(SyntheticAgingSpec::schema(), classify(image));
}

double AttributeOracle::accuracy(const std::vector<TrainingSample>& samples) const {
  if (samples.empty()) throw std::invalid_argument("oracle accuracy needs at least one sample");
  std::size_t hits = 0;
  for (const auto& s : samples)
    if (classify_code(s.image) == s.attributes) ++hits;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(samples.size());
}

}  // namespace agewave
