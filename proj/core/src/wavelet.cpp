#include "agewave/wavelet.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace agewave {

std::string to_string(WaveletFamily family) {
  return family == WaveletFamily::Haar ? "haar" : "db2";
}

WaveletFamily parse_wavelet_family(const std::string& name) {
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (lower == "haar") return WaveletFamily::Haar;
  if (lower == "db2") return WaveletFamily::Db2;
  throw std::invalid_argument("unknown wavelet family '" + name + "' (expected haar or db2)");
}

WaveletFilterPair WaveletFilterPair::haar() {
  const double r = 1.0 / std::sqrt(2.0);
  return {{r, r}, {r, -r}, WaveletFamily::Haar};
}

WaveletFilterPair WaveletFilterPair::db2() {
  const double s3 = std::sqrt(3.0);
  const double d = 4.0 * std::sqrt(2.0);
  std::vector<double> low{(1 + s3) / d, (3 + s3) / d, (3 - s3) / d, (1 - s3) / d};
  // Quadrature mirror: high[n] = (-1)^n low[L-1-n].
  std::vector<double> high(low.size());
  for (std::size_t n = 0; n < low.size(); ++n)
    high[n] = (n % 2 == 0 ? 1.0 : -1.0) * low[low.size() - 1 - n];
  return {low, high, WaveletFamily::Db2};
}

WaveletFilterPair WaveletFilterPair::of(WaveletFamily family) {
  return family == WaveletFamily::Haar ? haar() : db2();
}

void WaveletFilterPair::validate() const {
  if (low.empty() || low.size() != high.size())
    throw std::invalid_argument("wavelet filters need equal, non-zero tap counts");
  if (low.size() % 2 != 0) throw std::invalid_argument("wavelet filters need an even tap count");
  double ll = 0, hh = 0, lh = 0;
  for (std::size_t i = 0; i < low.size(); ++i) {
    ll += low[i] * low[i];
    hh += high[i] * high[i];
    lh += low[i] * high[i];
  }
  if (std::abs(ll - 1) > 1e-12 || std::abs(hh - 1) > 1e-12 || std::abs(lh) > 1e-12)
    throw std::invalid_argument("wavelet filters are not orthonormal");
}

std::string subband_name(std::size_t level, std::size_t index) {
  static constexpr const char* kNames[4] = {"LL", "LH", "HL", "HH"};
  std::string name;
  for (std::size_t j = 0; j < level; ++j) {
    const std::size_t shift = 2 * (level - 1 - j);
    if (!name.empty()) name += '.';
    name += kNames[(index >> shift) & 3u];
  }
  return name;
}

namespace {

// One analysis step of a single [h, w] plane into 4 half-size planes ordered
// (row filter, column filter) = LL, LH, HL, HH.
template <typename T>
void analyze_plane(const T* x, std::size_t h, std::size_t w, const WaveletFilterPair& f,
                   std::array<std::vector<T>, 4>& out) {
  const std::size_t hw = w / 2, hh = h / 2, taps = f.low.size();
  std::array<std::vector<T>, 2> rows{std::vector<T>(h * hw), std::vector<T>(h * hw)};
  for (std::size_t r = 0; r < 2; ++r) {
    const auto& taps_r = r == 0 ? f.low : f.high;
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t m = 0; m < hw; ++m) {
        T acc = 0;
        for (std::size_t t = 0; t < taps; ++t)
          acc += static_cast<T>(taps_r[t]) * x[y * w + (2 * m + t) % w];
        rows[r][y * hw + m] = acc;
      }
  }
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 2; ++c) {
      const auto& taps_c = c == 0 ? f.low : f.high;
      auto& dst = out[2 * r + c];
      dst.assign(hh * hw, T(0));
      for (std::size_t m = 0; m < hh; ++m)
        for (std::size_t xw = 0; xw < hw; ++xw) {
          T acc = 0;
          for (std::size_t t = 0; t < taps; ++t)
            acc += static_cast<T>(taps_c[t]) * rows[r][((2 * m + t) % h) * hw + xw];
          dst[m * hw + xw] = acc;
        }
    }
}

// Adjoint (= inverse, for orthonormal filters) of analyze_plane.
template <typename T>
std::vector<T> synthesize_plane(const std::array<const T*, 4>& bands, std::size_t hh,
                                std::size_t hw, const WaveletFilterPair& f) {
  const std::size_t h = 2 * hh, w = 2 * hw, taps = f.low.size();
  std::array<std::vector<T>, 2> rows{std::vector<T>(h * hw, T(0)), std::vector<T>(h * hw, T(0))};
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 2; ++c) {
      const auto& taps_c = c == 0 ? f.low : f.high;
      const T* src = bands[2 * r + c];
      for (std::size_t m = 0; m < hh; ++m)
        for (std::size_t xw = 0; xw < hw; ++xw)
          for (std::size_t t = 0; t < taps; ++t)
            rows[r][((2 * m + t) % h) * hw + xw] += static_cast<T>(taps_c[t]) * src[m * hw + xw];
    }
  std::vector<T> x(h * w, T(0));
  for (std::size_t r = 0; r < 2; ++r) {
    const auto& taps_r = r == 0 ? f.low : f.high;
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t m = 0; m < hw; ++m)
        for (std::size_t t = 0; t < taps; ++t)
          x[y * w + (2 * m + t) % w] += static_cast<T>(taps_r[t]) * rows[r][y * hw + m];
  }
  return x;
}

bool is_power_of_four(std::size_t n, std::size_t& level) {
  level = 0;
  if (n == 0) return false;
  while (n > 1) {
    if (n % 4 != 0) return false;
    n /= 4;
    ++level;
  }
  return true;
}

}  // namespace

template <typename T>
Tensor<T> CoefficientPacket<T>::flatten() const {
  if (subbands.empty()) throw ShapeError("flatten: empty packet");
  const Shape& s = subbands.front().shape();
  const std::size_t n = s[0], c = s[1], plane = s[2] * s[3], count = subbands.size();
  std::vector<T> out(n * c * count * plane);
  for (std::size_t b = 0; b < count; ++b) {
    const auto data = subbands[b].data();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t ch = 0; ch < c; ++ch)
        std::copy_n(data.data() + (i * c + ch) * plane, plane,
                    out.data() + ((i * c + ch) * count + b) * plane);
  }
  return Tensor<T>(Shape{n, c * count, s[2], s[3]}, std::move(out));
}

template <typename T>
std::vector<CoefficientPacket<T>> wpt_forward(const Tensor<T>& image, std::size_t levels,
                                              const WaveletFilterPair& filters) {
  filters.validate();
  if (image.rank() != 4)
    throw ShapeError("wpt_forward: image must be [N,C,H,W], got " + shape_string(image.shape()));
  if (levels == 0) throw std::invalid_argument("wpt_forward: levels must be at least 1");
  const std::size_t n = image.dim(0), c = image.dim(1), h = image.dim(2), w = image.dim(3);
  const std::size_t factor = std::size_t{1} << levels;
  if (h % factor != 0 || w % factor != 0)
    throw ShapeError("wpt_forward: image " + std::to_string(h) + "x" + std::to_string(w) +
                     " is not divisible by 2^" + std::to_string(levels) + "=" +
                     std::to_string(factor) + "; pad or resize the input first");

  // Level 0 is the image itself: one subband.
  std::vector<Tensor<T>> current{image.detach()};
  std::size_t ch = h, cw = w;
  std::vector<CoefficientPacket<T>> packets;
  for (std::size_t level = 1; level <= levels; ++level) {
    const std::size_t nh = ch / 2, nw = cw / 2;
    std::vector<std::vector<T>> next(current.size() * 4, std::vector<T>(n * c * nh * nw));
    std::array<std::vector<T>, 4> parts;
    for (std::size_t b = 0; b < current.size(); ++b) {
      const auto src = current[b].data();
      for (std::size_t p = 0; p < n * c; ++p) {
        analyze_plane(src.data() + p * ch * cw, ch, cw, filters, parts);
        for (std::size_t q = 0; q < 4; ++q)
          std::copy(parts[q].begin(), parts[q].end(), next[4 * b + q].begin() + p * nh * nw);
      }
    }
    CoefficientPacket<T> packet;
    packet.level = level;
    for (auto& band : next) packet.subbands.emplace_back(Shape{n, c, nh, nw}, std::move(band));
    current = packet.subbands;
    packets.push_back(std::move(packet));
    ch = nh;
    cw = nw;
  }
  return packets;
}

template <typename T>
Tensor<T> wpt_inverse(const CoefficientPacket<T>& packet, const WaveletFilterPair& filters) {
  filters.validate();
  std::size_t level = 0;
  if (!is_power_of_four(packet.subbands.size(), level) || level == 0)
    throw std::invalid_argument("wpt_inverse: subband count " +
                                std::to_string(packet.subbands.size()) +
                                " is not a positive power of 4");
  if (packet.level != 0 && packet.level != level)
    throw std::invalid_argument("wpt_inverse: packet level does not match its subband count");
  const Shape shape = packet.subbands.front().shape();
  for (const auto& b : packet.subbands)
    if (b.shape() != shape) throw ShapeError("wpt_inverse: subbands differ in shape");
  const std::size_t planes = shape[0] * shape[1];
  std::size_t hh = shape[2], hw = shape[3];

  std::vector<std::vector<T>> current;
  for (const auto& b : packet.subbands) current.emplace_back(b.data().begin(), b.data().end());
  while (current.size() > 1) {
    std::vector<std::vector<T>> parents(current.size() / 4,
                                        std::vector<T>(planes * 4 * hh * hw));
    for (std::size_t b = 0; b < parents.size(); ++b)
      for (std::size_t p = 0; p < planes; ++p) {
        std::array<const T*, 4> bands{};
        for (std::size_t q = 0; q < 4; ++q) bands[q] = current[4 * b + q].data() + p * hh * hw;
        auto plane = synthesize_plane<T>(bands, hh, hw, filters);
        std::copy(plane.begin(), plane.end(), parents[b].begin() + p * 4 * hh * hw);
      }
    current = std::move(parents);
    hh *= 2;
    hw *= 2;
  }
  return Tensor<T>(Shape{shape[0], shape[1], hh, hw}, std::move(current.front()));
}

template <typename T>
Tensor<T> wpt_as_conv(std::size_t levels, const WaveletFilterPair& filters, std::size_t channels) {
  filters.validate();
  if (filters.low.size() != 2)
    throw std::invalid_argument("wpt_as_conv: single-layer equivalence needs 2-tap filters (" +
                                to_string(filters.family) + " has " +
                                std::to_string(filters.low.size()) + ")");
  if (levels == 0) throw std::invalid_argument("wpt_as_conv: levels must be at least 1");
  if (channels == 0) throw std::invalid_argument("wpt_as_conv: channels must be positive");
  const std::size_t size = std::size_t{1} << levels;
  const std::size_t count = std::size_t{1} << (2 * levels);
  std::vector<T> kernel(channels * count * channels * size * size, T(0));
  for (std::size_t s = 0; s < count; ++s) {
    for (std::size_t y = 0; y < size; ++y)
      for (std::size_t x = 0; x < size; ++x) {
        // Level j (1-based) filters bit j-1 of the pixel offset; its choice
        // sits in base-4 digit (levels - j) of the subband index.
        double value = 1.0;
        for (std::size_t j = 1; j <= levels; ++j) {
          const std::size_t digit = (s >> (2 * (levels - j))) & 3u;
          const auto& row_taps = (digit >> 1) ? filters.high : filters.low;
          const auto& col_taps = (digit & 1u) ? filters.high : filters.low;
          value *= row_taps[(x >> (j - 1)) & 1u] * col_taps[(y >> (j - 1)) & 1u];
        }
        for (std::size_t c = 0; c < channels; ++c) {
          const std::size_t f = c * count + s;
          kernel[((f * channels + c) * size + y) * size + x] = static_cast<T>(value);
        }
      }
  }
  return Tensor<T>(Shape{channels * count, channels, size, size}, std::move(kernel));
}

template struct CoefficientPacket<float>;
template struct CoefficientPacket<double>;
template std::vector<CoefficientPacket<float>> wpt_forward(const Tensor<float>&, std::size_t,
                                                           const WaveletFilterPair&);
template std::vector<CoefficientPacket<double>> wpt_forward(const Tensor<double>&, std::size_t,
                                                            const WaveletFilterPair&);
template Tensor<float> wpt_inverse(const CoefficientPacket<float>&, const WaveletFilterPair&);
template Tensor<double> wpt_inverse(const CoefficientPacket<double>&, const WaveletFilterPair&);
template Tensor<float> wpt_as_conv(std::size_t, const WaveletFilterPair&, std::size_t);
template Tensor<double> wpt_as_conv(std::size_t, const WaveletFilterPair&, std::size_t);

}  // namespace agewave
