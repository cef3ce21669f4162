#include "agewave/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace agewave {

namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMatrix<T>>;

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
}

// Accumulation target for parent `i`, or an empty span if it takes no gradient.
template <typename T>
std::span<T> parent_grad(Node<T>& self, std::size_t i) {
  auto& p = *self.parents[i];
  if (!p.requires_grad) return {};
  return p.grad_buffer();
}

template <typename T, typename Fn, typename Deriv>
Tensor<T> unary(const char* op, const Tensor<T>& a, Fn fn, Deriv deriv) {
  std::vector<T> out(a.numel());
  auto in = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fn(in[i]);
  return make_result<T>(op, a.shape(), std::move(out), {a}, [deriv](Node<T>& self) {
    auto g = parent_grad(self, 0);
    const auto& x = self.parents[0]->data;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * deriv(x[i], self.data[i]);
  });
}

void require_4d(const Shape& s, const char* op, const char* what) {
  if (s.size() != 4)
    throw ShapeError(std::string(op) + ": " + what + " must be 4-D [N,C,H,W], got " +
                     shape_string(s));
}

struct ConvGeometry {
  std::size_t channels, height, width;  // the "image" side
  std::size_t kh, kw, stride, padding;
  std::size_t out_h, out_w;             // the "column grid" side
};

// Unfolds one [C,H,W] image into a [C*kh*kw, out_h*out_w] row-major matrix.
template <typename T>
void im2col(const T* image, const ConvGeometry& g, T* col) {
  const std::size_t cols = g.out_h * g.out_w;
  for (std::size_t c = 0; c < g.channels; ++c)
    for (std::size_t i = 0; i < g.kh; ++i)
      for (std::size_t j = 0; j < g.kw; ++j) {
        T* row = col + ((c * g.kh + i) * g.kw + j) * cols;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const long y = static_cast<long>(oy * g.stride + i) - static_cast<long>(g.padding);
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const long x = static_cast<long>(ox * g.stride + j) - static_cast<long>(g.padding);
            const bool inside = y >= 0 && x >= 0 && y < static_cast<long>(g.height) &&
                                x < static_cast<long>(g.width);
            row[oy * g.out_w + ox] =
                inside ? image[(c * g.height + static_cast<std::size_t>(y)) * g.width +
                               static_cast<std::size_t>(x)]
                       : T(0);
          }
        }
      }
}

// Adjoint of im2col: scatters-and-adds columns back into the image.
template <typename T>
void col2im(const T* col, const ConvGeometry& g, T* image) {
  const std::size_t cols = g.out_h * g.out_w;
  for (std::size_t c = 0; c < g.channels; ++c)
    for (std::size_t i = 0; i < g.kh; ++i)
      for (std::size_t j = 0; j < g.kw; ++j) {
        const T* row = col + ((c * g.kh + i) * g.kw + j) * cols;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const long y = static_cast<long>(oy * g.stride + i) - static_cast<long>(g.padding);
          if (y < 0 || y >= static_cast<long>(g.height)) continue;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const long x = static_cast<long>(ox * g.stride + j) - static_cast<long>(g.padding);
            if (x < 0 || x >= static_cast<long>(g.width)) continue;
            image[(c * g.height + static_cast<std::size_t>(y)) * g.width +
                  static_cast<std::size_t>(x)] += row[oy * g.out_w + ox];
          }
        }
      }
}

template <typename T>
void check_bias(const std::optional<Tensor<T>>& bias, std::size_t channels, const char* op) {
  if (bias && (bias->rank() != 1 || bias->dim(0) != channels))
    throw ShapeError(std::string(op) + ": bias must be [" + std::to_string(channels) + "], got " +
                     shape_string(bias->shape()));
}

template <typename T>
void add_bias(std::vector<T>& out, const Tensor<T>& bias, std::size_t n, std::size_t f,
              std::size_t plane) {
  auto b = bias.data();
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t c = 0; c < f; ++c) {
      T* p = out.data() + (s * f + c) * plane;
      for (std::size_t k = 0; k < plane; ++k) p[k] += b[c];
    }
}

template <typename T>
void bias_backward(std::span<T> gb, const std::vector<T>& grad, std::size_t n, std::size_t f,
                   std::size_t plane) {
  if (gb.empty()) return;
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t c = 0; c < f; ++c) {
      const T* p = grad.data() + (s * f + c) * plane;
      T acc = 0;
      for (std::size_t k = 0; k < plane; ++k) acc += p[k];
      gb[c] += acc;
    }
}

}  // namespace

std::size_t conv_output_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                               std::size_t padding) {
  if (stride == 0) throw ShapeError("conv stride must be positive");
  if (in + 2 * padding < kernel)
    throw ShapeError("conv kernel extent " + std::to_string(kernel) + " exceeds padded input " +
                     std::to_string(in + 2 * padding));
  return (in + 2 * padding - kernel) / stride + 1;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "add");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return make_result<T>("add", a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      auto g = parent_grad(self, k);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "sub");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  return make_result<T>("sub", a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
    auto ga = parent_grad(self, 0);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i];
    auto gb = parent_grad(self, 1);
    for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= self.grad[i];
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "mul");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return make_result<T>("mul", a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
    const auto& x = self.parents[0]->data;
    const auto& y = self.parents[1]->data;
    auto ga = parent_grad(self, 0);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i] * y[i];
    auto gb = parent_grad(self, 1);
    for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += self.grad[i] * x[i];
  });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T s) {
  return unary<T>("add_scalar", a, [s](T x) { return x + s; }, [](T, T) { return T(1); });
}

template <typename T>
Tensor<T> mul_scalar(const Tensor<T>& a, T s) {
  return unary<T>("mul_scalar", a, [s](T x) { return x * s; }, [s](T, T) { return s; });
}

template <typename T>
Tensor<T> scale_by(const Tensor<T>& a, const Tensor<T>& s) {
  if (s.numel() != 1)
    throw ShapeError("scale_by: scale must have one element, got " + shape_string(s.shape()));
  const T factor = s.item();
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * factor;
  return make_result<T>("scale_by", a.shape(), std::move(out), {a, s}, [](Node<T>& self) {
    const auto& x = self.parents[0]->data;
    const T f = self.parents[1]->data[0];
    auto ga = parent_grad(self, 0);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i] * f;
    auto gs = parent_grad(self, 1);
    if (!gs.empty()) {
      T acc = 0;
      for (std::size_t i = 0; i < x.size(); ++i) acc += self.grad[i] * x[i];
      gs[0] += acc;
    }
  });
}

template <typename T>
Tensor<T> square(const Tensor<T>& a) {
  return unary<T>("square", a, [](T x) { return x * x; }, [](T x, T) { return T(2) * x; });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
  return unary<T>(
      "relu", a, [](T x) { return x > T(0) ? x : T(0); },
      [](T x, T) { return x > T(0) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& a, T slope) {
  return unary<T>(
      "leaky_relu", a, [slope](T x) { return x > T(0) ? x : slope * x; },
      [slope](T x, T) { return x > T(0) ? T(1) : slope; });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& a) {
  const T edge = std::nextafter(T(1), T(0));
  return unary<T>(
      "tanh", a, [edge](T x) { return std::clamp(std::tanh(x), -edge, edge); },
      [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  T acc = 0;
  for (T v : a.data()) acc += v;
  return make_result<T>("sum", Shape{1}, {acc}, {a}, [](Node<T>& self) {
    auto g = parent_grad(self, 0);
    for (auto& v : g) v += self.grad[0];
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
  T acc = 0;
  for (T v : a.data()) acc += v;
  const T inv = T(1) / static_cast<T>(a.numel());
  return make_result<T>("mean", Shape{1}, {acc * inv}, {a}, [inv](Node<T>& self) {
    auto g = parent_grad(self, 0);
    for (auto& v : g) v += self.grad[0] * inv;
  });
}

template <typename T>
Tensor<T> frobenius_sq(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "frobenius_sq");
  T acc = 0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    const T d = a.data()[i] - b.data()[i];
    acc += d * d;
  }
  return make_result<T>("frobenius_sq", Shape{1}, {acc}, {a, b}, [](Node<T>& self) {
    const auto& x = self.parents[0]->data;
    const auto& y = self.parents[1]->data;
    const T g0 = self.grad[0];
    auto ga = parent_grad(self, 0);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += T(2) * g0 * (x[i] - y[i]);
    auto gb = parent_grad(self, 1);
    for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= T(2) * g0 * (x[i] - y[i]);
  });
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& tensors, std::size_t axis) {
  if (tensors.empty()) throw ShapeError("concat: no inputs");
  const Shape& first = tensors.front().shape();
  if (axis >= first.size())
    throw ShapeError("concat: axis " + std::to_string(axis) + " out of range for " +
                     shape_string(first));
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const auto& t : tensors) {
    const Shape& s = t.shape();
    if (s.size() != first.size())
      throw ShapeError("concat: rank mismatch " + shape_string(first) + " vs " + shape_string(s));
    for (std::size_t d = 0; d < s.size(); ++d)
      if (d != axis && s[d] != first[d])
        throw ShapeError("concat: axis " + std::to_string(d) + " mismatch " +
                         shape_string(first) + " vs " + shape_string(s));
    out_shape[axis] += s[axis];
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= first[d];
  for (std::size_t d = axis + 1; d < first.size(); ++d) inner *= first[d];

  std::vector<std::size_t> extents;
  for (const auto& t : tensors) extents.push_back(t.shape()[axis]);
  const std::size_t total = out_shape[axis];

  std::vector<T> out(shape_numel(out_shape));
  for (std::size_t o = 0; o < outer; ++o) {
    std::size_t offset = 0;
    for (std::size_t k = 0; k < tensors.size(); ++k) {
      const std::size_t block = extents[k] * inner;
      std::copy_n(tensors[k].data().data() + o * block, block,
                  out.data() + (o * total + offset) * inner);
      offset += extents[k];
    }
  }
  return make_result<T>("concat", out_shape, std::move(out), tensors,
                        [extents, outer, inner, total](Node<T>& self) {
                          std::size_t offset = 0;
                          for (std::size_t k = 0; k < extents.size(); ++k) {
                            auto g = parent_grad(self, k);
                            const std::size_t block = extents[k] * inner;
                            if (!g.empty())
                              for (std::size_t o = 0; o < outer; ++o) {
                                const T* src = self.grad.data() + (o * total + offset) * inner;
                                T* dst = g.data() + o * block;
                                for (std::size_t i = 0; i < block; ++i) dst[i] += src[i];
                              }
                            offset += extents[k];
                          }
                        });
}

template <typename T>
Tensor<T> tile_spatial(const Tensor<T>& code, std::size_t height, std::size_t width) {
  if (code.rank() != 2)
    throw ShapeError("tile_spatial: code must be [N,P], got " + shape_string(code.shape()));
  if (height == 0 || width == 0) throw ShapeError("tile_spatial: zero spatial extent");
  const std::size_t n = code.dim(0), p = code.dim(1), plane = height * width;
  std::vector<T> out(n * p * plane);
  for (std::size_t i = 0; i < n * p; ++i)
    std::fill_n(out.data() + i * plane, plane, code.data()[i]);
  return make_result<T>("tile_spatial", Shape{n, p, height, width}, std::move(out), {code},
                        [plane](Node<T>& self) {
                          auto g = parent_grad(self, 0);
                          for (std::size_t i = 0; i < g.size(); ++i) {
                            T acc = 0;
                            for (std::size_t k = 0; k < plane; ++k) acc += self.grad[i * plane + k];
                            g[i] += acc;
                          }
                        });
}

template <typename T>
Tensor<T> gather(const Tensor<T>& table, const std::vector<std::size_t>& indices) {
  if (table.rank() != 1)
    throw ShapeError("gather: table must be 1-D, got " + shape_string(table.shape()));
  if (indices.empty()) throw ShapeError("gather: no indices");
  std::vector<T> out(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= table.numel())
      throw ShapeError("gather: index " + std::to_string(indices[i]) + " out of range " +
                       std::to_string(table.numel()));
    out[i] = table.data()[indices[i]];
  }
  return make_result<T>("gather", Shape{indices.size()}, std::move(out), {table},
                        [indices](Node<T>& self) {
                          auto g = parent_grad(self, 0);
                          if (g.empty()) return;
                          for (std::size_t i = 0; i < indices.size(); ++i)
                            g[indices[i]] += self.grad[i];
                        });
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel, std::size_t stride,
                 std::size_t padding, const std::optional<Tensor<T>>& bias) {
  require_4d(input.shape(), "conv2d", "input");
  require_4d(kernel.shape(), "conv2d", "kernel");
  const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  const std::size_t f = kernel.dim(0), kh = kernel.dim(2), kw = kernel.dim(3);
  if (kernel.dim(1) != c)
    throw ShapeError("conv2d: input channel axis 1 (" + std::to_string(c) +
                     ") does not match kernel axis 1 (" + std::to_string(kernel.dim(1)) + ")");
  if (h + 2 * padding < kh || w + 2 * padding < kw)
    throw ShapeError("conv2d: kernel spatial axes 2,3 " + shape_string(kernel.shape()) +
                     " exceed padded input axes 2,3 of " + shape_string(input.shape()));
  check_bias(bias, f, "conv2d");
  const ConvGeometry geo{c, h, w, kh, kw, stride, padding,
                         conv_output_extent(h, kh, stride, padding),
                         conv_output_extent(w, kw, stride, padding)};
  const std::size_t rows = c * kh * kw, cols = geo.out_h * geo.out_w;

  std::vector<T> out(n * f * cols);
  std::vector<T> col(rows * cols);
  ConstMatMap<T> kmat(kernel.data().data(), f, rows);
  for (std::size_t s = 0; s < n; ++s) {
    im2col(input.data().data() + s * c * h * w, geo, col.data());
    MatMap<T> omat(out.data() + s * f * cols, f, cols);
    omat.noalias() = kmat * ConstMatMap<T>(col.data(), rows, cols);
  }
  if (bias) add_bias(out, *bias, n, f, cols);

  std::vector<Tensor<T>> parents{input, kernel};
  if (bias) parents.push_back(*bias);
  return make_result<T>(
      "conv2d", Shape{n, f, geo.out_h, geo.out_w}, std::move(out), parents,
      [geo, n, f, rows, cols](Node<T>& self) {
        auto gx = parent_grad(self, 0);
        auto gk = parent_grad(self, 1);
        const auto& x = self.parents[0]->data;
        const auto& k = self.parents[1]->data;
        const std::size_t image = geo.channels * geo.height * geo.width;
        std::vector<T> col(rows * cols);
        std::vector<T> dcol;
        if (!gx.empty()) dcol.resize(rows * cols);
        for (std::size_t s = 0; s < n; ++s) {
          ConstMatMap<T> dout(self.grad.data() + s * f * cols, f, cols);
          if (!gk.empty()) {
            im2col(x.data() + s * image, geo, col.data());
            MatMap<T>(gk.data(), f, rows).noalias() +=
                dout * ConstMatMap<T>(col.data(), rows, cols).transpose();
          }
          if (!gx.empty()) {
            MatMap<T>(dcol.data(), rows, cols).noalias() =
                ConstMatMap<T>(k.data(), f, rows).transpose() * dout;
            col2im(dcol.data(), geo, gx.data() + s * image);
          }
        }
        if (self.parents.size() > 2) bias_backward(parent_grad(self, 2), self.grad, n, f, cols);
      });
}

template <typename T>
Tensor<T> conv2d_transpose(const Tensor<T>& input, const Tensor<T>& kernel, std::size_t stride,
                           std::size_t padding, std::size_t output_padding,
                           const std::optional<Tensor<T>>& bias) {
  require_4d(input.shape(), "conv2d_transpose", "input");
  require_4d(kernel.shape(), "conv2d_transpose", "kernel");
  const std::size_t n = input.dim(0), f = input.dim(1), h = input.dim(2), w = input.dim(3);
  const std::size_t c = kernel.dim(1), kh = kernel.dim(2), kw = kernel.dim(3);
  if (kernel.dim(0) != f)
    throw ShapeError("conv2d_transpose: input channel axis 1 (" + std::to_string(f) +
                     ") does not match kernel axis 0 (" + std::to_string(kernel.dim(0)) + ")");
  if (stride == 0) throw ShapeError("conv2d_transpose: stride must be positive");
  if (output_padding >= stride)
    throw ShapeError("conv2d_transpose: output_padding must be smaller than stride");
  const long oh = static_cast<long>((h - 1) * stride + kh + output_padding) -
                  static_cast<long>(2 * padding);
  const long ow = static_cast<long>((w - 1) * stride + kw + output_padding) -
                  static_cast<long>(2 * padding);
  if (oh <= 0 || ow <= 0)
    throw ShapeError("conv2d_transpose: padding too large for axes 2,3 of " +
                     shape_string(input.shape()));
  check_bias(bias, c, "conv2d_transpose");
  const ConvGeometry geo{c, static_cast<std::size_t>(oh), static_cast<std::size_t>(ow), kh, kw,
                         stride, padding, h, w};
  const std::size_t rows = c * kh * kw, cols = h * w;
  const std::size_t out_image = c * geo.height * geo.width;

  std::vector<T> out(n * out_image, T(0));
  std::vector<T> col(rows * cols);
  ConstMatMap<T> kmat(kernel.data().data(), f, rows);
  for (std::size_t s = 0; s < n; ++s) {
    MatMap<T>(col.data(), rows, cols).noalias() =
        kmat.transpose() * ConstMatMap<T>(input.data().data() + s * f * cols, f, cols);
    col2im(col.data(), geo, out.data() + s * out_image);
  }
  if (bias) add_bias(out, *bias, n, c, geo.height * geo.width);

  std::vector<Tensor<T>> parents{input, kernel};
  if (bias) parents.push_back(*bias);
  return make_result<T>(
      "conv2d_transpose", Shape{n, c, geo.height, geo.width}, std::move(out), parents,
      [geo, n, f, c, rows, cols, out_image](Node<T>& self) {
        auto gx = parent_grad(self, 0);
        auto gk = parent_grad(self, 1);
        const auto& x = self.parents[0]->data;
        const auto& k = self.parents[1]->data;
        std::vector<T> col(rows * cols);
        for (std::size_t s = 0; s < n; ++s) {
          im2col(self.grad.data() + s * out_image, geo, col.data());
          ConstMatMap<T> dcol(col.data(), rows, cols);
          if (!gx.empty())
            MatMap<T>(gx.data() + s * f * cols, f, cols).noalias() +=
                ConstMatMap<T>(k.data(), f, rows) * dcol;
          if (!gk.empty())
            MatMap<T>(gk.data(), f, rows).noalias() +=
                ConstMatMap<T>(x.data() + s * f * cols, f, cols) * dcol.transpose();
        }
        if (self.parents.size() > 2)
          bias_backward(parent_grad(self, 2), self.grad, n, c, geo.height * geo.width);
      });
}

template <typename T>
Tensor<T> instance_norm(const Tensor<T>& input, T epsilon) {
  require_4d(input.shape(), "instance_norm", "input");
  const std::size_t planes = input.dim(0) * input.dim(1);
  const std::size_t plane = input.dim(2) * input.dim(3);
  std::vector<T> out(input.numel());
  std::vector<T> inv_std(planes);
  const T inv_n = T(1) / static_cast<T>(plane);
  for (std::size_t p = 0; p < planes; ++p) {
    const T* x = input.data().data() + p * plane;
    T mu = 0;
    for (std::size_t i = 0; i < plane; ++i) mu += x[i];
    mu *= inv_n;
    T var = 0;
    for (std::size_t i = 0; i < plane; ++i) var += (x[i] - mu) * (x[i] - mu);
    var *= inv_n;
    inv_std[p] = T(1) / std::sqrt(var + epsilon);
    T* y = out.data() + p * plane;
    for (std::size_t i = 0; i < plane; ++i) y[i] = (x[i] - mu) * inv_std[p];
  }
  return make_result<T>("instance_norm", input.shape(), std::move(out), {input},
                        [inv_std, plane, planes, inv_n](Node<T>& self) {
                          auto g = parent_grad(self, 0);
                          if (g.empty()) return;
                          for (std::size_t p = 0; p < planes; ++p) {
                            const T* dy = self.grad.data() + p * plane;
                            const T* y = self.data.data() + p * plane;
                            T mean_dy = 0, mean_dyy = 0;
                            for (std::size_t i = 0; i < plane; ++i) {
                              mean_dy += dy[i];
                              mean_dyy += dy[i] * y[i];
                            }
                            mean_dy *= inv_n;
                            mean_dyy *= inv_n;
                            T* dx = g.data() + p * plane;
                            for (std::size_t i = 0; i < plane; ++i)
                              dx[i] += inv_std[p] * (dy[i] - mean_dy - y[i] * mean_dyy);
                          }
                        });
}

#define AGEWAVE_INSTANTIATE_OPS(T)                                                             \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> add_scalar(const Tensor<T>&, T);                                          \
  template Tensor<T> mul_scalar(const Tensor<T>&, T);                                          \
  template Tensor<T> scale_by(const Tensor<T>&, const Tensor<T>&);                             \
  template Tensor<T> square(const Tensor<T>&);                                                 \
  template Tensor<T> relu(const Tensor<T>&);                                                   \
  template Tensor<T> leaky_relu(const Tensor<T>&, T);                                          \
  template Tensor<T> tanh(const Tensor<T>&);                                                   \
  template Tensor<T> sum(const Tensor<T>&);                                                    \
  template Tensor<T> mean(const Tensor<T>&);                                                   \
  template Tensor<T> frobenius_sq(const Tensor<T>&, const Tensor<T>&);                         \
  template Tensor<T> concat(const std::vector<Tensor<T>>&, std::size_t);                       \
  template Tensor<T> tile_spatial(const Tensor<T>&, std::size_t, std::size_t);                 \
  template Tensor<T> gather(const Tensor<T>&, const std::vector<std::size_t>&);                \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, std::size_t, std::size_t,      \
                            const std::optional<Tensor<T>>&);                                  \
  template Tensor<T> conv2d_transpose(const Tensor<T>&, const Tensor<T>&, std::size_t,         \
                                      std::size_t, std::size_t,                                \
                                      const std::optional<Tensor<T>>&);                        \
  template Tensor<T> instance_norm(const Tensor<T>&, T);

AGEWAVE_INSTANTIATE_OPS(float)
AGEWAVE_INSTANTIATE_OPS(double)

}  // namespace agewave
