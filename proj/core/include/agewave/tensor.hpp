#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace agewave {

using Shape = std::vector<std::size_t>;

/// Raised when operand shapes violate an op's contract.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a NaN or Inf shows up in values or gradients.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

template <typename T>
struct Node {
  std::uint64_t id = 0;
  const char* op = "leaf";
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until something is accumulated
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(Node&)> backward_fn;

  std::span<T> grad_buffer() {
    if (grad.empty()) grad.assign(data.size(), T(0));
    return grad;
  }
};

/// Monotonic node id; creation order is a topological order of the graph.
std::uint64_t next_node_id();

/// While alive on a thread, ops on that thread record no graph.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

  static bool active();

 private:
  bool previous_;
};

/// Dense row-major tensor handle with optional reverse-mode gradient tracking.
///
/// Copies share the underlying node. Values are treated as immutable once an
/// op has consumed them; optimizers write through `mutable_data()`.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0), bool requires_grad = false);
  Tensor(Shape shape, std::vector<T> values, bool requires_grad = false);

  static Tensor scalar(T value, bool requires_grad = false) {
    return Tensor(Shape{1}, std::vector<T>{value}, requires_grad);
  }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const { return node_->data.size(); }

  std::span<const T> data() const { return node_->data; }
  std::span<T> mutable_data() { return node_->data; }
  T item() const;
  T at(std::size_t flat_index) const { return node_->data.at(flat_index); }

  bool requires_grad() const { return node_ && node_->requires_grad; }
  void set_requires_grad(bool flag) { node_->requires_grad = flag; }
  bool has_grad() const { return !node_->grad.empty(); }
  /// Empty span when no gradient has been accumulated.
  std::span<const T> grad() const { return node_->grad; }
  void zero_grad() { node_->grad.clear(); }

  /// New leaf holding a copy of the values, cut from the graph.
  Tensor detach() const;
  /// Same shape and values under a new shape of equal size (copy, differentiable).
  Tensor reshape(Shape shape) const;

  /// Reverse traversal from this scalar; accumulates into every reachable
  /// tensor that requires grad.
  void backward() const;

  std::uint64_t id() const { return node_->id; }
  const char* op_name() const { return node_->op; }
  const std::shared_ptr<Node<T>>& node() const { return node_; }
  static Tensor from_node(std::shared_ptr<Node<T>> node) {
    Tensor t;
    t.node_ = std::move(node);
    return t;
  }

 private:
  std::shared_ptr<Node<T>> node_;
};

using Tensorf = Tensor<float>;
using Tensord = Tensor<double>;

/// Builds a result node; records parents and backward_fn only when some parent
/// requires grad and no NoGradGuard is active.
template <typename T>
Tensor<T> make_result(const char* op, Shape shape, std::vector<T> values,
                      std::vector<Tensor<T>> parents,
                      std::function<void(Node<T>&)> backward_fn);

/// Converts element type; the result is a fresh leaf.
template <typename To, typename From>
Tensor<To> cast(const Tensor<From>& source) {
  std::vector<To> values(source.data().begin(), source.data().end());
  return Tensor<To>(source.shape(), std::move(values));
}

/// Throws NumericError when any value is NaN or Inf.
template <typename T>
void check_finite(const Tensor<T>& tensor, const std::string& what);

}  // namespace agewave
