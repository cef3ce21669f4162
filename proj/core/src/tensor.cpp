#include "agewave/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace agewave {

namespace {
std::atomic<std::uint64_t> g_node_counter{0};
thread_local bool t_no_grad = false;
}  // namespace

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ',';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

std::uint64_t next_node_id() { return ++g_node_counter; }

NoGradGuard::NoGradGuard() : previous_(t_no_grad) { t_no_grad = true; }
NoGradGuard::~NoGradGuard() { t_no_grad = previous_; }
bool NoGradGuard::active() { return t_no_grad; }

namespace {
void validate_shape(const Shape& shape) {
  if (shape.empty()) throw ShapeError("tensor shape must have at least one axis");
  for (std::size_t i = 0; i < shape.size(); ++i)
    if (shape[i] == 0)
      throw ShapeError("tensor axis " + std::to_string(i) + " has zero extent in " +
                       shape_string(shape));
}
}  // namespace

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill, bool requires_grad) {
  validate_shape(shape);
  node_ = std::make_shared<Node<T>>();
  node_->id = next_node_id();
  node_->data.assign(shape_numel(shape), fill);
  node_->shape = std::move(shape);
  node_->requires_grad = requires_grad;
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values, bool requires_grad) {
  validate_shape(shape);
  if (shape_numel(shape) != values.size())
    throw ShapeError("shape " + shape_string(shape) + " needs " +
                     std::to_string(shape_numel(shape)) + " values, got " +
                     std::to_string(values.size()));
  node_ = std::make_shared<Node<T>>();
  node_->id = next_node_id();
  node_->shape = std::move(shape);
  node_->data = std::move(values);
  node_->requires_grad = requires_grad;
}

template <typename T>
std::size_t Tensor<T>::dim(std::size_t axis) const {
  if (axis >= rank())
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " +
                     shape_string(shape()));
  return node_->shape[axis];
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1)
    throw ShapeError("item() on non-scalar tensor " + shape_string(shape()));
  return node_->data[0];
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  return Tensor(node_->shape, node_->data, false);
}

template <typename T>
Tensor<T> Tensor<T>::reshape(Shape new_shape) const {
  if (shape_numel(new_shape) != numel())
    throw ShapeError("cannot reshape " + shape_string(shape()) + " to " +
                     shape_string(new_shape));
  return make_result<T>("reshape", std::move(new_shape), node_->data, {*this},
                        [](Node<T>& self) {
                          auto& parent = *self.parents[0];
                          auto g = parent.grad_buffer();
                          for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                        });
}

template <typename T>
void Tensor<T>::backward() const {
  if (numel() != 1)
    throw ShapeError("backward() needs a scalar loss, got shape " + shape_string(shape()));
  if (!node_->requires_grad) return;

  // Collect every reachable node that takes part in differentiation.
  std::vector<Node<T>*> order;
  std::unordered_set<const Node<T>*> seen;
  std::vector<Node<T>*> stack{node_.get()};
  seen.insert(node_.get());
  while (!stack.empty()) {
    Node<T>* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (auto& p : n->parents) {
      if (p->requires_grad && seen.insert(p.get()).second) stack.push_back(p.get());
    }
  }
  // Ids are assigned at creation, so descending id is a reverse topological order.
  std::sort(order.begin(), order.end(),
            [](const Node<T>* a, const Node<T>* b) { return a->id > b->id; });

  auto seed = node_->grad_buffer();
  seed[0] += T(1);
  for (Node<T>* n : order) {
    if (n->grad.empty()) continue;
    for (T g : n->grad) {
      if (!std::isfinite(g))
        throw NumericError("non-finite gradient at node " + std::to_string(n->id) + " (" +
                           n->op + ")");
    }
    if (n->backward_fn) n->backward_fn(*n);
  }
}

template <typename T>
Tensor<T> make_result(const char* op, Shape shape, std::vector<T> values,
                      std::vector<Tensor<T>> parents,
                      std::function<void(Node<T>&)> backward_fn) {
  Tensor<T> out(std::move(shape), std::move(values), false);
  auto& node = *out.node();
  node.op = op;
  if (NoGradGuard::active()) return out;
  bool any = false;
  for (const auto& p : parents) any = any || p.requires_grad();
  if (!any) return out;
  node.requires_grad = true;
  node.parents.reserve(parents.size());
  for (auto& p : parents) node.parents.push_back(p.node());
  node.backward_fn = std::move(backward_fn);
  return out;
}

template <typename T>
void check_finite(const Tensor<T>& tensor, const std::string& what) {
  for (T v : tensor.data())
    if (!std::isfinite(v))
      throw NumericError(what + ": non-finite value in tensor " + shape_string(tensor.shape()));
}

template class Tensor<float>;
template class Tensor<double>;
template Tensor<float> make_result(const char*, Shape, std::vector<float>,
                                   std::vector<Tensor<float>>,
                                   std::function<void(Node<float>&)>);
template Tensor<double> make_result(const char*, Shape, std::vector<double>,
                                    std::vector<Tensor<double>>,
                                    std::function<void(Node<double>&)>);
template void check_finite(const Tensor<float>&, const std::string&);
template void check_finite(const Tensor<double>&, const std::string&);

}  // namespace agewave
