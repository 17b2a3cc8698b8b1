#include "srkocl/tensor.hpp"

#include <cmath>
#include <unordered_set>
#include <utility>

namespace srkocl {

std::string_view to_string(Precision p) { return p == Precision::f32 ? "f32" : "f64"; }

Precision parse_precision(std::string_view name) {
  if (name == "f32") return Precision::f32;
  if (name == "f64") return Precision::f64;
  throw ValueError("unknown precision '" + std::string(name) + "' (expected f32 or f64)");
}

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto extent : shape) n *= extent;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

namespace {
thread_local bool no_grad_active = false;
}

NoGradGuard::NoGradGuard() : previous_(no_grad_active) { no_grad_active = true; }
NoGradGuard::~NoGradGuard() { no_grad_active = previous_; }
bool NoGradGuard::active() { return no_grad_active; }

namespace detail {

template <typename T>
void check_finite(const char* op, std::span<const T> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw NumericError(std::string(op) + ": non-finite value at flat index " + std::to_string(i));
    }
  }
}

template <typename T>
Tensor<T> make_result(const char* op, Shape shape, std::vector<T> values,
                      std::vector<Tensor<T>> inputs, BackwardFn<T> backward) {
  check_finite<T>(op, values);
  Tensor<T> out(std::move(shape), std::move(values));
  if (no_grad_active) return out;
  bool needs_grad = false;
  for (const auto& in : inputs) needs_grad = needs_grad || in.requires_grad();
  if (!needs_grad) return out;

  auto node = std::make_shared<Node<T>>();
  node->inputs.reserve(inputs.size());
  for (const auto& in : inputs) node->inputs.push_back(in.impl_ptr());
  node->backward = std::move(backward);
  node->op = op;
  out.impl().requires_grad = true;
  out.impl().node = std::move(node);
  return out;
}

}  // namespace detail

template <typename T>
void backward(const Tensor<T>& root) {
  if (root.numel() != 1) {
    throw ShapeError("backward() needs a scalar root, got shape " + shape_string(root.shape()));
  }
  if (!root.requires_grad()) return;

  // Iterative post-order DFS; input order fixes the topological order, so the
  // accumulation sequence is identical on every replay.
  using Impl = detail::TensorImpl<T>;
  std::vector<Impl*> order;
  std::unordered_set<Impl*> visited;
  std::vector<std::pair<Impl*, std::size_t>> stack;
  stack.emplace_back(root.impl_ptr().get(), 0);
  visited.insert(root.impl_ptr().get());
  while (!stack.empty()) {
    auto& [impl, next] = stack.back();
    if (impl->node && next < impl->node->inputs.size()) {
      Impl* child = impl->node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
      continue;
    }
    order.push_back(impl);
    stack.pop_back();
  }

  auto& seed = root.impl();
  if (seed.grad.empty()) seed.grad.assign(1, T(0));
  seed.grad[0] += T(1);

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Impl* impl = *it;
    if (!impl->node) continue;
    if (!impl->grad.empty()) impl->node->backward(impl->grad);
  }
  // Release interior nodes and their gradients; leaves keep theirs.
  for (Impl* impl : order) {
    if (impl->node) {
      impl->node.reset();
      impl->grad.clear();
    }
  }
}

template void detail::check_finite<float>(const char*, std::span<const float>);
template void detail::check_finite<double>(const char*, std::span<const double>);
template Tensor<float> detail::make_result(const char*, Shape, std::vector<float>, std::vector<Tensor<float>>,
                                           detail::BackwardFn<float>);
template Tensor<double> detail::make_result(const char*, Shape, std::vector<double>, std::vector<Tensor<double>>,
                                            detail::BackwardFn<double>);
template void backward(const Tensor<float>&);
template void backward(const Tensor<double>&);

}  // namespace srkocl
