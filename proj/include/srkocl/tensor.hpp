#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "srkocl/error.hpp"

namespace srkocl {

enum class Precision { f32, f64 };

template <typename T>
constexpr Precision precision_of() {
  static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>);
  return std::is_same_v<T, float> ? Precision::f32 : Precision::f64;
}

std::string_view to_string(Precision p);
Precision parse_precision(std::string_view name);

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_string(const Shape& shape);

template <typename T>
class Tensor;

namespace detail {

template <typename T>
struct TensorImpl;

template <typename T>
using BackwardFn = std::function<void(std::span<const T> out_grad)>;

template <typename T>
struct Node {
  std::vector<std::shared_ptr<TensorImpl<T>>> inputs;
  BackwardFn<T> backward;
  const char* op = "";
};

template <typename T>
struct TensorImpl {
  Shape shape;
  std::vector<T> values;
  std::vector<T> grad;  // empty means "no gradient yet"
  bool requires_grad = false;
  std::shared_ptr<Node<T>> node;  // null for leaves
};

}  // namespace detail

// Dense tensor handle with shared ownership of its buffers. Copying a Tensor
// copies the handle; use clone() for a deep copy.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  Tensor(Shape shape, std::vector<T> values, bool requires_grad = false)
      : impl_(std::make_shared<detail::TensorImpl<T>>()) {
    if (shape.empty()) shape = {1};
    for (auto extent : shape) {
      if (extent == 0) throw ShapeError("tensor extents must be positive, got " + shape_string(shape));
    }
    if (srkocl::numel(shape) != values.size()) {
      throw ShapeError("shape " + shape_string(shape) + " does not match buffer of length " +
                       std::to_string(values.size()));
    }
    impl_->shape = std::move(shape);
    impl_->values = std::move(values);
    impl_->requires_grad = requires_grad;
  }

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    const auto n = srkocl::numel(shape);
    return Tensor(std::move(shape), std::vector<T>(n, T(0)), requires_grad);
  }

  static Tensor full(Shape shape, T value, bool requires_grad = false) {
    const auto n = srkocl::numel(shape);
    return Tensor(std::move(shape), std::vector<T>(n, value), requires_grad);
  }

  static Tensor scalar(T value, bool requires_grad = false) {
    return Tensor(Shape{1}, std::vector<T>{value}, requires_grad);
  }

  bool defined() const noexcept { return impl_ != nullptr; }

  const Shape& shape() const { return impl().shape; }
  std::size_t rank() const { return impl().shape.size(); }
  std::size_t numel() const { return impl().values.size(); }
  std::size_t dim(std::size_t axis) const { return impl().shape.at(axis); }

  std::span<const T> values() const { return impl().values; }
  // In-place access for leaves (parameter updates, finite-difference probes).
  std::span<T> mutable_values() { return impl().values; }

  T item() const {
    if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_string(shape()));
    return impl().values[0];
  }

  T operator[](std::size_t i) const { return impl().values.at(i); }

  bool requires_grad() const { return impl().requires_grad; }
  void set_requires_grad(bool on) { impl().requires_grad = on; }
  bool is_leaf() const { return impl().node == nullptr; }

  bool has_grad() const { return !impl().grad.empty(); }
  std::span<const T> grad() const { return impl().grad; }

  // Allocates (or resets) a zero gradient buffer.
  void zero_grad() { impl().grad.assign(numel(), T(0)); }
  void clear_grad() {
    impl().grad.clear();
    impl().grad.shrink_to_fit();
  }

  // Deep copy of values as a fresh leaf; gradients and graph are not copied.
  Tensor clone(bool requires_grad) const { return Tensor(shape(), impl().values, requires_grad); }
  Tensor clone() const { return clone(requires_grad()); }
  Tensor detach() const { return clone(false); }

  const void* id() const noexcept { return impl_.get(); }

  detail::TensorImpl<T>& impl() const {
    if (!impl_) throw Error("use of an undefined tensor");
    return *impl_;
  }
  const std::shared_ptr<detail::TensorImpl<T>>& impl_ptr() const { return impl_; }

 private:
  std::shared_ptr<detail::TensorImpl<T>> impl_;
};

// While alive on a thread, operations on that thread record no graph.
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

namespace detail {

// Builds an op output. Checks finiteness, and records a graph node when any
// input requires a gradient and recording is enabled.
template <typename T>
Tensor<T> make_result(const char* op, Shape shape, std::vector<T> values,
                      std::vector<Tensor<T>> inputs, BackwardFn<T> backward);

// Gradient buffer of t for accumulation, or nullptr if t does not need one.
template <typename T>
T* grad_target(const Tensor<T>& t) {
  auto& impl = t.impl();
  if (!impl.requires_grad) return nullptr;
  if (impl.grad.empty()) impl.grad.assign(impl.values.size(), T(0));
  return impl.grad.data();
}

template <typename T>
void check_finite(const char* op, std::span<const T> values);

}  // namespace detail

// Reverse-mode sweep from a scalar root. Every reachable leaf with
// requires_grad accumulates d(root)/d(leaf). The graph is released afterwards.
template <typename T>
void backward(const Tensor<T>& root);

extern template Tensor<float> detail::make_result(const char*, Shape, std::vector<float>,
                                                  std::vector<Tensor<float>>, detail::BackwardFn<float>);
extern template Tensor<double> detail::make_result(const char*, Shape, std::vector<double>,
                                                   std::vector<Tensor<double>>, detail::BackwardFn<double>);
extern template void backward(const Tensor<float>&);
extern template void backward(const Tensor<double>&);

}  // namespace srkocl
