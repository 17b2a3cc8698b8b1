#pragma once

#include <cstddef>
#include <span>

#include "srkocl/tensor.hpp"

// Differentiable operations. Feature maps are H x W x C (channel fastest),
// convolution kernels kh x kw x Cin x Cout, linear weights n x m.
namespace srkocl::ops {

enum class Activation { relu, sigmoid };

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernels, std::size_t stride, std::size_t pad);

// Same-padded 1D cross-correlation; kernel length must be odd.
template <typename T>
Tensor<T> conv1d(const Tensor<T>& input, const Tensor<T>& kernel);

template <typename T>
Tensor<T> linear(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias);

template <typename T>
Tensor<T> activation(Activation kind, const Tensor<T>& input);

template <typename T>
Tensor<T> relu(const Tensor<T>& input) {
  return activation(Activation::relu, input);
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& input) {
  return activation(Activation::sigmoid, input);
}

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& input);

template <typename T>
Tensor<T> softmax_cross_entropy(const Tensor<T>& logits, std::size_t target);

// z[h, w, c] * s[c]
template <typename T>
Tensor<T> scale_channels(const Tensor<T>& z, const Tensor<T>& s);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor);

template <typename T>
Tensor<T> square(const Tensor<T>& a);

// Sum of all entries, as a scalar.
template <typename T>
Tensor<T> sum(const Tensor<T>& a);

// Arithmetic mean of scalar tensors, summed in order.
template <typename T>
Tensor<T> mean(std::span<const Tensor<T>> scalars);

template <typename T>
std::size_t argmax(const Tensor<T>& a);

}  // namespace srkocl::ops
