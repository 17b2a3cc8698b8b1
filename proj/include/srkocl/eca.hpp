#pragma once

#include <cstddef>

#include "srkocl/random.hpp"
#include "srkocl/tensor.hpp"

namespace srkocl {

struct EcaParams {
  double lambda = 2.0;
  double b = 1.0;
  bool operator==(const EcaParams&) const = default;
};

// Odd 1D kernel length for a channel count: nearest odd integer to
// |log2(C) / lambda + b / lambda|, ties rounded down, never below 1 and never
// above the largest odd number <= C.
std::size_t kernel_size_rule(std::size_t channels, double lambda = 2.0, double b = 1.0);

// Per-channel spatial mean of a feature map.
template <typename T>
struct ChannelDescriptor {
  Tensor<T> values;  // length C
  std::size_t channels() const { return values.numel(); }
};

// Channel attention block: one k-tap kernel shared by every channel, no bias.
template <typename T>
struct EcaBlock {
  std::size_t channels = 0;
  std::size_t kernel_size = 1;
  EcaParams params;
  Tensor<T> weights;  // length kernel_size

  // Weights drawn uniformly from [-init_scale, init_scale], so initial gates
  // sit near 0.5.
  static EcaBlock create(std::size_t channels, EcaParams params, Rng& rng, double init_scale = 0.1);
};

template <typename T>
ChannelDescriptor<T> channel_descriptor(const Tensor<T>& z);

// s = sigmoid(conv1d(d, w)) with zero same-padding.
template <typename T>
Tensor<T> eca_gate(const ChannelDescriptor<T>& d, const EcaBlock<T>& block);

// z'[:, :, i] = z[:, :, i] * s[i]
template <typename T>
Tensor<T> eca_apply(const Tensor<T>& z, const Tensor<T>& s);

template <typename T>
Tensor<T> eca_forward(const Tensor<T>& z, const EcaBlock<T>& block);

}  // namespace srkocl
