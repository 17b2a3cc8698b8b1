#include "srkocl/eca.hpp"

#include <cmath>
#include <string>

#include "srkocl/ops.hpp"

namespace srkocl {

std::size_t kernel_size_rule(std::size_t channels, double lambda, double b) {
  if (channels == 0) throw ValueError("kernel_size_rule: channel count must be positive");
  if (!(lambda > 0.0)) throw ValueError("kernel_size_rule: lambda must be positive");
  const double x = std::abs(std::log2(static_cast<double>(channels)) / lambda + b / lambda);
  // Largest odd integer <= x (or 1 when x < 1), and the odd integer above it.
  double lo = 2.0 * std::floor((x - 1.0) / 2.0) + 1.0;
  if (lo < 1.0) lo = 1.0;
  const double hi = lo + 2.0;
  double k = (x - lo <= hi - x) ? lo : hi;
  const double cap = static_cast<double>(channels % 2 == 1 ? channels : channels - 1);
  if (k > cap) k = cap;
  return static_cast<std::size_t>(k);
}

template <typename T>
EcaBlock<T> EcaBlock<T>::create(std::size_t channels, EcaParams params, Rng& rng, double init_scale) {
  EcaBlock block;
  block.channels = channels;
  block.params = params;
  block.kernel_size = kernel_size_rule(channels, params.lambda, params.b);
  std::vector<T> w(block.kernel_size);
  for (auto& v : w) v = static_cast<T>(rng.uniform(-init_scale, init_scale));
  block.weights = Tensor<T>(Shape{block.kernel_size}, std::move(w), true);
  return block;
}

template <typename T>
ChannelDescriptor<T> channel_descriptor(const Tensor<T>& z) {
  return ChannelDescriptor<T>{ops::global_avg_pool(z)};
}

template <typename T>
Tensor<T> eca_gate(const ChannelDescriptor<T>& d, const EcaBlock<T>& block) {
  if (d.channels() != block.channels) {
    throw ShapeError("eca_gate: descriptor length " + std::to_string(d.channels()) + " != block channels " +
                     std::to_string(block.channels));
  }
  return ops::sigmoid(ops::conv1d(d.values, block.weights));
}

template <typename T>
Tensor<T> eca_apply(const Tensor<T>& z, const Tensor<T>& s) {
  return ops::scale_channels(z, s);
}

template <typename T>
Tensor<T> eca_forward(const Tensor<T>& z, const EcaBlock<T>& block) {
  return eca_apply(z, eca_gate(channel_descriptor(z), block));
}

template struct EcaBlock<float>;
template struct EcaBlock<double>;
template ChannelDescriptor<float> channel_descriptor(const Tensor<float>&);
template ChannelDescriptor<double> channel_descriptor(const Tensor<double>&);
template Tensor<float> eca_gate(const ChannelDescriptor<float>&, const EcaBlock<float>&);
template Tensor<double> eca_gate(const ChannelDescriptor<double>&, const EcaBlock<double>&);
template Tensor<float> eca_apply(const Tensor<float>&, const Tensor<float>&);
template Tensor<double> eca_apply(const Tensor<double>&, const Tensor<double>&);
template Tensor<float> eca_forward(const Tensor<float>&, const EcaBlock<float>&);
template Tensor<double> eca_forward(const Tensor<double>&, const EcaBlock<double>&);

}  // namespace srkocl
