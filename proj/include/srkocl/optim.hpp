#pragma once

#include <span>
#include <vector>

#include "srkocl/tensor.hpp"

namespace srkocl {

struct SgdConfig {
  double learning_rate = 0.1;
  Precision precision = Precision::f64;
  // Both default off; plain SGD is the reference optimizer.
  double momentum = 0.0;
  double weight_decay = 0.0;
  // Rescales the whole gradient when its global L2 norm exceeds this value;
  // zero disables clipping.
  double grad_clip_norm = 0.0;

  void validate() const;
  bool operator==(const SgdConfig&) const = default;
};

// theta <- theta - lr * grad for every parameter, then clears the grads.
// Throws if a parameter has no gradient buffer or momentum is requested.
template <typename T>
void sgd_step(std::span<Tensor<T>> params, const SgdConfig& cfg);

// Stateful variant that also supports momentum and weight decay.
template <typename T>
class Sgd {
 public:
  explicit Sgd(SgdConfig cfg);

  void step(std::span<Tensor<T>> params);
  const SgdConfig& config() const { return cfg_; }

 private:
  SgdConfig cfg_;
  std::vector<std::vector<T>> velocity_;
};

extern template void sgd_step(std::span<Tensor<float>>, const SgdConfig&);
extern template void sgd_step(std::span<Tensor<double>>, const SgdConfig&);
extern template class Sgd<float>;
extern template class Sgd<double>;

}  // namespace srkocl
