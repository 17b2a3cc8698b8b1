#include "srkocl/optim.hpp"

#include <cmath>
#include <string>

namespace srkocl {

void SgdConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ValueError("sgd: learning rate must be positive, got " + std::to_string(learning_rate));
  }
  if (momentum < 0.0 || momentum >= 1.0) throw ValueError("sgd: momentum must lie in [0, 1)");
  if (weight_decay < 0.0) throw ValueError("sgd: weight decay must be non-negative");
  if (!(grad_clip_norm >= 0.0) || !std::isfinite(grad_clip_norm)) {
    throw ValueError("sgd: gradient clip norm must be non-negative");
  }
}

namespace {

template <typename T>
void check_params(std::span<Tensor<T>> params, const SgdConfig& cfg) {
  if (cfg.precision != precision_of<T>()) {
    throw ValueError("sgd: configured precision " + std::string(to_string(cfg.precision)) +
                     " does not match parameter precision " + std::string(to_string(precision_of<T>())));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].has_grad()) throw ValueError("sgd: parameter " + std::to_string(i) + " has no gradient");
  }
}

}  // namespace

template <typename T>
void sgd_step(std::span<Tensor<T>> params, const SgdConfig& cfg) {
  if (cfg.momentum != 0.0) throw ValueError("sgd_step is stateless; use Sgd for momentum");
  Sgd<T> opt(cfg);
  opt.step(params);
}

template <typename T>
Sgd<T>::Sgd(SgdConfig cfg) : cfg_(cfg) {
  if (cfg_.learning_rate != 0.0) cfg_.validate();
}

template <typename T>
void Sgd<T>::step(std::span<Tensor<T>> params) {
  check_params(params, cfg_);
  const T lr = static_cast<T>(cfg_.learning_rate);
  const T decay = static_cast<T>(cfg_.weight_decay);
  const T mu = static_cast<T>(cfg_.momentum);
  if (mu != T(0) && velocity_.size() != params.size()) {
    velocity_.assign(params.size(), {});
    for (std::size_t i = 0; i < params.size(); ++i) velocity_[i].assign(params[i].numel(), T(0));
  }
  T clip = T(1);
  if (cfg_.grad_clip_norm > 0.0) {
    double sq = 0.0;
    for (const auto& p : params) {
      for (T g : p.grad()) sq += static_cast<double>(g) * static_cast<double>(g);
    }
    const double norm = std::sqrt(sq);
    if (norm > cfg_.grad_clip_norm) clip = static_cast<T>(cfg_.grad_clip_norm / norm);
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto theta = params[i].mutable_values();
    const auto g = params[i].grad();
    for (std::size_t j = 0; j < theta.size(); ++j) {
      T step = clip * g[j];
      if (decay != T(0)) step += decay * theta[j];
      if (mu != T(0)) {
        velocity_[i][j] = mu * velocity_[i][j] + step;
        step = velocity_[i][j];
      }
      theta[j] -= lr * step;
    }
    params[i].clear_grad();
  }
}

template void sgd_step(std::span<Tensor<float>>, const SgdConfig&);
template void sgd_step(std::span<Tensor<double>>, const SgdConfig&);
template class Sgd<float>;
template class Sgd<double>;

}  // namespace srkocl
