#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "srkocl/tensor.hpp"

namespace srkocl {

// |analytic - numeric| / max(|analytic|, |numeric|, kGradCheckFloor).
// The floor keeps near-zero gradients from turning rounding noise in the
// central difference into a large relative error.
inline constexpr double kGradCheckFloor = 1e-3;
double relative_error(double analytic, double numeric);

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
};

// Compares backward() gradients of f against central differences
// (f(x + eps) - f(x - eps)) / (2 eps) for every coordinate of x.
template <typename T>
double grad_check(const std::function<Tensor<T>(const Tensor<T>&)>& f, Tensor<T> x, double eps);

// Same, over a parameter set that f reads implicitly. A sample_fraction below
// one checks a seeded random subset of coordinates (at least one per tensor).
template <typename T>
GradCheckReport grad_check_params(const std::function<Tensor<T>()>& f, std::span<Tensor<T>> params, double eps,
                                  double sample_fraction = 1.0, std::uint64_t seed = 0);

extern template double grad_check(const std::function<Tensor<float>(const Tensor<float>&)>&, Tensor<float>,
                                  double);
extern template double grad_check(const std::function<Tensor<double>(const Tensor<double>&)>&, Tensor<double>,
                                  double);
extern template GradCheckReport grad_check_params(const std::function<Tensor<float>()>&, std::span<Tensor<float>>,
                                                  double, double, std::uint64_t);
extern template GradCheckReport grad_check_params(const std::function<Tensor<double>()>&,
                                                  std::span<Tensor<double>>, double, double, std::uint64_t);

}  // namespace srkocl
