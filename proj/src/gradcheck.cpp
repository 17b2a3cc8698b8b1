#include "srkocl/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "srkocl/random.hpp"

namespace srkocl {

double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), kGradCheckFloor});
  return std::abs(analytic - numeric) / scale;
}

namespace {

template <typename T>
double evaluate(const std::function<Tensor<T>()>& f) {
  NoGradGuard guard;
  const Tensor<T> y = f();
  if (y.numel() != 1) throw ShapeError("grad_check: objective must be scalar");
  const double v = static_cast<double>(y.item());
  if (!std::isfinite(v)) throw NumericError("grad_check: objective is not finite");
  return v;
}

}  // namespace

template <typename T>
GradCheckReport grad_check_params(const std::function<Tensor<T>()>& f, std::span<Tensor<T>> params, double eps,
                                  double sample_fraction, std::uint64_t seed) {
  if (!(eps > 0.0)) throw ValueError("grad_check: eps must be positive");
  for (auto& p : params) {
    p.set_requires_grad(true);
    p.zero_grad();
  }
  {
    const Tensor<T> y = f();
    if (!std::isfinite(static_cast<double>(y.item()))) throw NumericError("grad_check: objective is not finite");
    backward(y);
  }
  std::vector<std::vector<T>> analytic;
  analytic.reserve(params.size());
  for (auto& p : params) {
    analytic.emplace_back(p.grad().begin(), p.grad().end());
    p.clear_grad();
  }

  Rng rng(seed);
  GradCheckReport report;
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto values = params[t].mutable_values();
    std::vector<std::size_t> coords(values.size());
    for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    if (sample_fraction < 1.0) {
      rng.shuffle(coords);
      const auto keep = std::max<std::size_t>(1, static_cast<std::size_t>(sample_fraction * coords.size()));
      coords.resize(std::min(keep, coords.size()));
      std::sort(coords.begin(), coords.end());
    }
    for (std::size_t i : coords) {
      const T original = values[i];
      values[i] = static_cast<T>(original + eps);
      const double plus = evaluate(f);
      values[i] = static_cast<T>(original - eps);
      const double minus = evaluate(f);
      values[i] = original;
      const double numeric = (plus - minus) / (2.0 * eps);
      report.max_relative_error =
          std::max(report.max_relative_error, relative_error(static_cast<double>(analytic[t][i]), numeric));
      ++report.coordinates;
    }
  }
  return report;
}

template <typename T>
double grad_check(const std::function<Tensor<T>(const Tensor<T>&)>& f, Tensor<T> x, double eps) {
  Tensor<T> params[] = {x};
  return grad_check_params<T>([&] { return f(x); }, params, eps).max_relative_error;
}

template double grad_check(const std::function<Tensor<float>(const Tensor<float>&)>&, Tensor<float>, double);
template double grad_check(const std::function<Tensor<double>(const Tensor<double>&)>&, Tensor<double>, double);
template GradCheckReport grad_check_params(const std::function<Tensor<float>()>&, std::span<Tensor<float>>, double,
                                           double, std::uint64_t);
template GradCheckReport grad_check_params(const std::function<Tensor<double>()>&, std::span<Tensor<double>>,
                                           double, double, std::uint64_t);

}  // namespace srkocl
