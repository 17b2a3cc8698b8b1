#include "srkocl/pod.hpp"

#include <string>

#include "srkocl/ops.hpp"

namespace srkocl {

template <typename T>
Tensor<T> pod_embed(const Tensor<T>& z) {
  if (z.rank() != 3) throw ShapeError("pod_embed: expected an HxWxC map, got " + shape_string(z.shape()));
  const std::size_t H = z.dim(0), W = z.dim(1), C = z.dim(2);
  const T inv_w = T(1) / static_cast<T>(W);
  const T inv_h = T(1) / static_cast<T>(H);
  std::vector<T> out((H + W) * C, T(0));
  const T* x = z.values().data();
  for (std::size_t h = 0; h < H; ++h) {
    for (std::size_t w = 0; w < W; ++w) {
      const T* px = x + (h * W + w) * C;
      T* row_h = out.data() + h * C;
      T* row_w = out.data() + (H + w) * C;
      for (std::size_t c = 0; c < C; ++c) {
        row_h[c] += px[c];
        row_w[c] += px[c];
      }
    }
  }
  for (std::size_t h = 0; h < H; ++h) {
    for (std::size_t c = 0; c < C; ++c) out[h * C + c] /= static_cast<T>(W);
  }
  for (std::size_t w = 0; w < W; ++w) {
    for (std::size_t c = 0; c < C; ++c) out[(H + w) * C + c] /= static_cast<T>(H);
  }
  return detail::make_result<T>("pod_embed", Shape{H + W, C}, std::move(out), {z},
                                [z, H, W, C, inv_w, inv_h](std::span<const T> g) {
                                  T* gz = detail::grad_target(z);
                                  for (std::size_t h = 0; h < H; ++h) {
                                    for (std::size_t w = 0; w < W; ++w) {
                                      T* gp = gz + (h * W + w) * C;
                                      const T* gh = g.data() + h * C;
                                      const T* gw = g.data() + (H + w) * C;
                                      for (std::size_t c = 0; c < C; ++c) gp[c] += gh[c] * inv_w + gw[c] * inv_h;
                                    }
                                  }
                                });
}

template <typename T>
Tensor<T> pod_loss(const StageFeatures<T>& current, const StageFeatures<T>& previous) {
  if (current.size() != previous.size()) {
    throw ShapeError("pod_loss: stage counts differ (" + std::to_string(current.size()) + " vs " +
                     std::to_string(previous.size()) + ")");
  }
  if (current.empty()) throw ShapeError("pod_loss: no stages");
  std::vector<Tensor<T>> per_stage;
  per_stage.reserve(current.size());
  for (std::size_t l = 0; l < current.size(); ++l) {
    if (current[l].shape() != previous[l].shape()) {
      throw ShapeError("pod_loss: stage " + std::to_string(l) + " shapes " + shape_string(current[l].shape()) +
                       " and " + shape_string(previous[l].shape()) + " differ");
    }
    Tensor<T> frozen;
    {
      NoGradGuard guard;
      frozen = pod_embed(previous[l]);
    }
    per_stage.push_back(ops::sum(ops::square(ops::sub(pod_embed(current[l]), frozen))));
  }
  return ops::mean<T>(per_stage);
}

template Tensor<float> pod_embed(const Tensor<float>&);
template Tensor<double> pod_embed(const Tensor<double>&);
template Tensor<float> pod_loss(const StageFeatures<float>&, const StageFeatures<float>&);
template Tensor<double> pod_loss(const StageFeatures<double>&, const StageFeatures<double>&);

}  // namespace srkocl
