#include "srkocl/ops.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

#include "srkocl/fault.hpp"

namespace srkocl {

namespace fault {
namespace {
std::atomic<Fault> current{Fault::none};
}
void inject(Fault f) { current.store(f); }
Fault active() { return current.load(); }
Fault parse(std::string_view name) {
  if (name == "none") return Fault::none;
  if (name == "conv2d-backward-sign") return Fault::conv2d_backward_sign;
  throw ValueError("unknown fault '" + std::string(name) + "'");
}
}  // namespace fault

namespace ops {

namespace {

template <typename T>
void require_same_shape(const char* op, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shapes " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()) + " differ");
  }
}

template <typename T>
void require_rank(const char* op, const Tensor<T>& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(op) + ": " + what + " must have rank " + std::to_string(rank) + ", got " +
                     shape_string(t.shape()));
  }
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernels, std::size_t stride, std::size_t pad) {
  require_rank("conv2d", input, 3, "input");
  require_rank("conv2d", kernels, 4, "kernels");
  const std::size_t H = input.dim(0), W = input.dim(1), Cin = input.dim(2);
  const std::size_t kh = kernels.dim(0), kw = kernels.dim(1), Cout = kernels.dim(3);
  if (kernels.dim(2) != Cin) {
    throw ShapeError("conv2d: kernel input channels " + std::to_string(kernels.dim(2)) +
                     " != input channels " + std::to_string(Cin));
  }
  if (stride == 0) throw ShapeError("conv2d: stride must be positive");
  if (kh > H + 2 * pad || kw > W + 2 * pad) {
    throw ShapeError("conv2d: kernel " + shape_string(kernels.shape()) + " exceeds padded input " +
                     shape_string(input.shape()));
  }
  detail::check_finite<T>("conv2d", input.values());
  const std::size_t OH = (H + 2 * pad - kh) / stride + 1;
  const std::size_t OW = (W + 2 * pad - kw) / stride + 1;

  std::vector<T> out(OH * OW * Cout, T(0));
  const T* in = input.values().data();
  const T* K = kernels.values().data();
  for (std::size_t oy = 0; oy < OH; ++oy) {
    for (std::size_t ox = 0; ox < OW; ++ox) {
      T* orow = out.data() + (oy * OW + ox) * Cout;
      for (std::size_t ky = 0; ky < kh; ++ky) {
        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(pad);
        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
        for (std::size_t kx = 0; kx < kw; ++kx) {
          const std::ptrdiff_t ix =
              static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(pad);
          if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(W)) continue;
          const T* px = in + (static_cast<std::size_t>(iy) * W + static_cast<std::size_t>(ix)) * Cin;
          const T* kbase = K + (ky * kw + kx) * Cin * Cout;
          for (std::size_t ci = 0; ci < Cin; ++ci) {
            const T v = px[ci];
            const T* krow = kbase + ci * Cout;
            for (std::size_t co = 0; co < Cout; ++co) orow[co] += v * krow[co];
          }
        }
      }
    }
  }

  return detail::make_result<T>(
      "conv2d", Shape{OH, OW, Cout}, std::move(out), {input, kernels},
      [input, kernels, H, W, Cin, kh, kw, Cout, OH, OW, stride, pad](std::span<const T> g) {
        T* gin = detail::grad_target(input);
        T* gk = detail::grad_target(kernels);
        const T* in = input.values().data();
        const T* K = kernels.values().data();
        const T sign = fault::active() == fault::Fault::conv2d_backward_sign ? T(-1) : T(1);
        for (std::size_t oy = 0; oy < OH; ++oy) {
          for (std::size_t ox = 0; ox < OW; ++ox) {
            const T* grow = g.data() + (oy * OW + ox) * Cout;
            for (std::size_t ky = 0; ky < kh; ++ky) {
              const std::ptrdiff_t iy =
                  static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(pad);
              if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
              for (std::size_t kx = 0; kx < kw; ++kx) {
                const std::ptrdiff_t ix =
                    static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(pad);
                if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(W)) continue;
                const std::size_t poff = (static_cast<std::size_t>(iy) * W + static_cast<std::size_t>(ix)) * Cin;
                const std::size_t koff = (ky * kw + kx) * Cin * Cout;
                for (std::size_t ci = 0; ci < Cin; ++ci) {
                  const T* krow = K + koff + ci * Cout;
                  if (gk) {
                    const T v = in[poff + ci];
                    T* gkrow = gk + koff + ci * Cout;
                    for (std::size_t co = 0; co < Cout; ++co) gkrow[co] += v * grow[co];
                  }
                  if (gin) {
                    T acc = T(0);
                    for (std::size_t co = 0; co < Cout; ++co) acc += krow[co] * grow[co];
                    gin[poff + ci] += sign * acc;
                  }
                }
              }
            }
          }
        }
      });
}

template <typename T>
Tensor<T> conv1d(const Tensor<T>& input, const Tensor<T>& kernel) {
  require_rank("conv1d", input, 1, "input");
  require_rank("conv1d", kernel, 1, "kernel");
  const std::size_t C = input.numel(), k = kernel.numel();
  if (k % 2 == 0) throw ValueError("conv1d: kernel length must be odd, got " + std::to_string(k));
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(k / 2);
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(C);

  std::vector<T> out(C, T(0));
  const T* x = input.values().data();
  const T* w = kernel.values().data();
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    T acc = T(0);
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(k); ++j) {
      const std::ptrdiff_t src = i + j - half;
      if (src >= 0 && src < n) acc += w[j] * x[src];
    }
    out[static_cast<std::size_t>(i)] = acc;
  }

  return detail::make_result<T>("conv1d", Shape{C}, std::move(out), {input, kernel},
                                [input, kernel, k, half, n](std::span<const T> g) {
                                  T* gx = detail::grad_target(input);
                                  T* gw = detail::grad_target(kernel);
                                  const T* x = input.values().data();
                                  const T* w = kernel.values().data();
                                  for (std::ptrdiff_t i = 0; i < n; ++i) {
                                    const T gi = g[static_cast<std::size_t>(i)];
                                    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(k); ++j) {
                                      const std::ptrdiff_t src = i + j - half;
                                      if (src < 0 || src >= n) continue;
                                      if (gx) gx[src] += w[j] * gi;
                                      if (gw) gw[j] += x[src] * gi;
                                    }
                                  }
                                });
}

template <typename T>
Tensor<T> linear(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias) {
  require_rank("linear", weight, 2, "weight");
  const std::size_t n = weight.dim(0), m = weight.dim(1);
  if (input.numel() != n) {
    throw ShapeError("linear: input length " + std::to_string(input.numel()) + " != weight rows " +
                     std::to_string(n));
  }
  if (bias.numel() != m) {
    throw ShapeError("linear: bias length " + std::to_string(bias.numel()) + " != weight columns " +
                     std::to_string(m));
  }
  std::vector<T> out(bias.values().begin(), bias.values().end());
  const T* x = input.values().data();
  const T* W = weight.values().data();
  for (std::size_t i = 0; i < n; ++i) {
    const T xi = x[i];
    const T* row = W + i * m;
    for (std::size_t j = 0; j < m; ++j) out[j] += xi * row[j];
  }
  return detail::make_result<T>("linear", Shape{m}, std::move(out), {input, weight, bias},
                                [input, weight, bias, n, m](std::span<const T> g) {
                                  T* gx = detail::grad_target(input);
                                  T* gW = detail::grad_target(weight);
                                  T* gb = detail::grad_target(bias);
                                  const T* x = input.values().data();
                                  const T* W = weight.values().data();
                                  for (std::size_t i = 0; i < n; ++i) {
                                    const T* row = W + i * m;
                                    if (gx) {
                                      T acc = T(0);
                                      for (std::size_t j = 0; j < m; ++j) acc += row[j] * g[j];
                                      gx[i] += acc;
                                    }
                                    if (gW) {
                                      T* grow = gW + i * m;
                                      for (std::size_t j = 0; j < m; ++j) grow[j] += x[i] * g[j];
                                    }
                                  }
                                  if (gb) {
                                    for (std::size_t j = 0; j < m; ++j) gb[j] += g[j];
                                  }
                                });
}

template <typename T>
Tensor<T> activation(Activation kind, const Tensor<T>& input) {
  const auto x = input.values();
  std::vector<T> out(x.size());
  if (kind == Activation::relu) {
    // Written so that a NaN input propagates and trips the finiteness check.
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] < T(0) ? T(0) : x[i];
    return detail::make_result<T>("relu", input.shape(), std::move(out), {input},
                                  [input](std::span<const T> g) {
                                    T* gx = detail::grad_target(input);
                                    const auto x = input.values();
                                    for (std::size_t i = 0; i < x.size(); ++i) {
                                      if (x[i] > T(0)) gx[i] += g[i];
                                    }
                                  });
  }
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = T(1) / (T(1) + std::exp(-x[i]));
  auto saved = out;
  return detail::make_result<T>("sigmoid", input.shape(), std::move(out), {input},
                                [input, saved = std::move(saved)](std::span<const T> g) {
                                  T* gx = detail::grad_target(input);
                                  for (std::size_t i = 0; i < saved.size(); ++i) {
                                    gx[i] += g[i] * saved[i] * (T(1) - saved[i]);
                                  }
                                });
}

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& input) {
  require_rank("global_avg_pool", input, 3, "input");
  const std::size_t HW = input.dim(0) * input.dim(1), C = input.dim(2);
  const T inv = T(1) / static_cast<T>(HW);
  std::vector<T> out(C, T(0));
  const T* x = input.values().data();
  for (std::size_t p = 0; p < HW; ++p) {
    for (std::size_t c = 0; c < C; ++c) out[c] += x[p * C + c];
  }
  for (auto& v : out) v *= inv;
  return detail::make_result<T>("global_avg_pool", Shape{C}, std::move(out), {input},
                                [input, HW, C, inv](std::span<const T> g) {
                                  T* gx = detail::grad_target(input);
                                  for (std::size_t p = 0; p < HW; ++p) {
                                    for (std::size_t c = 0; c < C; ++c) gx[p * C + c] += g[c] * inv;
                                  }
                                });
}

template <typename T>
Tensor<T> softmax_cross_entropy(const Tensor<T>& logits, std::size_t target) {
  const auto z = logits.values();
  const std::size_t C = z.size();
  if (target >= C) {
    throw ValueError("softmax_cross_entropy: target " + std::to_string(target) + " out of range for " +
                     std::to_string(C) + " classes");
  }
  detail::check_finite<T>("softmax_cross_entropy", z);
  const T zmax = *std::max_element(z.begin(), z.end());
  std::vector<T> prob(C);
  T total = T(0);
  for (std::size_t c = 0; c < C; ++c) {
    prob[c] = std::exp(z[c] - zmax);
    total += prob[c];
  }
  const T loss = std::log(total) + zmax - z[target];
  for (auto& p : prob) p /= total;
  return detail::make_result<T>("softmax_cross_entropy", Shape{1}, std::vector<T>{loss}, {logits},
                                [logits, target, prob = std::move(prob)](std::span<const T> g) {
                                  T* gz = detail::grad_target(logits);
                                  for (std::size_t c = 0; c < prob.size(); ++c) {
                                    gz[c] += g[0] * (prob[c] - (c == target ? T(1) : T(0)));
                                  }
                                });
}

template <typename T>
Tensor<T> scale_channels(const Tensor<T>& z, const Tensor<T>& s) {
  require_rank("scale_channels", z, 3, "feature map");
  const std::size_t C = z.dim(2), HW = z.dim(0) * z.dim(1);
  if (s.numel() != C) {
    throw ShapeError("scale_channels: gate length " + std::to_string(s.numel()) + " != channels " +
                     std::to_string(C));
  }
  std::vector<T> out(z.numel());
  const T* x = z.values().data();
  const T* gate = s.values().data();
  for (std::size_t p = 0; p < HW; ++p) {
    for (std::size_t c = 0; c < C; ++c) out[p * C + c] = x[p * C + c] * gate[c];
  }
  return detail::make_result<T>("scale_channels", z.shape(), std::move(out), {z, s},
                                [z, s, HW, C](std::span<const T> g) {
                                  T* gz = detail::grad_target(z);
                                  T* gs = detail::grad_target(s);
                                  const T* x = z.values().data();
                                  const T* gate = s.values().data();
                                  for (std::size_t p = 0; p < HW; ++p) {
                                    for (std::size_t c = 0; c < C; ++c) {
                                      const std::size_t i = p * C + c;
                                      if (gz) gz[i] += g[i] * gate[c];
                                      if (gs) gs[c] += g[i] * x[i];
                                    }
                                  }
                                });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape("add", a, b);
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
  return detail::make_result<T>("add", a.shape(), std::move(out), {a, b}, [a, b](std::span<const T> g) {
    if (T* ga = detail::grad_target(a)) {
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (T* gb = detail::grad_target(b)) {
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
    }
  });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape("sub", a, b);
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] - b.values()[i];
  return detail::make_result<T>("sub", a.shape(), std::move(out), {a, b}, [a, b](std::span<const T> g) {
    if (T* ga = detail::grad_target(a)) {
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (T* gb = detail::grad_target(b)) {
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape("mul", a, b);
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
  return detail::make_result<T>("mul", a.shape(), std::move(out), {a, b}, [a, b](std::span<const T> g) {
    if (T* ga = detail::grad_target(a)) {
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b.values()[i];
    }
    if (T* gb = detail::grad_target(b)) {
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a.values()[i];
    }
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * factor;
  return detail::make_result<T>("scale", a.shape(), std::move(out), {a}, [a, factor](std::span<const T> g) {
    T* ga = detail::grad_target(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * factor;
  });
}

template <typename T>
Tensor<T> square(const Tensor<T>& a) {
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * a.values()[i];
  return detail::make_result<T>("square", a.shape(), std::move(out), {a}, [a](std::span<const T> g) {
    T* ga = detail::grad_target(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += T(2) * a.values()[i] * g[i];
  });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  T total = T(0);
  for (T v : a.values()) total += v;
  return detail::make_result<T>("sum", Shape{1}, std::vector<T>{total}, {a}, [a](std::span<const T> g) {
    T* ga = detail::grad_target(a);
    for (std::size_t i = 0; i < a.numel(); ++i) ga[i] += g[0];
  });
}

template <typename T>
Tensor<T> mean(std::span<const Tensor<T>> scalars) {
  if (scalars.empty()) throw ShapeError("mean: empty input");
  T total = T(0);
  for (const auto& s : scalars) total += s.item();
  const T inv = T(1) / static_cast<T>(scalars.size());
  std::vector<Tensor<T>> inputs(scalars.begin(), scalars.end());
  auto captured = inputs;
  return detail::make_result<T>("mean", Shape{1}, std::vector<T>{total * inv}, std::move(inputs),
                                [captured = std::move(captured), inv](std::span<const T> g) {
                                  for (const auto& s : captured) {
                                    if (T* gs = detail::grad_target(s)) gs[0] += g[0] * inv;
                                  }
                                });
}

template <typename T>
std::size_t argmax(const Tensor<T>& a) {
  const auto v = a.values();
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

#define SRKOCL_INSTANTIATE_OPS(T)                                                    \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, std::size_t, std::size_t); \
  template Tensor<T> conv1d(const Tensor<T>&, const Tensor<T>&);                      \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);    \
  template Tensor<T> activation(Activation, const Tensor<T>&);                        \
  template Tensor<T> global_avg_pool(const Tensor<T>&);                               \
  template Tensor<T> softmax_cross_entropy(const Tensor<T>&, std::size_t);            \
  template Tensor<T> scale_channels(const Tensor<T>&, const Tensor<T>&);              \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                         \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                         \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                         \
  template Tensor<T> scale(const Tensor<T>&, T);                                      \
  template Tensor<T> square(const Tensor<T>&);                                        \
  template Tensor<T> sum(const Tensor<T>&);                                           \
  template Tensor<T> mean(std::span<const Tensor<T>>);                                \
  template std::size_t argmax(const Tensor<T>&);

SRKOCL_INSTANTIATE_OPS(float)
SRKOCL_INSTANTIATE_OPS(double)

#undef SRKOCL_INSTANTIATE_OPS

}  // namespace ops
}  // namespace srkocl
