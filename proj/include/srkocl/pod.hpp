#pragma once

#include <vector>

#include "srkocl/tensor.hpp"

namespace srkocl {

// Feature maps tapped at the end of each backbone stage, in stage order.
template <typename T>
using StageFeatures = std::vector<Tensor<T>>;

// Pooled embedding of an H x W x C map, shape (H + W) x C. Row h < H is the
// mean over w of z[h, w, :]; row H + w is the mean over h of z[h, w, :].
template <typename T>
Tensor<T> pod_embed(const Tensor<T>& z);

// (1 / L) * sum_l ||embed(current_l) - embed(previous_l)||^2, squared
// Frobenius norm. previous is treated as a constant.
template <typename T>
Tensor<T> pod_loss(const StageFeatures<T>& current, const StageFeatures<T>& previous);

}  // namespace srkocl
