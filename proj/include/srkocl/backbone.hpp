#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "srkocl/eca.hpp"
#include "srkocl/pod.hpp"
#include "srkocl/tensor.hpp"

namespace srkocl {

// Slim ResNet18: 3x3 stem, then num_stages residual stages of two basic
// blocks with widths nf, 2nf, 4nf, 8nf (strides 1, 2, 2, 2), global average
// pooling and one linear head per task.
struct ModelSpec {
  std::size_t nf = 20;
  std::size_t num_stages = 4;
  std::size_t num_tasks = 1;
  std::size_t classes_per_task = 2;
  Shape input_shape = {32, 32, 3};
  bool eca_enabled = true;
  EcaParams eca;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const ModelSpec&) const = default;
};

template <typename T>
struct ConvLayer {
  std::string name;
  Tensor<T> kernels;  // kh x kw x Cin x Cout
  std::size_t stride = 1;
  std::size_t pad = 1;
  std::optional<EcaBlock<T>> eca;

  std::size_t out_channels() const { return kernels.dim(3); }
};

template <typename T>
struct BasicBlock {
  ConvLayer<T> conv1;
  ConvLayer<T> conv2;
  std::optional<ConvLayer<T>> shortcut;  // 1x1 projection when shape changes
};

template <typename T>
struct LinearHead {
  Tensor<T> weight;  // features x classes
  Tensor<T> bias;
};

template <typename T>
struct ForwardResult {
  Tensor<T> logits;
  StageFeatures<T> stage_features;
};

struct ForwardOptions {
  // Treat every attention gate as exactly 1 (the block becomes the identity).
  bool unit_eca_gates = false;
};

template <typename T>
class Model {
 public:
  static Model build(const ModelSpec& spec);

  ForwardResult<T> forward(const Tensor<T>& x, std::size_t task_id, ForwardOptions options = {}) const;

  // Deep copy with gradients disabled on every tensor.
  Model snapshot() const;

  const ModelSpec& spec() const { return spec_; }
  bool frozen() const { return frozen_; }

  // Handles share buffers with the model.
  std::vector<Tensor<T>> parameters() const;
  std::vector<std::pair<std::string, Tensor<T>>> named_parameters() const;
  std::size_t parameter_count() const;

  std::vector<const ConvLayer<T>*> conv_layers() const;
  std::size_t eca_count() const;
  std::vector<std::size_t> stage_widths() const;
  const LinearHead<T>& head(std::size_t task_id) const { return heads_.at(task_id); }

  void zero_grad();

  // Versioned binary checkpoint; load() reproduces the model bit for bit.
  void save(std::ostream& os) const;
  static Model load(std::istream& is);

 private:
  ModelSpec spec_;
  bool frozen_ = false;
  ConvLayer<T> stem_;
  std::vector<std::vector<BasicBlock<T>>> stages_;
  std::vector<LinearHead<T>> heads_;
};

template <typename T>
Model<T> build_model(const ModelSpec& spec) {
  return Model<T>::build(spec);
}

template <typename T>
Model<T> snapshot(const Model<T>& model) {
  return model.snapshot();
}

extern template class Model<float>;
extern template class Model<double>;

}  // namespace srkocl
