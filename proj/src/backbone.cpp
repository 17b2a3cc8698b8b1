#include "srkocl/backbone.hpp"

#include <cmath>
#include <map>

#include "srkocl/binio.hpp"
#include "srkocl/ops.hpp"
#include "srkocl/random.hpp"

namespace srkocl {

void ModelSpec::validate() const {
  if (nf == 0) throw ValueError("model: nf must be positive");
  if (num_stages == 0 || num_stages > 4) throw ValueError("model: num_stages must be in 1..4");
  if (num_tasks == 0 || classes_per_task == 0) throw ValueError("model: task and class counts must be positive");
  if (input_shape.size() != 3 || numel(input_shape) == 0) throw ShapeError("model: input shape must be HxWxC");
  const std::size_t min_extent = std::size_t{1} << (num_stages - 1);
  if (input_shape[0] < min_extent || input_shape[1] < min_extent) {
    throw ShapeError("model: input " + shape_string(input_shape) + " is too small for " + std::to_string(num_stages) +
                     " stages (need at least " + std::to_string(min_extent) + "x" + std::to_string(min_extent) + ")");
  }
}

namespace {

template <typename T>
Tensor<T> uniform_tensor(Shape shape, double bound, Rng& rng) {
  std::vector<T> v(numel(shape));
  for (auto& x : v) x = static_cast<T>(rng.uniform(-bound, bound));
  return Tensor<T>(std::move(shape), std::move(v), true);
}

template <typename T>
ConvLayer<T> make_conv(std::string name, std::size_t k, std::size_t cin, std::size_t cout, std::size_t stride,
                       const ModelSpec& spec, Rng& weights, Rng& attention) {
  ConvLayer<T> layer;
  layer.name = std::move(name);
  // He-uniform: keeps the second moment of activations roughly constant
  // through conv + relu.
  layer.kernels = uniform_tensor<T>({k, k, cin, cout}, std::sqrt(6.0 / static_cast<double>(k * k * cin)), weights);
  layer.stride = stride;
  layer.pad = k / 2;
  if (spec.eca_enabled) layer.eca = EcaBlock<T>::create(cout, spec.eca, attention);
  return layer;
}

template <typename T>
Tensor<T> conv_unit(const ConvLayer<T>& layer, const Tensor<T>& x, const ForwardOptions& options) {
  Tensor<T> y = ops::conv2d(x, layer.kernels, layer.stride, layer.pad);
  if (layer.eca && !options.unit_eca_gates) y = eca_forward(y, *layer.eca);
  return y;
}

template <typename T>
ConvLayer<T> frozen_copy(const ConvLayer<T>& layer) {
  ConvLayer<T> out = layer;
  out.kernels = layer.kernels.detach();
  if (layer.eca) out.eca->weights = layer.eca->weights.detach();
  return out;
}

constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace

template <typename T>
Model<T> Model<T>::build(const ModelSpec& spec) {
  spec.validate();
  Model model;
  model.spec_ = spec;
  // Separate streams so conv/head weights do not depend on whether attention
  // blocks exist.
  Rng weights(derive_seed(spec.seed, 0));
  Rng attention(derive_seed(spec.seed, 1));

  const std::size_t in_channels = spec.input_shape[2];
  model.stem_ = make_conv<T>("stem", 3, in_channels, spec.nf, 1, spec, weights, attention);
  std::size_t width = spec.nf;
  for (std::size_t s = 0; s < spec.num_stages; ++s) {
    const std::size_t out_width = spec.nf << s;
    const std::size_t stride = s == 0 ? 1 : 2;
    std::vector<BasicBlock<T>> blocks;
    for (std::size_t b = 0; b < 2; ++b) {
      const std::string prefix = "stage" + std::to_string(s + 1) + ".block" + std::to_string(b);
      const std::size_t block_stride = b == 0 ? stride : 1;
      BasicBlock<T> block;
      block.conv1 = make_conv<T>(prefix + ".conv1", 3, width, out_width, block_stride, spec, weights, attention);
      block.conv2 = make_conv<T>(prefix + ".conv2", 3, out_width, out_width, 1, spec, weights, attention);
      if (block_stride != 1 || width != out_width) {
        block.shortcut = make_conv<T>(prefix + ".shortcut", 1, width, out_width, block_stride, spec, weights, attention);
      }
      blocks.push_back(std::move(block));
      width = out_width;
    }
    model.stages_.push_back(std::move(blocks));
  }
  const double bound = 1.0 / std::sqrt(static_cast<double>(width));
  for (std::size_t t = 0; t < spec.num_tasks; ++t) {
    LinearHead<T> head;
    head.weight = uniform_tensor<T>({width, spec.classes_per_task}, bound, weights);
    head.bias = Tensor<T>::zeros({spec.classes_per_task}, true);
    model.heads_.push_back(std::move(head));
  }
  return model;
}

template <typename T>
ForwardResult<T> Model<T>::forward(const Tensor<T>& x, std::size_t task_id, ForwardOptions options) const {
  if (task_id >= heads_.size()) {
    throw ValueError("forward: no head for task " + std::to_string(task_id) + " (model has " +
                     std::to_string(heads_.size()) + ")");
  }
  if (x.shape() != spec_.input_shape) {
    throw ShapeError("forward: input " + shape_string(x.shape()) + " does not match model input " +
                     shape_string(spec_.input_shape));
  }
  ForwardResult<T> result;
  Tensor<T> h = ops::relu(conv_unit(stem_, x, options));
  for (const auto& stage : stages_) {
    for (const auto& block : stage) {
      Tensor<T> out = ops::relu(conv_unit(block.conv1, h, options));
      out = conv_unit(block.conv2, out, options);
      const Tensor<T> skip = block.shortcut ? conv_unit(*block.shortcut, h, options) : h;
      h = ops::relu(ops::add(out, skip));
    }
    result.stage_features.push_back(h);
  }
  const auto& head = heads_[task_id];
  result.logits = ops::linear(ops::global_avg_pool(h), head.weight, head.bias);
  return result;
}

template <typename T>
Model<T> Model<T>::snapshot() const {
  Model out;
  out.spec_ = spec_;
  out.frozen_ = true;
  out.stem_ = frozen_copy(stem_);
  for (const auto& stage : stages_) {
    std::vector<BasicBlock<T>> blocks;
    for (const auto& block : stage) {
      BasicBlock<T> copy;
      copy.conv1 = frozen_copy(block.conv1);
      copy.conv2 = frozen_copy(block.conv2);
      if (block.shortcut) copy.shortcut = frozen_copy(*block.shortcut);
      blocks.push_back(std::move(copy));
    }
    out.stages_.push_back(std::move(blocks));
  }
  for (const auto& head : heads_) out.heads_.push_back(LinearHead<T>{head.weight.detach(), head.bias.detach()});
  return out;
}

template <typename T>
std::vector<const ConvLayer<T>*> Model<T>::conv_layers() const {
  std::vector<const ConvLayer<T>*> layers{&stem_};
  for (const auto& stage : stages_) {
    for (const auto& block : stage) {
      layers.push_back(&block.conv1);
      layers.push_back(&block.conv2);
      if (block.shortcut) layers.push_back(&*block.shortcut);
    }
  }
  return layers;
}

template <typename T>
std::size_t Model<T>::eca_count() const {
  std::size_t n = 0;
  for (const auto* layer : conv_layers()) n += layer->eca ? 1 : 0;
  return n;
}

template <typename T>
std::vector<std::size_t> Model<T>::stage_widths() const {
  std::vector<std::size_t> widths;
  for (const auto& stage : stages_) widths.push_back(stage.back().conv2.out_channels());
  return widths;
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>>> Model<T>::named_parameters() const {
  std::vector<std::pair<std::string, Tensor<T>>> named;
  for (const auto* layer : conv_layers()) {
    named.emplace_back(layer->name + ".weight", layer->kernels);
    if (layer->eca) named.emplace_back(layer->name + ".eca.weight", layer->eca->weights);
  }
  for (std::size_t t = 0; t < heads_.size(); ++t) {
    named.emplace_back("head" + std::to_string(t) + ".weight", heads_[t].weight);
    named.emplace_back("head" + std::to_string(t) + ".bias", heads_[t].bias);
  }
  return named;
}

template <typename T>
std::vector<Tensor<T>> Model<T>::parameters() const {
  std::vector<Tensor<T>> params;
  for (auto& [name, t] : named_parameters()) params.push_back(t);
  return params;
}

template <typename T>
std::size_t Model<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters()) n += p.numel();
  return n;
}

template <typename T>
void Model<T>::zero_grad() {
  for (auto& p : parameters()) p.zero_grad();
}

template <typename T>
void Model<T>::save(std::ostream& os) const {
  binio::write_magic(os, "SRKC");
  binio::write_u32(os, kCheckpointVersion);
  binio::write_u32(os, sizeof(T));
  binio::write_u32(os, static_cast<std::uint32_t>(spec_.nf));
  binio::write_u32(os, static_cast<std::uint32_t>(spec_.num_stages));
  binio::write_u32(os, static_cast<std::uint32_t>(spec_.num_tasks));
  binio::write_u32(os, static_cast<std::uint32_t>(spec_.classes_per_task));
  for (auto extent : spec_.input_shape) binio::write_u32(os, static_cast<std::uint32_t>(extent));
  binio::write_u32(os, spec_.eca_enabled ? 1 : 0);
  binio::write_real(os, spec_.eca.lambda);
  binio::write_real(os, spec_.eca.b);
  binio::write_u64(os, spec_.seed);
  binio::write_u32(os, frozen_ ? 1 : 0);
  const auto named = named_parameters();
  binio::write_u32(os, static_cast<std::uint32_t>(named.size()));
  for (const auto& [name, t] : named) {
    binio::write_string(os, name);
    binio::write_u32(os, static_cast<std::uint32_t>(t.rank()));
    for (auto extent : t.shape()) binio::write_u32(os, static_cast<std::uint32_t>(extent));
    for (T v : t.values()) binio::write_real(os, v);
  }
}

template <typename T>
Model<T> Model<T>::load(std::istream& is) {
  binio::expect_magic(is, "SRKC", "checkpoint");
  const auto version = binio::read_u32(is, "checkpoint version");
  if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
  if (binio::read_u32(is, "checkpoint precision") != sizeof(T)) {
    throw FormatError("checkpoint precision does not match the requested precision");
  }
  ModelSpec spec;
  spec.nf = binio::read_u32(is, "checkpoint header");
  spec.num_stages = binio::read_u32(is, "checkpoint header");
  spec.num_tasks = binio::read_u32(is, "checkpoint header");
  spec.classes_per_task = binio::read_u32(is, "checkpoint header");
  spec.input_shape.resize(3);
  for (auto& extent : spec.input_shape) extent = binio::read_u32(is, "checkpoint header");
  spec.eca_enabled = binio::read_u32(is, "checkpoint header") != 0;
  spec.eca.lambda = binio::read_real<double>(is, "checkpoint header");
  spec.eca.b = binio::read_real<double>(is, "checkpoint header");
  spec.seed = binio::read_u64(is, "checkpoint header");
  const bool frozen = binio::read_u32(is, "checkpoint header") != 0;

  Model model = build(spec);
  std::map<std::string, Tensor<T>> by_name;
  for (auto& [name, t] : model.named_parameters()) by_name.emplace(name, t);
  const auto count = binio::read_u32(is, "checkpoint tensor count");
  if (count != by_name.size()) throw FormatError("checkpoint tensor count does not match the architecture");
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = binio::read_string(is, "tensor name");
    const auto it = by_name.find(name);
    if (it == by_name.end()) throw FormatError("checkpoint has unknown tensor '" + name + "'");
    const auto rank = binio::read_u32(is, "tensor rank");
    Shape shape(rank);
    for (auto& extent : shape) extent = binio::read_u32(is, "tensor shape");
    if (shape != it->second.shape()) throw FormatError("checkpoint tensor '" + name + "' has the wrong shape");
    auto values = it->second.mutable_values();
    for (auto& v : values) v = binio::read_real<T>(is, "tensor values");
  }
  return frozen ? model.snapshot() : model;
}

template class Model<float>;
template class Model<double>;

}  // namespace srkocl
