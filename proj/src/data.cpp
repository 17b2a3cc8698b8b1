#include "srkocl/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "srkocl/binio.hpp"
#include "srkocl/random.hpp"

namespace srkocl {

DatasetFormat parse_dataset_format(std::string_view name) {
  if (name == "csv_labeled") return DatasetFormat::csv_labeled;
  if (name == "raw_u8_images") return DatasetFormat::raw_u8_images;
  throw ValueError("unknown dataset format '" + std::string(name) + "'");
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  for (auto& f : fields) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
  }
  return fields;
}

Dataset load_csv(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  const std::string where = path.string();
  std::string header;
  if (!std::getline(in, header)) throw FormatError(where + ": missing header row");
  if (header.size() >= 3 && static_cast<unsigned char>(header[0]) == 0xEF) header.erase(0, 3);  // UTF-8 BOM
  const auto columns = split_fields(header);
  if (columns.size() < 2 || columns[0] != "label") {
    throw FormatError(where + ": malformed header (expected 'label,<feature columns>')");
  }
  const std::size_t features = columns.size() - 1;
  Shape shape = options.input_shape.value_or(Shape{1, 1, features});
  if (shape.size() != 3 || numel(shape) != features) {
    throw FormatError(where + ": input shape " + shape_string(shape) + " does not match " +
                      std::to_string(features) + " feature columns");
  }

  Dataset ds;
  ds.input_shape = shape;
  std::string line;
  std::size_t line_no = 1;
  std::size_t max_label = 0;
  float max_value = 0.0f;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_fields(line);
    if (fields.size() != columns.size()) {
      throw FormatError(where + ":" + std::to_string(line_no) + ": expected " + std::to_string(columns.size()) +
                        " fields, got " + std::to_string(fields.size()));
    }
    Example ex;
    long long label = -1;
    const auto [lp, lec] = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), label);
    if (lec != std::errc{} || lp != fields[0].data() + fields[0].size() || label < 0) {
      throw FormatError(where + ":" + std::to_string(line_no) + ": label is not a non-negative integer");
    }
    ex.label = static_cast<std::size_t>(label);
    ex.pixels.reserve(features);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      // std::from_chars for floating point is not available on every supported toolchain.
      const std::string field(fields[i]);
      char* end = nullptr;
      const double v = std::strtod(field.c_str(), &end);
      if (field.empty() || end != field.c_str() + field.size() || !std::isfinite(v)) {
        throw FormatError(where + ":" + std::to_string(line_no) + ": feature " + std::to_string(i - 1) +
                          " is not a finite number");
      }
      if (v < 0.0 || v > 255.0) {
        throw FormatError(where + ":" + std::to_string(line_no) + ": feature " + std::to_string(i - 1) +
                          " outside [0, 255]");
      }
      ex.pixels.push_back(static_cast<float>(v));
      max_value = std::max(max_value, static_cast<float>(v));
    }
    max_label = std::max(max_label, ex.label);
    ds.examples.push_back(std::move(ex));
  }
  ds.num_classes = options.num_classes.value_or(ds.examples.empty() ? 0 : max_label + 1);
  for (const auto& ex : ds.examples) {
    if (ex.label >= ds.num_classes) {
      throw LabelRangeError(where + ": label " + std::to_string(ex.label) + " outside declared range [0, " +
                            std::to_string(ds.num_classes) + ")");
    }
  }
  if (max_value > 1.0f) {
    for (auto& ex : ds.examples) {
      for (auto& p : ex.pixels) p /= 255.0f;
    }
  }
  return ds;
}

Dataset load_raw(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  const std::string where = path.string();
  binio::expect_magic(in, "SRKD", where.c_str());
  const auto count = binio::read_u32(in, "raw header");
  const auto H = binio::read_u32(in, "raw header");
  const auto W = binio::read_u32(in, "raw header");
  const auto C = binio::read_u32(in, "raw header");
  const auto classes = binio::read_u32(in, "raw header");
  if (H == 0 || W == 0 || C == 0) throw FormatError(where + ": malformed header (zero image extent)");
  if (count > 0 && classes == 0) throw FormatError(where + ": malformed header (no classes declared)");

  Dataset ds;
  ds.input_shape = {H, W, C};
  ds.num_classes = classes;
  const std::size_t pixels = static_cast<std::size_t>(H) * W * C;
  std::vector<unsigned char> buffer(pixels);
  ds.examples.reserve(count);
  for (std::uint32_t n = 0; n < count; ++n) {
    const auto label = binio::read_u32(in, "raw record label");
    in.read(reinterpret_cast<char*>(buffer.data()), static_cast<std::streamsize>(pixels));
    if (in.gcount() != static_cast<std::streamsize>(pixels)) {
      throw TruncatedError(where + ": payload truncated in record " + std::to_string(n) + " of " +
                           std::to_string(count));
    }
    if (label >= classes) {
      throw LabelRangeError(where + ": record " + std::to_string(n) + " label " + std::to_string(label) +
                            " outside declared range [0, " + std::to_string(classes) + ")");
    }
    Example ex;
    ex.label = label;
    ex.pixels.resize(pixels);
    for (std::size_t i = 0; i < pixels; ++i) ex.pixels[i] = static_cast<float>(buffer[i]) / 255.0f;
    ds.examples.push_back(std::move(ex));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError(where + ": trailing bytes after last record");
  return ds;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format, const LoadOptions& options) {
  return format == DatasetFormat::csv_labeled ? load_csv(path, options) : load_raw(path);
}

void save_raw_u8_images(const std::filesystem::path& path, const Dataset& dataset) {
  if (dataset.input_shape.size() != 3) throw ShapeError("save_raw_u8_images: input shape must be HxWxC");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  binio::write_magic(out, "SRKD");
  binio::write_u32(out, static_cast<std::uint32_t>(dataset.examples.size()));
  for (auto extent : dataset.input_shape) binio::write_u32(out, static_cast<std::uint32_t>(extent));
  binio::write_u32(out, static_cast<std::uint32_t>(dataset.num_classes));
  std::vector<char> bytes;
  for (const auto& ex : dataset.examples) {
    binio::write_u32(out, static_cast<std::uint32_t>(ex.label));
    bytes.resize(ex.pixels.size());
    for (std::size_t i = 0; i < ex.pixels.size(); ++i) {
      const float v = std::clamp(ex.pixels[i], 0.0f, 1.0f);
      bytes[i] = static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0f)));
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
}

std::size_t Task::local_label(std::size_t global_class) const {
  const auto it = std::find(class_ids.begin(), class_ids.end(), global_class);
  if (it == class_ids.end()) {
    throw ValueError("class " + std::to_string(global_class) + " does not belong to task " + std::to_string(task_id));
  }
  return static_cast<std::size_t>(it - class_ids.begin());
}

namespace {

std::vector<std::size_t> class_assignment(std::size_t num_classes, std::size_t needed, std::uint64_t seed,
                                          ClassOrder order) {
  std::vector<std::size_t> classes(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) classes[c] = c;
  if (order == ClassOrder::shuffled) {
    Rng rng(derive_seed(seed, 1));
    rng.shuffle(classes);
  }
  classes.resize(needed);
  return classes;
}

void check_split_args(const Dataset& ds, std::size_t num_tasks, std::size_t classes_per_task) {
  if (num_tasks == 0 || classes_per_task == 0) throw ValueError("split_benchmark: need at least one task and class");
  if (num_tasks * classes_per_task > ds.num_classes) {
    throw ValueError("split_benchmark: " + std::to_string(num_tasks) + " tasks x " +
                     std::to_string(classes_per_task) + " classes exceeds the " + std::to_string(ds.num_classes) +
                     " available classes");
  }
}

std::vector<std::vector<const Example*>> by_class(const Dataset& ds) {
  std::vector<std::vector<const Example*>> groups(ds.num_classes);
  for (const auto& ex : ds.examples) {
    if (ex.label >= ds.num_classes) throw LabelRangeError("split_benchmark: label out of range");
    groups[ex.label].push_back(&ex);
  }
  return groups;
}

Example relabeled(const Example& ex, std::size_t local) {
  Example out;
  out.pixels = ex.pixels;
  out.label = local;
  return out;
}

Benchmark assemble(const std::vector<std::vector<const Example*>>& train_groups,
                   const std::vector<std::vector<const Example*>>& test_groups,
                   const std::vector<std::size_t>& classes, std::size_t num_tasks, std::size_t classes_per_task,
                   const Shape& shape, std::uint64_t seed) {
  Benchmark bench;
  bench.classes_per_task = classes_per_task;
  bench.input_shape = shape;
  bench.seed = seed;
  for (std::size_t t = 0; t < num_tasks; ++t) {
    Task task;
    task.task_id = t;
    for (std::size_t i = 0; i < classes_per_task; ++i) {
      const std::size_t g = classes[t * classes_per_task + i];
      if (train_groups[g].empty() || test_groups[g].empty()) {
        throw ValueError("split_benchmark: class " + std::to_string(g) + " has no train or test examples");
      }
      task.class_ids.push_back(g);
      for (const Example* ex : train_groups[g]) task.train.push_back(relabeled(*ex, i));
      for (const Example* ex : test_groups[g]) task.test.push_back(relabeled(*ex, i));
    }
    Rng rng(derive_seed(seed, 1000 + t));
    rng.shuffle(task.train);
    bench.tasks.push_back(std::move(task));
  }
  return bench;
}

}  // namespace

Benchmark split_benchmark(const Dataset& dataset, std::size_t num_tasks, std::size_t classes_per_task,
                          std::uint64_t seed, ClassOrder order) {
  check_split_args(dataset, num_tasks, classes_per_task);
  const auto classes = class_assignment(dataset.num_classes, num_tasks * classes_per_task, seed, order);
  auto groups = by_class(dataset);
  std::vector<std::vector<const Example*>> train(groups.size()), test(groups.size());
  for (std::size_t c : classes) {
    auto members = groups[c];
    Rng rng(derive_seed(seed, 100 + c));
    rng.shuffle(members);
    const std::size_t n_train =
        members.size() < 2 ? members.size() : std::max<std::size_t>(1, members.size() * 4 / 5);
    train[c].assign(members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
    test[c].assign(members.begin() + static_cast<std::ptrdiff_t>(n_train), members.end());
  }
  return assemble(train, test, classes, num_tasks, classes_per_task, dataset.input_shape, seed);
}

Benchmark split_benchmark(const Dataset& train, const Dataset& test, std::size_t num_tasks,
                          std::size_t classes_per_task, std::uint64_t seed, ClassOrder order) {
  check_split_args(train, num_tasks, classes_per_task);
  if (train.input_shape != test.input_shape) throw ShapeError("split_benchmark: train/test input shapes differ");
  if (test.num_classes != train.num_classes) throw ValueError("split_benchmark: train/test class counts differ");
  const auto classes = class_assignment(train.num_classes, num_tasks * classes_per_task, seed, order);
  return assemble(by_class(train), by_class(test), classes, num_tasks, classes_per_task, train.input_shape, seed);
}

Benchmark synthetic_suite(const SyntheticSpec& spec) {
  if (spec.num_tasks == 0 || spec.classes_per_task == 0 || spec.samples_per_class == 0 || spec.dims.size() != 3 ||
      numel(spec.dims) == 0) {
    throw ValueError("synthetic_suite: all counts and extents must be positive");
  }
  const std::size_t classes = spec.num_tasks * spec.classes_per_task;
  const std::size_t dim = numel(spec.dims);
  const std::size_t n_test = std::max<std::size_t>(1, spec.samples_per_class / 4);

  Rng mean_rng(derive_seed(spec.seed, 7));
  std::vector<std::vector<double>> means(classes, std::vector<double>(dim));
  // Each class mean is a per-channel offset plus a per-pixel pattern; the
  // offset survives spatial pooling, the pattern does not.
  const std::size_t channels = spec.dims[2];
  for (auto& mu : means) {
    std::vector<double> offset(channels);
    for (auto& o : offset) o = mean_rng.normal();
    for (std::size_t i = 0; i < dim; ++i) mu[i] = spec.separation * (offset[i % channels] + mean_rng.normal());
  }

  Dataset train, test;
  train.input_shape = test.input_shape = spec.dims;
  train.num_classes = test.num_classes = classes;
  for (std::size_t c = 0; c < classes; ++c) {
    Rng rng(derive_seed(spec.seed, 10'000 + c));
    auto draw = [&] {
      Example ex;
      ex.label = c;
      ex.pixels.resize(dim);
      for (std::size_t i = 0; i < dim; ++i) ex.pixels[i] = static_cast<float>(means[c][i] + spec.noise * rng.normal());
      return ex;
    };
    for (std::size_t n = 0; n < spec.samples_per_class; ++n) train.examples.push_back(draw());
    for (std::size_t n = 0; n < n_test; ++n) test.examples.push_back(draw());
  }
  return split_benchmark(train, test, spec.num_tasks, spec.classes_per_task, spec.seed, ClassOrder::ascending);
}

TaskStream::TaskStream(const Task& task, std::size_t batch_size) : task_(&task), batch_size_(batch_size) {
  if (batch_size == 0) throw ValueError("TaskStream: batch size must be positive");
}

std::span<const Example> TaskStream::next() {
  if (done()) return {};
  const std::size_t n = std::min(batch_size_, task_->train.size() - cursor_);
  std::span<const Example> batch(task_->train.data() + cursor_, n);
  cursor_ += n;
  return batch;
}

std::size_t TaskStream::num_batches() const { return (task_->train.size() + batch_size_ - 1) / batch_size_; }

template <typename T>
Tensor<T> to_tensor(const Example& example, const Shape& shape) {
  if (numel(shape) != example.pixels.size()) {
    throw ShapeError("example with " + std::to_string(example.pixels.size()) + " values does not fit shape " +
                     shape_string(shape));
  }
  return Tensor<T>(shape, std::vector<T>(example.pixels.begin(), example.pixels.end()));
}

template Tensor<float> to_tensor(const Example&, const Shape&);
template Tensor<double> to_tensor(const Example&, const Shape&);

}  // namespace srkocl
