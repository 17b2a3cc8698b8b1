#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "srkocl/tensor.hpp"

namespace srkocl {

struct Example {
  std::vector<float> pixels;  // H x W x C, channel fastest
  std::size_t label = 0;
};

struct Dataset {
  Shape input_shape;  // {H, W, C}
  std::size_t num_classes = 0;
  std::vector<Example> examples;
};

enum class DatasetFormat { csv_labeled, raw_u8_images };

DatasetFormat parse_dataset_format(std::string_view name);

struct LoadOptions {
  // csv only: how to read a row's features. Defaults to {1, 1, features}.
  std::optional<Shape> input_shape;
  // csv only: labels must be below this. Defaults to max label + 1.
  std::optional<std::size_t> num_classes;
};

// csv_labeled: header row, then "label,f0,f1,...". Features already in [0, 1]
// are kept, otherwise they must lie in [0, 255] and are divided by 255.
// raw_u8_images: little-endian header {"SRKD", count, H, W, C, num_classes}
// followed by count records of (u32 label, H*W*C bytes); bytes map to b/255.
Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format, const LoadOptions& options = {});

// Writes pixels (clamped to [0, 1], scaled by 255 and rounded) as raw_u8_images.
void save_raw_u8_images(const std::filesystem::path& path, const Dataset& dataset);

struct Task {
  std::size_t task_id = 0;
  std::vector<std::size_t> class_ids;  // local label i <-> global class_ids[i]
  std::vector<Example> train;          // labels are local
  std::vector<Example> test;

  std::size_t local_label(std::size_t global_class) const;
  std::size_t num_classes() const { return class_ids.size(); }
};

struct Benchmark {
  std::vector<Task> tasks;
  std::size_t classes_per_task = 0;
  Shape input_shape;
  std::uint64_t seed = 0;

  std::size_t num_tasks() const { return tasks.size(); }
};

enum class ClassOrder { shuffled, ascending };

// Splits one dataset into tasks of disjoint classes; each class is divided
// 80/20 into train/test after a seeded shuffle.
Benchmark split_benchmark(const Dataset& dataset, std::size_t num_tasks, std::size_t classes_per_task,
                          std::uint64_t seed, ClassOrder order = ClassOrder::shuffled);

// Same, with an explicit held-out test dataset over the same label space.
Benchmark split_benchmark(const Dataset& train, const Dataset& test, std::size_t num_tasks,
                          std::size_t classes_per_task, std::uint64_t seed, ClassOrder order = ClassOrder::shuffled);

struct SyntheticSpec {
  std::size_t num_tasks = 5;
  std::size_t classes_per_task = 2;
  Shape dims = {8, 8, 3};
  // Training examples per class; a further quarter of this count is drawn for
  // the test split, giving an 80/20 train/test ratio.
  std::size_t samples_per_class = 100;
  // Scale of the per-class means, which are centred at 0.
  double separation = 0.25;
  // Standard deviation of the isotropic noise around each class mean.
  double noise = 0.25;
  std::uint64_t seed = 0;

  bool operator==(const SyntheticSpec&) const = default;
};

Benchmark synthetic_suite(const SyntheticSpec& spec);

// Single pass over a task's training examples in fixed-size batches. The
// last batch may be short.
class TaskStream {
 public:
  TaskStream(const Task& task, std::size_t batch_size);

  bool done() const { return cursor_ >= task_->train.size(); }
  std::span<const Example> next();
  std::size_t task_id() const { return task_->task_id; }
  std::size_t num_batches() const;

 private:
  const Task* task_;
  std::size_t batch_size_;
  std::size_t cursor_ = 0;
};

template <typename T>
Tensor<T> to_tensor(const Example& example, const Shape& shape);

}  // namespace srkocl
