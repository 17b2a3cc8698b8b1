#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>

#include "srkocl/backbone.hpp"
#include "srkocl/data.hpp"
#include "srkocl/memory.hpp"
#include "srkocl/metrics.hpp"
#include "srkocl/optim.hpp"

namespace srkocl {

struct TrainConfig {
  std::size_t batch_size = 10;
  // Replay draws this many memory entries per incoming batch.
  std::size_t replay_batch_size = 10;
  double learning_rate = 0.1;
  double momentum = 0.0;
  double weight_decay = 0.0;
  double grad_clip_norm = 0.0;
  std::size_t per_task_budget = 65;
  bool replay_enabled = true;
  bool pod_enabled = true;
  bool eca_enabled = true;
  double pod_weight = 1.0;
  std::size_t nf = 20;
  std::size_t num_stages = 4;
  EcaParams eca;
  std::uint64_t seed = 0;
  Precision precision = Precision::f32;

  void validate(std::size_t classes_per_task) const;
  SgdConfig sgd() const;
  bool operator==(const TrainConfig&) const = default;
};

template <typename T>
struct TrainerState {
  Model<T> model;
  std::optional<Model<T>> prev_model;
  EpisodicMemory<T> memory;
  Sgd<T> optimizer;
  std::size_t current_task = 0;
  std::size_t step_count = 0;
};

template <typename T>
TrainerState<T> make_trainer_state(const Benchmark& benchmark, const TrainConfig& cfg);

// Mean softmax cross-entropy; each sample is scored by its own task's head.
template <typename T>
Tensor<T> loss_pre(const Model<T>& model, std::span<const Sample<T>> batch);

// loss_pre + pod_weight * pod_loss, with the distillation term averaged over
// the batch. prev_model == nullptr drops the distillation term.
template <typename T>
Tensor<T> loss_total(const Model<T>& model, const Model<T>* prev_model, std::span<const Sample<T>> batch,
                     const TrainConfig& cfg);

// Called after every SGD step with the state and the combined batch size.
template <typename T>
using StepObserver = std::function<void(const TrainerState<T>&, std::size_t combined_size)>;

// One pass over the task's training stream.
template <typename T>
void train_task(TrainerState<T>& state, const Task& task, const TrainConfig& cfg, const StepObserver<T>& observer = {});

template <typename T>
double evaluate(const Model<T>& model, const Task& task);

// Called after each task is trained and its accuracy row filled.
template <typename T>
using TaskObserver = std::function<void(std::size_t task_id, const TrainerState<T>&)>;

template <typename T>
AccuracyMatrix run_benchmark(const Benchmark& benchmark, const TrainConfig& cfg, const TaskObserver<T>& observer = {});

// Dispatches on cfg.precision.
AccuracyMatrix run_benchmark(const Benchmark& benchmark, const TrainConfig& cfg);

}  // namespace srkocl
