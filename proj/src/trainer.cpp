#include "srkocl/trainer.hpp"

#include <cmath>
#include <string>

#include "srkocl/ops.hpp"
#include "srkocl/pod.hpp"

namespace srkocl {

void TrainConfig::validate(std::size_t classes_per_task) const {
  if (batch_size == 0) throw ValueError("train: batch_size must be at least 1");
  if (replay_enabled && replay_batch_size == 0) throw ValueError("train: replay_batch_size must be at least 1");
  if (replay_enabled && per_task_budget < classes_per_task) {
    throw ValueError("train: per_task_budget " + std::to_string(per_task_budget) + " is below the " +
                     std::to_string(classes_per_task) + " classes per task");
  }
  if (!(pod_weight >= 0.0) || !std::isfinite(pod_weight)) throw ValueError("train: pod_weight must be non-negative");
  if (nf == 0) throw ValueError("train: nf must be positive");
  sgd().validate();
}

SgdConfig TrainConfig::sgd() const {
  SgdConfig s;
  s.learning_rate = learning_rate;
  s.precision = precision;
  s.momentum = momentum;
  s.weight_decay = weight_decay;
  s.grad_clip_norm = grad_clip_norm;
  return s;
}

template <typename T>
TrainerState<T> make_trainer_state(const Benchmark& benchmark, const TrainConfig& cfg) {
  cfg.validate(benchmark.classes_per_task);
  if (cfg.precision != precision_of<T>()) throw ValueError("trainer: configured precision does not match");
  ModelSpec spec;
  spec.nf = cfg.nf;
  spec.num_stages = cfg.num_stages;
  spec.num_tasks = benchmark.num_tasks();
  spec.classes_per_task = benchmark.classes_per_task;
  spec.input_shape = benchmark.input_shape;
  spec.eca_enabled = cfg.eca_enabled;
  spec.eca = cfg.eca;
  spec.seed = cfg.seed;
  return TrainerState<T>{Model<T>::build(spec), std::nullopt,
                         EpisodicMemory<T>(cfg.per_task_budget, benchmark.classes_per_task, derive_seed(cfg.seed, 2)),
                         Sgd<T>(cfg.sgd()), 0, 0};
}

template <typename T>
Tensor<T> loss_pre(const Model<T>& model, std::span<const Sample<T>> batch) {
  return loss_total<T>(model, nullptr, batch, TrainConfig{});
}

template <typename T>
Tensor<T> loss_total(const Model<T>& model, const Model<T>* prev_model, std::span<const Sample<T>> batch,
                     const TrainConfig& cfg) {
  if (batch.empty()) throw ValueError("loss: empty batch");
  std::vector<Tensor<T>> ce, pod;
  ce.reserve(batch.size());
  for (const auto& s : batch) {
    auto live = model.forward(s.input, s.task_id);
    ce.push_back(ops::softmax_cross_entropy(live.logits, s.label));
    if (prev_model) {
      ForwardResult<T> frozen;
      {
        NoGradGuard guard;
        frozen = prev_model->forward(s.input, s.task_id);
      }
      pod.push_back(pod_loss(live.stage_features, frozen.stage_features));
    }
  }
  Tensor<T> total = ops::mean<T>(ce);
  if (prev_model) total = ops::add(total, ops::scale(ops::mean<T>(pod), static_cast<T>(cfg.pod_weight)));
  return total;
}

template <typename T>
void train_task(TrainerState<T>& state, const Task& task, const TrainConfig& cfg, const StepObserver<T>& observer) {
  const Shape& shape = state.model.spec().input_shape;
  if (task.task_id >= state.model.spec().num_tasks) {
    throw ValueError("train_task: task " + std::to_string(task.task_id) + " has no head");
  }
  state.current_task = task.task_id;
  const Model<T>* prev = cfg.pod_enabled && state.prev_model ? &*state.prev_model : nullptr;

  TaskStream stream(task, cfg.batch_size);
  std::vector<Sample<T>> combined;
  while (!stream.done()) {
    const auto batch = stream.next();
    combined.clear();
    for (const auto& ex : batch) {
      if (ex.label >= task.num_classes()) {
        throw ValueError("train_task: example label " + std::to_string(ex.label) + " is not a class of task " +
                         std::to_string(task.task_id));
      }
      combined.push_back(Sample<T>{to_tensor<T>(ex, shape), ex.label, task.task_id});
    }
    const std::size_t fresh = combined.size();
    if (cfg.replay_enabled) {
      auto replay = state.memory.sample(cfg.replay_batch_size, task.task_id);
      for (auto& s : replay.samples) combined.push_back(std::move(s));
    }

    state.model.zero_grad();
    const Tensor<T> loss = loss_total<T>(state.model, prev, combined, cfg);
    backward(loss);
    auto params = state.model.parameters();
    state.optimizer.step(params);

    if (cfg.replay_enabled) state.memory.write_batch(task.task_id, std::span<const Sample<T>>(combined.data(), fresh));
    ++state.step_count;
    if (observer) observer(state, combined.size());
  }
}

template <typename T>
double evaluate(const Model<T>& model, const Task& task) {
  if (task.test.empty()) throw ValueError("evaluate: task " + std::to_string(task.task_id) + " has no test set");
  NoGradGuard guard;
  std::size_t correct = 0;
  for (const auto& ex : task.test) {
    const auto out = model.forward(to_tensor<T>(ex, model.spec().input_shape), task.task_id);
    if (ops::argmax(out.logits) == ex.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(task.test.size());
}

template <typename T>
AccuracyMatrix run_benchmark(const Benchmark& benchmark, const TrainConfig& cfg, const TaskObserver<T>& observer) {
  if (benchmark.num_tasks() == 0) throw ValueError("run_benchmark: benchmark has no tasks");
  auto state = make_trainer_state<T>(benchmark, cfg);
  AccuracyMatrix r(benchmark.num_tasks());
  for (std::size_t k = 0; k < benchmark.num_tasks(); ++k) {
    train_task(state, benchmark.tasks[k], cfg);
    if (cfg.pod_enabled) state.prev_model = state.model.snapshot();
    for (std::size_t j = 0; j < benchmark.num_tasks(); ++j) r.set(k, j, evaluate(state.model, benchmark.tasks[j]));
    if (observer) observer(k, state);
  }
  return r;
}

AccuracyMatrix run_benchmark(const Benchmark& benchmark, const TrainConfig& cfg) {
  return cfg.precision == Precision::f32 ? run_benchmark<float>(benchmark, cfg) : run_benchmark<double>(benchmark, cfg);
}

#define SRKOCL_INSTANTIATE_TRAINER(T)                                                                         \
  template TrainerState<T> make_trainer_state(const Benchmark&, const TrainConfig&);                          \
  template Tensor<T> loss_pre(const Model<T>&, std::span<const Sample<T>>);                                   \
  template Tensor<T> loss_total(const Model<T>&, const Model<T>*, std::span<const Sample<T>>, const TrainConfig&); \
  template void train_task(TrainerState<T>&, const Task&, const TrainConfig&, const StepObserver<T>&);         \
  template double evaluate(const Model<T>&, const Task&);                                                      \
  template AccuracyMatrix run_benchmark(const Benchmark&, const TrainConfig&, const TaskObserver<T>&);

SRKOCL_INSTANTIATE_TRAINER(float)
SRKOCL_INSTANTIATE_TRAINER(double)

#undef SRKOCL_INSTANTIATE_TRAINER

}  // namespace srkocl
