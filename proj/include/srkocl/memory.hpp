#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <vector>

#include "srkocl/random.hpp"
#include "srkocl/tensor.hpp"

namespace srkocl {

// One labelled input tagged with the task it came from.
template <typename T>
struct Sample {
  Tensor<T> input;
  std::size_t label = 0;  // local to the task
  std::size_t task_id = 0;
};

template <typename T>
struct ReplayBatch {
  std::vector<Sample<T>> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

// Episodic memory with a fixed budget per task. Each (task, class) pair owns
// a FIFO ring; the budget is split evenly across a task's classes with the
// remainder going to the lowest class ids.
template <typename T>
class EpisodicMemory {
 public:
  EpisodicMemory(std::size_t per_task_budget, std::size_t classes_per_task, std::uint64_t seed);

  // Appends deep copies of batch to their class rings, overwriting the oldest
  // entry of a full ring. Labels must be below classes_per_task.
  void write_batch(std::size_t task_id, std::span<const Sample<T>> batch);

  // Uniform draw without replacement of min(n, available) entries from tasks
  // strictly below exclude_task.
  ReplayBatch<T> sample(std::size_t n, std::size_t exclude_task);

  std::size_t per_task_budget() const { return budget_; }
  std::size_t classes_per_task() const { return classes_; }
  std::size_t quota(std::size_t local_class) const;

  std::size_t size() const;
  std::size_t task_size(std::size_t task_id) const;
  std::size_t class_size(std::size_t task_id, std::size_t local_class) const;
  // Entries of one ring ordered oldest to newest.
  std::vector<Sample<T>> class_entries(std::size_t task_id, std::size_t local_class) const;

  // Flat binary record: header, rings (shape header + raw values + labels),
  // and the sampling stream state. load() restores an identical memory.
  void save(std::ostream& os) const;
  static EpisodicMemory load(std::istream& is);

 private:
  struct Ring {
    std::vector<Sample<T>> slots;
    std::size_t next = 0;  // slot overwritten by the next write once full
  };

  std::size_t budget_;
  std::size_t classes_;
  std::map<std::size_t, std::vector<Ring>> tasks_;
  Rng rng_;
};

extern template class EpisodicMemory<float>;
extern template class EpisodicMemory<double>;

}  // namespace srkocl
