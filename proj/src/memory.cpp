#include "srkocl/memory.hpp"

#include <string>

#include "srkocl/binio.hpp"

namespace srkocl {

template <typename T>
EpisodicMemory<T>::EpisodicMemory(std::size_t per_task_budget, std::size_t classes_per_task, std::uint64_t seed)
    : budget_(per_task_budget), classes_(classes_per_task), rng_(seed) {
  if (per_task_budget == 0) throw ValueError("episodic memory: per-task budget must be positive");
  if (classes_per_task == 0) throw ValueError("episodic memory: classes per task must be positive");
}

template <typename T>
std::size_t EpisodicMemory<T>::quota(std::size_t local_class) const {
  return budget_ / classes_ + (local_class < budget_ % classes_ ? 1 : 0);
}

template <typename T>
void EpisodicMemory<T>::write_batch(std::size_t task_id, std::span<const Sample<T>> batch) {
  for (const auto& s : batch) {
    if (s.label >= classes_) {
      throw ValueError("episodic memory: label " + std::to_string(s.label) + " unknown for a task with " +
                       std::to_string(classes_) + " classes");
    }
  }
  auto& rings = tasks_[task_id];
  if (rings.empty()) rings.resize(classes_);
  for (const auto& s : batch) {
    const std::size_t cap = quota(s.label);
    if (cap == 0) continue;
    Ring& ring = rings[s.label];
    Sample<T> copy{s.input.detach(), s.label, task_id};
    if (ring.slots.size() < cap) {
      ring.slots.push_back(std::move(copy));
    } else {
      ring.slots[ring.next] = std::move(copy);
      ring.next = (ring.next + 1) % cap;
    }
  }
}

template <typename T>
ReplayBatch<T> EpisodicMemory<T>::sample(std::size_t n, std::size_t exclude_task) {
  std::vector<const Sample<T>*> pool;
  for (const auto& [task, rings] : tasks_) {
    if (task >= exclude_task) break;
    for (const auto& ring : rings) {
      for (const auto& s : ring.slots) pool.push_back(&s);
    }
  }
  ReplayBatch<T> out;
  if (pool.size() > n) {
    // Partial Fisher-Yates: the first n positions end up a uniform n-subset.
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng_.below(pool.size() - i));
      std::swap(pool[i], pool[j]);
    }
    pool.resize(n);
  }
  out.samples.reserve(pool.size());
  for (const Sample<T>* s : pool) out.samples.push_back(*s);
  return out;
}

template <typename T>
std::size_t EpisodicMemory<T>::size() const {
  std::size_t n = 0;
  for (const auto& [task, rings] : tasks_) n += task_size(task);
  return n;
}

template <typename T>
std::size_t EpisodicMemory<T>::task_size(std::size_t task_id) const {
  const auto it = tasks_.find(task_id);
  if (it == tasks_.end()) return 0;
  std::size_t n = 0;
  for (const auto& ring : it->second) n += ring.slots.size();
  return n;
}

template <typename T>
std::size_t EpisodicMemory<T>::class_size(std::size_t task_id, std::size_t local_class) const {
  const auto it = tasks_.find(task_id);
  if (it == tasks_.end() || local_class >= it->second.size()) return 0;
  return it->second[local_class].slots.size();
}

template <typename T>
std::vector<Sample<T>> EpisodicMemory<T>::class_entries(std::size_t task_id, std::size_t local_class) const {
  const auto it = tasks_.find(task_id);
  if (it == tasks_.end() || local_class >= it->second.size()) return {};
  const Ring& ring = it->second[local_class];
  std::vector<Sample<T>> out;
  const std::size_t n = ring.slots.size();
  const std::size_t start = n < quota(local_class) ? 0 : ring.next;
  for (std::size_t i = 0; i < n; ++i) out.push_back(ring.slots[(start + i) % n]);
  return out;
}

namespace {
constexpr std::uint32_t kMemoryVersion = 1;
}

template <typename T>
void EpisodicMemory<T>::save(std::ostream& os) const {
  binio::write_magic(os, "SRKM");
  binio::write_u32(os, kMemoryVersion);
  binio::write_u32(os, sizeof(T));
  binio::write_u32(os, static_cast<std::uint32_t>(budget_));
  binio::write_u32(os, static_cast<std::uint32_t>(classes_));
  binio::write_string(os, rng_.state());
  binio::write_u32(os, static_cast<std::uint32_t>(tasks_.size()));
  for (const auto& [task, rings] : tasks_) {
    binio::write_u32(os, static_cast<std::uint32_t>(task));
    for (std::size_t c = 0; c < classes_; ++c) {
      const Ring& ring = rings[c];
      binio::write_u32(os, static_cast<std::uint32_t>(ring.next));
      binio::write_u32(os, static_cast<std::uint32_t>(ring.slots.size()));
      for (const auto& s : ring.slots) {
        binio::write_u32(os, static_cast<std::uint32_t>(s.label));
        binio::write_u32(os, static_cast<std::uint32_t>(s.input.rank()));
        for (auto extent : s.input.shape()) binio::write_u32(os, static_cast<std::uint32_t>(extent));
        for (T v : s.input.values()) binio::write_real(os, v);
      }
    }
  }
}

template <typename T>
EpisodicMemory<T> EpisodicMemory<T>::load(std::istream& is) {
  binio::expect_magic(is, "SRKM", "episodic memory record");
  if (binio::read_u32(is, "memory version") != kMemoryVersion) throw FormatError("unsupported memory version");
  if (binio::read_u32(is, "memory precision") != sizeof(T)) {
    throw FormatError("memory record precision does not match the requested precision");
  }
  const auto budget = binio::read_u32(is, "memory budget");
  const auto classes = binio::read_u32(is, "memory classes");
  if (budget == 0 || classes == 0) throw FormatError("memory record has a zero budget or class count");
  EpisodicMemory mem(budget, classes, 0);
  mem.rng_.set_state(binio::read_string(is, "memory rng state"));
  const auto num_tasks = binio::read_u32(is, "memory task count");
  for (std::uint32_t t = 0; t < num_tasks; ++t) {
    const std::size_t task = binio::read_u32(is, "memory task id");
    auto& rings = mem.tasks_[task];
    rings.resize(classes);
    for (std::size_t c = 0; c < classes; ++c) {
      Ring& ring = rings[c];
      ring.next = binio::read_u32(is, "ring cursor");
      const auto count = binio::read_u32(is, "ring count");
      if (count > mem.quota(c)) throw FormatError("memory ring exceeds its class quota");
      for (std::uint32_t i = 0; i < count; ++i) {
        const std::size_t label = binio::read_u32(is, "entry label");
        if (label != c) throw FormatError("memory entry label does not match its ring");
        const auto rank = binio::read_u32(is, "entry rank");
        if (rank == 0 || rank > 8) throw FormatError("memory entry has implausible rank");
        Shape shape(rank);
        for (auto& extent : shape) extent = binio::read_u32(is, "entry shape");
        std::vector<T> values(numel(shape));
        for (auto& v : values) v = binio::read_real<T>(is, "entry values");
        ring.slots.push_back(Sample<T>{Tensor<T>(shape, std::move(values)), label, task});
      }
    }
  }
  return mem;
}

template class EpisodicMemory<float>;
template class EpisodicMemory<double>;

}  // namespace srkocl
