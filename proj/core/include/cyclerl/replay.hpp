#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "cyclerl/envs.hpp"
#include "cyclerl/errors.hpp"
#include "cyclerl/rng.hpp"
#include "cyclerl/tensor.hpp"

namespace cyclerl {

struct Transition {
  Observation state;
  int action = 0;
  double reward = 0.0;  // already clipped
  Observation next_state;
  bool done = false;    // terminal: no bootstrap from next_state
  int task_id = 1;
  bool operator==(const Transition&) const = default;
};

struct RehearsalEntry {
  Observation state;
  std::vector<double> q_values;
  int task_id = 1;
  bool operator==(const RehearsalEntry&) const = default;
};

/// Fixed-capacity FIFO store. Logical index 0 is the oldest element.
template <typename T>
class CircularStore {
 public:
  explicit CircularStore(std::size_t capacity = 1) : capacity_(capacity) {
    if (capacity_ == 0) throw ConfigError("buffer capacity must be at least 1");
  }

  void push(T item) {
    if (items_.size() < capacity_) {
      items_.push_back(std::move(item));
    } else {
      items_[cursor_] = std::move(item);
    }
    cursor_ = (cursor_ + 1) % capacity_;
  }

  [[nodiscard]] std::size_t size() const noexcept { return items_.size(); }
  [[nodiscard]] std::size_t capacity() const noexcept { return capacity_; }
  [[nodiscard]] bool empty() const noexcept { return items_.empty(); }
  [[nodiscard]] bool full() const noexcept { return items_.size() == capacity_; }

  [[nodiscard]] const T& operator[](std::size_t logical) const { return items_[physical(logical)]; }
  [[nodiscard]] T& operator[](std::size_t logical) { return items_[physical(logical)]; }

  /// Raw slots plus the next write position, for checkpointing.
  [[nodiscard]] const std::vector<T>& slots() const noexcept { return items_; }
  [[nodiscard]] std::vector<T>& slots() noexcept { return items_; }
  [[nodiscard]] std::size_t cursor() const noexcept { return cursor_; }

  static CircularStore restore(std::size_t capacity, std::vector<T> slots, std::size_t cursor) {
    if (slots.size() > capacity || cursor >= capacity || (slots.size() < capacity && cursor != slots.size() % capacity)) {
      throw DataError("inconsistent buffer snapshot");
    }
    CircularStore s(capacity);
    s.items_ = std::move(slots);
    s.cursor_ = cursor;
    return s;
  }

  bool operator==(const CircularStore&) const = default;

 private:
  [[nodiscard]] std::size_t physical(std::size_t logical) const {
    return full() ? (cursor_ + logical) % capacity_ : logical;
  }

  std::size_t capacity_;
  std::size_t cursor_ = 0;
  std::vector<T> items_;
};

/// Standard replay buffer of N_RB transitions.
class RingBuffer : public CircularStore<Transition> {
 public:
  using CircularStore::CircularStore;
  RingBuffer(CircularStore<Transition> store) : CircularStore(std::move(store)) {}

  /// Uniform draws without replacement; all entries when n >= size.
  [[nodiscard]] std::vector<const Transition*> sample_batch(std::size_t n, Rng& rng) const;
  /// The most recent min(n, size) transitions, oldest first.
  [[nodiscard]] std::vector<const Transition*> recent(std::size_t n) const;
};

/// Batched Q evaluation: [B x obs] -> [B x actions].
using QFunction = std::function<Tensor(const Tensor&)>;

/// Rehearsal replay buffer (RRB) of N_RRB (state, Q-vector, task) entries.
class RehearsalBuffer : public CircularStore<RehearsalEntry> {
 public:
  using CircularStore::CircularStore;
  RehearsalBuffer(CircularStore<RehearsalEntry> store) : CircularStore(std::move(store)) {}

  [[nodiscard]] std::map<int, std::size_t> occupancy() const;
};

/// Picks min(n_rass, recent.size()) states uniformly from `recent`, stores
/// them with their current Q-vector under `task_id`. Returns the count added.
std::size_t rrb_add(RehearsalBuffer& rrb, std::span<const Transition* const> recent, std::size_t n_rass,
                    const QFunction& qfn, int task_id, Rng& rng);

/// Recomputes the stored Q-vector of every entry of `task_id`.
std::size_t rrb_update(RehearsalBuffer& rrb, int task_id, const QFunction& qfn);

/// min(n_rbs, size) entries without replacement; empty when the RRB is empty.
std::vector<const RehearsalEntry*> rrb_sample(const RehearsalBuffer& rrb, std::size_t n_rbs, Rng& rng);

}  // namespace cyclerl
