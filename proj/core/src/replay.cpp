#include "cyclerl/replay.hpp"

namespace cyclerl {

std::vector<const Transition*> RingBuffer::sample_batch(std::size_t n, Rng& rng) const {
  if (empty()) throw StateError("cannot sample from an empty replay buffer");
  std::vector<const Transition*> out;
  for (std::size_t i : sample_without_replacement(size(), n, rng)) out.push_back(&(*this)[i]);
  return out;
}

std::vector<const Transition*> RingBuffer::recent(std::size_t n) const {
  const std::size_t k = std::min(n, size());
  std::vector<const Transition*> out;
  out.reserve(k);
  for (std::size_t i = size() - k; i < size(); ++i) out.push_back(&(*this)[i]);
  return out;
}

std::map<int, std::size_t> RehearsalBuffer::occupancy() const {
  std::map<int, std::size_t> counts;
  for (const auto& e : slots()) ++counts[e.task_id];
  return counts;
}

std::size_t rrb_add(RehearsalBuffer& rrb, std::span<const Transition* const> recent, std::size_t n_rass,
                    const QFunction& qfn, int task_id, Rng& rng) {
  if (recent.empty() || n_rass == 0) return 0;
  const auto picks = sample_without_replacement(recent.size(), n_rass, rng);
  std::vector<Observation> states;
  states.reserve(picks.size());
  for (std::size_t i : picks) states.push_back(recent[i]->state);
  const Tensor q = qfn(stack_rows(states));
  if (q.rows() != states.size()) throw DimensionError("Q function returned the wrong batch size");
  for (std::size_t k = 0; k < states.size(); ++k) {
    auto row = q.row(k);
    rrb.push(RehearsalEntry{std::move(states[k]), {row.begin(), row.end()}, task_id});
  }
  return picks.size();
}

std::size_t rrb_update(RehearsalBuffer& rrb, int task_id, const QFunction& qfn) {
  auto& slots = rrb.slots();
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < slots.size(); ++i)
    if (slots[i].task_id == task_id) idx.push_back(i);
  if (idx.empty()) return 0;

  std::vector<Observation> states;
  states.reserve(idx.size());
  for (std::size_t i : idx) states.push_back(slots[i].state);
  const Tensor q = qfn(stack_rows(states));
  if (q.rows() != idx.size()) throw DimensionError("Q function returned the wrong batch size");
  for (std::size_t k = 0; k < idx.size(); ++k) {
    auto row = q.row(k);
    auto& dst = slots[idx[k]].q_values;
    if (dst.size() != row.size()) throw DimensionError("rehearsal entry has a Q-vector of the wrong length");
    std::copy(row.begin(), row.end(), dst.begin());
  }
  return idx.size();
}

std::vector<const RehearsalEntry*> rrb_sample(const RehearsalBuffer& rrb, std::size_t n_rbs, Rng& rng) {
  std::vector<const RehearsalEntry*> out;
  if (rrb.empty() || n_rbs == 0) return out;
  for (std::size_t i : sample_without_replacement(rrb.size(), n_rbs, rng)) out.push_back(&rrb[i]);
  return out;
}

}  // namespace cyclerl
