#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "cyclerl/errors.hpp"
#include "cyclerl/replay.hpp"

using namespace cyclerl;

namespace {

Transition transition(double id, int task = 1) {
  Transition t;
  t.state = {id};
  t.next_state = {id + 0.5};
  t.task_id = task;
  return t;
}

// Q(s) = (s, 2s): easy to predict for any stored state.
Tensor linear_q(const Tensor& states) {
  Tensor out({states.rows(), 2});
  for (std::size_t r = 0; r < states.rows(); ++r) {
    out(r, 0) = states(r, 0);
    out(r, 1) = 2.0 * states(r, 0);
  }
  return out;
}

std::vector<const Transition*> pointers(const std::vector<Transition>& ts) {
  std::vector<const Transition*> out;
  for (const auto& t : ts) out.push_back(&t);
  return out;
}

}  // namespace

TEST_CASE("ring buffer keeps the newest items in FIFO order") {
  RingBuffer buf(3);
  for (int i = 1; i <= 4; ++i) buf.push(transition(i));
  REQUIRE(buf.size() == 3);
  CHECK(buf[0].state[0] == 2.0);
  CHECK(buf[1].state[0] == 3.0);
  CHECK(buf[2].state[0] == 4.0);
  const auto recent = buf.recent(2);
  CHECK(recent[0]->state[0] == 3.0);
  CHECK(recent[1]->state[0] == 4.0);
  CHECK(buf.recent(10).size() == 3);
}

TEST_CASE("zero capacity is a config error") { CHECK_THROWS_AS(RingBuffer(0), ConfigError); }

TEST_CASE("sampling an empty buffer is a state error") {
  RingBuffer buf(4);
  Rng rng(1);
  CHECK_THROWS_AS((void)buf.sample_batch(1, rng), StateError);
}

TEST_CASE("sample of size 1 from a single entry returns it") {
  RingBuffer buf(4);
  buf.push(transition(9));
  Rng rng(1);
  const auto batch = buf.sample_batch(1, rng);
  REQUIRE(batch.size() == 1);
  CHECK(batch[0]->state[0] == 9.0);
}

TEST_CASE("sample of the full size is a permutation") {
  RingBuffer buf(8);
  for (int i = 0; i < 8; ++i) buf.push(transition(i));
  Rng rng(2);
  const auto batch = buf.sample_batch(8, rng);
  std::set<double> seen;
  for (const auto* t : batch) seen.insert(t->state[0]);
  CHECK(seen.size() == 8);
}

TEST_CASE("sampling is uniform over entries") {
  RingBuffer buf(4);
  for (int i = 0; i < 4; ++i) buf.push(transition(i));
  Rng rng(3);
  const int draws = 20000;
  std::vector<int> counts(4, 0);
  for (int k = 0; k < draws; ++k) ++counts[static_cast<std::size_t>(buf.sample_batch(1, rng)[0]->state[0])];
  const double p = 0.25;
  const double sd = std::sqrt(draws * p * (1 - p));
  for (int c : counts) CHECK(std::abs(c - draws * p) <= 3.0 * sd);
}

TEST_CASE("rrb_add stores n_rass states with their current Q-vectors") {
  std::vector<Transition> recent;
  for (int i = 0; i < 50; ++i) recent.push_back(transition(i));
  RehearsalBuffer rrb(100);
  Rng rng(4);
  CHECK(rrb_add(rrb, pointers(recent), 10, linear_q, 3, rng) == 10);
  CHECK(rrb.size() == 10);
  std::set<double> states;
  for (std::size_t k = 0; k < rrb.size(); ++k) {
    const auto& e = rrb[k];
    CHECK(e.task_id == 3);
    CHECK(e.q_values == std::vector<double>{e.state[0], 2.0 * e.state[0]});
    states.insert(e.state[0]);
  }
  CHECK(states.size() == 10);
}

TEST_CASE("rrb_add clamps to the recent window") {
  std::vector<Transition> recent{transition(1), transition(2), transition(3)};
  RehearsalBuffer rrb(100);
  Rng rng(5);
  CHECK(rrb_add(rrb, pointers(recent), 64, linear_q, 1, rng) == 3);
  CHECK(rrb.size() == 3);
  std::vector<const Transition*> none;
  CHECK(rrb_add(rrb, none, 64, linear_q, 1, rng) == 0);
}

TEST_CASE("rrb_update recomputes only the given task") {
  RehearsalBuffer rrb(10);
  rrb.push({{1.0}, {0.0, 0.0}, 1});
  rrb.push({{2.0}, {0.0, 0.0}, 2});
  rrb.push({{3.0}, {0.0, 0.0}, 1});
  CHECK(rrb_update(rrb, 1, linear_q) == 2);
  CHECK(rrb[0].q_values == std::vector<double>{1.0, 2.0});
  CHECK(rrb[1].q_values == std::vector<double>{0.0, 0.0});
  CHECK(rrb[2].q_values == std::vector<double>{3.0, 6.0});
}

TEST_CASE("rrb_update with no entries of the task leaves the buffer unchanged") {
  RehearsalBuffer rrb(10);
  rrb.push({{1.0}, {5.0, 5.0}, 1});
  const RehearsalBuffer before = rrb;
  CHECK(rrb_update(rrb, 2, linear_q) == 0);
  CHECK(rrb == before);
}

TEST_CASE("rrb_sample clamps and draws distinct entries") {
  Rng rng(6);
  RehearsalBuffer empty(10);
  CHECK(rrb_sample(empty, 256, rng).empty());

  RehearsalBuffer small(10);
  for (int i = 0; i < 10; ++i) small.push({{double(i)}, {0.0}, 1});
  CHECK(rrb_sample(small, 256, rng).size() == 10);

  RehearsalBuffer big(300);
  for (int i = 0; i < 300; ++i) big.push({{double(i)}, {0.0}, 1});
  const auto batch = rrb_sample(big, 256, rng);
  std::set<const RehearsalEntry*> distinct(batch.begin(), batch.end());
  CHECK(batch.size() == 256);
  CHECK(distinct.size() == 256);
}

TEST_CASE("rehearsal occupancy counts entries per task and FIFO evicts the oldest") {
  RehearsalBuffer rrb(4);
  rrb.push({{1.0}, {0.0}, 1});
  rrb.push({{2.0}, {0.0}, 1});
  rrb.push({{3.0}, {0.0}, 2});
  rrb.push({{4.0}, {0.0}, 2});
  rrb.push({{5.0}, {0.0}, 3});
  const auto occ = rrb.occupancy();
  CHECK(occ.at(1) == 1);
  CHECK(occ.at(2) == 2);
  CHECK(occ.at(3) == 1);
  CHECK(rrb[0].state[0] == 2.0);
}

TEST_CASE("buffer snapshots restore exactly and reject inconsistent cursors") {
  RingBuffer buf(3);
  for (int i = 0; i < 5; ++i) buf.push(transition(i));
  const RingBuffer copy(CircularStore<Transition>::restore(buf.capacity(), buf.slots(), buf.cursor()));
  CHECK(copy == buf);
  CHECK_THROWS_AS(CircularStore<Transition>::restore(3, buf.slots(), 3), DataError);
}
