#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "cyclerl/envs.hpp"
#include "cyclerl/errors.hpp"

using namespace cyclerl;

namespace {

EnvSuiteConfig suite(EnvFamily family) {
  EnvSuiteConfig s;
  s.family = family;
  return s;
}

// Scripted environment: reward 1 per step, episode ends after `length` steps,
// observation is the step count.
class CountingEnv final : public Environment {
 public:
  explicit CountingEnv(int length) : Environment(TaskSpec{}, 0), length_(length) {}
  Observation reset() override {
    steps_ = 0;
    return {0.0};
  }
  StepResult step(int action) override {
    check_action(action);
    ++steps_;
    return {{static_cast<double>(steps_)}, 1.0, steps_ >= length_, false};
  }
  std::size_t observation_size() const override { return 1; }
  int action_count() const override { return 2; }
  std::unique_ptr<Environment> clone() const override { return std::make_unique<CountingEnv>(*this); }

 private:
  int length_;
};

struct RoomLayout {
  int agent_r, agent_c, goal_r, goal_c;
};

RoomLayout decode_room(const Observation& obs, int size) {
  const int plane = size * size;
  RoomLayout l{};
  for (int k = 0; k < plane; ++k) {
    if (obs[static_cast<std::size_t>(k)] == 1.0) l.agent_r = k / size, l.agent_c = k % size;
    if (obs[static_cast<std::size_t>(plane + k)] == 1.0) l.goal_r = k / size, l.goal_c = k % size;
  }
  return l;
}

// Index into the N, NE, E, SE, S, SW, W, NW action set for a unit move.
int move_action(int dr, int dc) {
  static const int table[3][3] = {{7, 0, 1}, {6, -1, 2}, {5, 4, 3}};
  return table[dr + 1][dc + 1];
}

int sign(int v) { return (v > 0) - (v < 0); }

}  // namespace

TEST_CASE("flappy gap shrinks by the step per task") {
  CHECK(make_task_spec(suite(EnvFamily::flappy), 1, 5).gap_size == 100.0);
  CHECK(make_task_spec(suite(EnvFamily::flappy), 5, 5).gap_size == 80.0);
}

TEST_CASE("catcher pellet velocity grows by the step per task") {
  CHECK(make_task_spec(suite(EnvFamily::catcher), 1, 5).pellet_velocity == doctest::Approx(0.608).epsilon(1e-12));
  CHECK(make_task_spec(suite(EnvFamily::catcher), 5, 5).pellet_velocity == doctest::Approx(0.728).epsilon(1e-12));
}

TEST_CASE("room tasks follow the modifier order") {
  using namespace room_modifier;
  CHECK(room_modifiers_for_task(1) == 0u);
  CHECK(room_modifiers_for_task(2) == dark);
  CHECK(room_modifiers_for_task(3) == monsters);
  CHECK(room_modifiers_for_task(4) == traps);
  CHECK(room_modifiers_for_task(5) == (dark | monsters | traps));
}

TEST_CASE("task index outside the sequence is a config error") {
  CHECK_THROWS_AS(make_task_spec(suite(EnvFamily::catcher), 0, 2), ConfigError);
  CHECK_THROWS_AS(make_task_spec(suite(EnvFamily::catcher), 3, 2), ConfigError);
  CHECK_THROWS_AS(parse_env_family("pong"), ConfigError);
}

TEST_CASE("same seed and spec give the same episode stream") {
  for (auto family : {EnvFamily::room, EnvFamily::flappy, EnvFamily::catcher}) {
    const TaskSpec spec = make_task_spec(suite(family), 1, 1);
    auto a = make_env(spec, 42);
    auto b = make_env(spec, 42);
    CHECK(a->reset() == b->reset());
    for (int t = 0; t < 50; ++t) {
      const int action = t % a->action_count();
      const StepResult ra = a->step(action);
      const StepResult rb = b->step(action);
      CHECK(ra.observation == rb.observation);
      CHECK(ra.reward == rb.reward);
      if (ra.done) break;
    }
  }
}

TEST_CASE("out-of-range action is an input error") {
  for (auto family : {EnvFamily::room, EnvFamily::flappy, EnvFamily::catcher}) {
    auto env = make_env(make_task_spec(suite(family), 1, 1), 1);
    env->reset();
    CHECK_THROWS_AS(env->step(env->action_count()), InputError);
    CHECK_THROWS_AS(env->step(-1), InputError);
  }
}

TEST_CASE("room agent never starts on the goal") {
  const TaskSpec spec = make_task_spec(suite(EnvFamily::room), 1, 1);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto env = make_env(spec, seed);
    const RoomLayout l = decode_room(env->reset(), spec.room.grid_size);
    CHECK_FALSE((l.agent_r == l.goal_r && l.agent_c == l.goal_c));
  }
}

TEST_CASE("room shortest path of k steps returns 1 - k * 1e-3") {
  const TaskSpec spec = make_task_spec(suite(EnvFamily::room), 1, 1);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto env = make_env(spec, seed);
    const RoomLayout l = decode_room(env->reset(), spec.room.grid_size);
    const int k = std::max(std::abs(l.goal_r - l.agent_r), std::abs(l.goal_c - l.agent_c));
    int r = l.agent_r, c = l.agent_c;
    double total = 0.0;
    StepResult res;
    for (int s = 0; s < k; ++s) {
      const int dr = sign(l.goal_r - r), dc = sign(l.goal_c - c);
      res = env->step(move_action(dr, dc));
      r += dr;
      c += dc;
      total += res.reward;
      if (s + 1 < k) CHECK_FALSE(res.done);
    }
    CHECK(res.done);
    CHECK_FALSE(res.truncated);
    CHECK(res.reward == doctest::Approx(1.0 - 1e-3).epsilon(1e-12));
    CHECK(total == doctest::Approx(1.0 - k * 1e-3).epsilon(1e-12));
  }
}

TEST_CASE("catcher starts with three lives") {
  auto env = make_env(make_task_spec(suite(EnvFamily::catcher), 1, 1), 3);
  const Observation obs = env->reset();
  CHECK(obs.back() == 1.0);  // lives / max lives
}

TEST_CASE("catcher miss on the last life gives -1 and ends the episode") {
  EnvSuiteConfig s = suite(EnvFamily::catcher);
  s.catcher.lives = 1;
  auto env = make_env(make_task_spec(s, 1, 1), 8);
  Observation obs = env->reset();
  for (int t = 0; t < 1000; ++t) {
    // Run away from the fruit.
    const StepResult res = env->step(obs[1] > obs[0] ? 0 : 1);
    if (res.reward != 0.0) {
      CHECK(res.reward == -1.0);
      CHECK(res.done);
      CHECK_FALSE(res.truncated);
      return;
    }
    CHECK_FALSE(res.done);
    obs = res.observation;
  }
  FAIL("fruit never landed");
}

TEST_CASE("catcher max return counts fruits that land before the cap") {
  const TaskSpec spec = make_task_spec(suite(EnvFamily::catcher), 1, 1);
  // 0.608 * 0.05 = 0.0304 per step: 33 steps per fruit, 500 / 33 = 15.
  CHECK(catcher_max_return(spec) == 15.0);
}

TEST_CASE("skip 1, stack 1 wrapper is the identity") {
  const TaskSpec spec = make_task_spec(suite(EnvFamily::catcher), 1, 1);
  auto raw = make_env(spec, 5);
  FrameWrapper wrapped(make_env(spec, 5), 1, 1);
  CHECK(wrapped.reset() == raw->reset());
  for (int t = 0; t < 40; ++t) {
    const StepResult a = raw->step(t % 2);
    const StepResult b = wrapped.step(t % 2);
    CHECK(a.observation == b.observation);
    CHECK(a.reward == b.reward);
    CHECK(a.done == b.done);
  }
}

TEST_CASE("stack 4 at episode start pads with three zero frames") {
  FrameWrapper env(std::make_unique<CountingEnv>(100), 1, 4);
  CHECK(env.reset() == Observation{0, 0, 0, 0});
  CHECK(env.step(0).observation == Observation{0, 0, 0, 1});
  env.step(0);
  env.step(0);
  CHECK(env.step(0).observation == Observation{1, 2, 3, 4});

  const std::deque<Observation> history{{7.0, 8.0}};
  CHECK(stack_frames(history, 3, 2) == Observation{0, 0, 0, 0, 7, 8});
}

TEST_CASE("skip 4 with the episode ending at sub-step 2 sums two rewards") {
  FrameWrapper env(std::make_unique<CountingEnv>(2), 4, 1);
  env.reset();
  const StepResult res = env.step(1);
  CHECK(res.reward == 2.0);
  CHECK(res.done);
  CHECK(res.observation == Observation{2.0});
  CHECK(env.env().steps() == 2);
}

TEST_CASE("wrapper rejects non-positive skip or stack") {
  CHECK_THROWS_AS(FrameWrapper(std::make_unique<CountingEnv>(2), 0, 1), ConfigError);
  CHECK_THROWS_AS(FrameWrapper(std::make_unique<CountingEnv>(2), 1, 0), ConfigError);
}

TEST_CASE("episodes end at the step cap as truncations") {
  EnvSuiteConfig s = suite(EnvFamily::catcher);
  s.episode_cap = 5;
  auto env = make_env(make_task_spec(s, 1, 1), 2);
  env->reset();
  for (int t = 1; t < 5; ++t) CHECK_FALSE(env->step(0).done);
  const StepResult last = env->step(0);
  CHECK(last.done);
  CHECK(last.truncated);
}
