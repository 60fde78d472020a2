#include <algorithm>
#include <array>
#include <cstdlib>

#include "cyclerl/errors.hpp"
#include "env_impl.hpp"

namespace cyclerl::detail {

namespace {

struct Cell {
  int r = 0;
  int c = 0;
  bool operator==(const Cell&) const = default;
};

// N, NE, E, SE, S, SW, W, NW
constexpr std::array<Cell, 8> kMoves{{{-1, 0}, {-1, 1}, {0, 1}, {1, 1}, {1, 0}, {1, -1}, {0, -1}, {-1, -1}}};

enum Plane { kAgent = 0, kGoal, kMonster, kTrap, kWall, kPlaneCount };

class RoomEnv final : public Environment {
 public:
  RoomEnv(const TaskSpec& spec, std::uint64_t seed) : Environment(spec, seed) {
    if (spec.room.grid_size < 4) throw ConfigError("room grid_size must be at least 4");
    size_ = spec.room.grid_size;
    const int interior = (size_ - 2) * (size_ - 2);
    const int needed = 3 + (has(room_modifier::traps) ? spec.room.trap_count : 0);
    if (needed > interior) throw ConfigError("room too small for its traps and monster");
  }

  Observation reset() override {
    steps_ = 0;
    traps_.clear();
    agent_ = random_free_cell();
    do {
      goal_ = random_free_cell();
    } while (goal_ == agent_);
    has_monster_ = has(room_modifier::monsters);
    if (has_monster_) {
      do {
        monster_ = random_free_cell();
      } while (monster_ == agent_ || monster_ == goal_);
    }
    if (has(room_modifier::traps)) {
      while (static_cast<int>(traps_.size()) < spec_.room.trap_count) {
        Cell t = random_free_cell();
        if (t == agent_ || t == goal_ || (has_monster_ && t == monster_) || is_trap(t)) continue;
        traps_.push_back(t);
      }
    }
    return observe();
  }

  StepResult step(int action) override {
    check_action(action);
    ++steps_;
    StepResult res;
    res.reward = -spec_.room.step_penalty;

    Cell target{agent_.r + kMoves[action].r, agent_.c + kMoves[action].c};
    if (is_wall(target)) target = agent_;
    if (is_trap(target)) target = teleport_cell();
    agent_ = target;

    if (agent_ == goal_) {
      res.reward += spec_.room.goal_reward;
      res.done = true;
    } else if (has_monster_ && monster_ == agent_) {
      res.reward = 0.0;
      res.done = true;
    } else if (has_monster_) {
      move_monster();
      if (monster_ == agent_) {
        res.reward = 0.0;
        res.done = true;
      }
    }
    if (!res.done && steps_ >= spec_.step_cap) {
      res.done = true;
      res.truncated = true;
    }
    res.observation = observe();
    return res;
  }

  std::size_t observation_size() const override { return room_observation_size(spec_); }
  int action_count() const override { return 8; }
  std::unique_ptr<Environment> clone() const override { return std::make_unique<RoomEnv>(*this); }

 private:
  bool has(unsigned modifier) const { return (spec_.room_modifiers & modifier) != 0; }
  bool is_wall(Cell c) const { return c.r <= 0 || c.c <= 0 || c.r >= size_ - 1 || c.c >= size_ - 1; }
  bool is_trap(Cell c) const { return std::find(traps_.begin(), traps_.end(), c) != traps_.end(); }

  Cell random_free_cell() {
    const int inner = size_ - 2;
    const int k = static_cast<int>(uniform_index(rng_, static_cast<std::size_t>(inner * inner)));
    return {1 + k / inner, 1 + k % inner};
  }

  Cell teleport_cell() {
    std::vector<Cell> free;
    for (int r = 1; r < size_ - 1; ++r)
      for (int c = 1; c < size_ - 1; ++c) {
        Cell cell{r, c};
        if (cell == goal_ || is_trap(cell) || (has_monster_ && cell == monster_)) continue;
        free.push_back(cell);
      }
    return free[uniform_index(rng_, free.size())];
  }

  void move_monster() {
    std::vector<Cell> options{monster_};
    for (const auto& m : kMoves) {
      Cell next{monster_.r + m.r, monster_.c + m.c};
      if (is_wall(next) || next == goal_ || is_trap(next)) continue;
      options.push_back(next);
    }
    monster_ = options[uniform_index(rng_, options.size())];
  }

  Observation observe() const {
    const std::size_t plane = static_cast<std::size_t>(size_ * size_);
    Observation obs(plane * kPlaneCount, 0.0);
    const bool dark = has(room_modifier::dark);
    const int radius = spec_.room.visibility_radius;
    auto visible = [&](Cell c) {
      return !dark || (std::abs(c.r - agent_.r) <= radius && std::abs(c.c - agent_.c) <= radius);
    };
    auto mark = [&](Plane p, Cell c) {
      if (p == kAgent || visible(c)) obs[p * plane + static_cast<std::size_t>(c.r * size_ + c.c)] = 1.0;
    };
    mark(kAgent, agent_);
    mark(kGoal, goal_);
    if (has_monster_) mark(kMonster, monster_);
    for (const auto& t : traps_) mark(kTrap, t);
    for (int r = 0; r < size_; ++r)
      for (int c = 0; c < size_; ++c)
        if (is_wall({r, c})) mark(kWall, {r, c});
    return obs;
  }

  int size_ = 9;
  Cell agent_;
  Cell goal_;
  Cell monster_;
  bool has_monster_ = false;
  std::vector<Cell> traps_;
};

}  // namespace

std::size_t room_observation_size(const TaskSpec& spec) {
  const auto g = static_cast<std::size_t>(spec.room.grid_size);
  return g * g * kPlaneCount;
}

std::unique_ptr<Environment> make_room(const TaskSpec& spec, std::uint64_t seed) {
  return std::make_unique<RoomEnv>(spec, seed);
}

}  // namespace cyclerl::detail
