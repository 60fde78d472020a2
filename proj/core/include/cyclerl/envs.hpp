#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <string>
#include <vector>

#include "cyclerl/rng.hpp"

namespace cyclerl {

using Observation = std::vector<double>;

enum class EnvFamily { room, flappy, catcher };

std::string to_string(EnvFamily family);
EnvFamily parse_env_family(const std::string& name);

namespace room_modifier {
inline constexpr unsigned dark = 1u << 0;
inline constexpr unsigned monsters = 1u << 1;
inline constexpr unsigned traps = 1u << 2;
}  // namespace room_modifier

struct RoomParams {
  int grid_size = 9;  // including the border wall
  int visibility_radius = 1;
  int trap_count = 3;
  double step_penalty = 1e-3;
  double goal_reward = 1.0;
  bool operator==(const RoomParams&) const = default;
};

/// Flappy geometry. Gaps are quoted in arena pixels (arena_height tall) so the
/// task rule reads in the same units as the original game; the simulation
/// itself runs in a unit column.
struct FlappyParams {
  double base_gap = 100.0;
  double gap_step = 5.0;
  double arena_height = 512.0;
  double gravity = 0.004;
  double flap_velocity = 0.035;
  double max_speed = 0.06;
  int pipe_spacing = 24;
  double gap_margin = 0.05;
  bool operator==(const FlappyParams&) const = default;
};

struct CatcherParams {
  double base_velocity = 0.608;
  double velocity_step = 0.03;
  double fall_rate = 0.05;  // unit-heights per step per unit of pellet velocity
  double paddle_speed = 0.035;
  double paddle_width = 0.2;
  double fruit_width = 0.05;
  double velocity_scale = 1.0;  // observation normaliser for pellet velocity
  int lives = 3;
  bool operator==(const CatcherParams&) const = default;
};

/// Task-sequence settings shared by every task of a family.
struct EnvSuiteConfig {
  EnvFamily family = EnvFamily::catcher;
  int frame_skip = 4;
  int frame_stack = 4;
  int episode_cap = 0;  // 0 selects the family default
  RoomParams room;
  FlappyParams flappy;
  CatcherParams catcher;
  bool operator==(const EnvSuiteConfig&) const = default;
};

int default_episode_cap(EnvFamily family);

struct TaskSpec {
  EnvFamily family = EnvFamily::catcher;
  int task_index = 1;
  unsigned room_modifiers = 0;
  double gap_size = 0.0;
  double pellet_velocity = 0.0;
  int step_cap = 0;
  RoomParams room;
  FlappyParams flappy;
  CatcherParams catcher;
};

/// Difficulty for task `task_index` (1-based) of a sequence of `sequence_length`.
TaskSpec make_task_spec(const EnvSuiteConfig& suite, int task_index, int sequence_length);
std::string task_name(const TaskSpec& spec);

/// Room modifier set for a task: Random, Dark, Monsters, Traps, Ultimate.
unsigned room_modifiers_for_task(int task_index);

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
  bool truncated = false;  // done because the step cap was hit
};

class Environment {
 public:
  virtual ~Environment() = default;

  virtual Observation reset() = 0;
  virtual StepResult step(int action) = 0;

  [[nodiscard]] virtual std::size_t observation_size() const = 0;
  [[nodiscard]] virtual int action_count() const = 0;
  [[nodiscard]] virtual std::unique_ptr<Environment> clone() const = 0;

  [[nodiscard]] const TaskSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] int steps() const noexcept { return steps_; }

 protected:
  Environment(TaskSpec spec, std::uint64_t seed) : spec_(std::move(spec)), rng_(seed) {}
  void check_action(int action) const;

  TaskSpec spec_;
  Rng rng_;
  int steps_ = 0;
};

std::unique_ptr<Environment> make_env(const TaskSpec& spec, std::uint64_t seed);
int action_count(EnvFamily family);
std::size_t observation_size(const TaskSpec& spec);

/// Highest return a Catcher episode can reach before the step cap: one point
/// per fruit that lands in time.
double catcher_max_return(const TaskSpec& spec);

/// Concatenates the last `stack` frames of `history` (oldest first), padding
/// with zero frames of `frame_size` when fewer are available.
Observation stack_frames(const std::deque<Observation>& history, int stack, std::size_t frame_size);

/// Action repeat + observation stacking. The stacked observation is the last
/// `stack` post-skip frames, oldest first, zero-padded at episode start.
class FrameWrapper {
 public:
  FrameWrapper(std::unique_ptr<Environment> env, int skip, int stack);

  Observation reset();
  StepResult step(int action);

  [[nodiscard]] std::size_t observation_size() const;
  [[nodiscard]] int action_count() const { return env_->action_count(); }
  [[nodiscard]] const Environment& env() const { return *env_; }

 private:
  Observation stacked() const;

  std::unique_ptr<Environment> env_;
  int skip_;
  int stack_;
  std::deque<Observation> frames_;
};

}  // namespace cyclerl
