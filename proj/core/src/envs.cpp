#include "cyclerl/envs.hpp"

#include "cyclerl/errors.hpp"
#include "env_impl.hpp"

namespace cyclerl {

std::string to_string(EnvFamily family) {
  switch (family) {
    case EnvFamily::room: return "room";
    case EnvFamily::flappy: return "flappy";
    case EnvFamily::catcher: return "catcher";
  }
  return "unknown";
}

EnvFamily parse_env_family(const std::string& name) {
  if (name == "room") return EnvFamily::room;
  if (name == "flappy") return EnvFamily::flappy;
  if (name == "catcher") return EnvFamily::catcher;
  throw ConfigError("unknown environment family '" + name + "' (expected room, flappy or catcher)");
}

int default_episode_cap(EnvFamily family) {
  switch (family) {
    case EnvFamily::room: return 200;
    case EnvFamily::flappy: return 1000;
    case EnvFamily::catcher: return 500;
  }
  return 0;
}

unsigned room_modifiers_for_task(int task_index) {
  using namespace room_modifier;
  switch ((task_index - 1) % 5) {
    case 0: return 0;
    case 1: return dark;
    case 2: return monsters;
    case 3: return traps;
    default: return dark | monsters | traps;
  }
}

TaskSpec make_task_spec(const EnvSuiteConfig& suite, int task_index, int sequence_length) {
  if (task_index < 1 || task_index > sequence_length) {
    throw ConfigError("task index " + std::to_string(task_index) + " outside sequence of length " +
                      std::to_string(sequence_length));
  }
  TaskSpec spec;
  spec.family = suite.family;
  spec.task_index = task_index;
  spec.step_cap = suite.episode_cap > 0 ? suite.episode_cap : default_episode_cap(suite.family);
  spec.room = suite.room;
  spec.flappy = suite.flappy;
  spec.catcher = suite.catcher;
  const double k = static_cast<double>(task_index - 1);
  switch (suite.family) {
    case EnvFamily::room:
      spec.room_modifiers = room_modifiers_for_task(task_index);
      break;
    case EnvFamily::flappy:
      spec.gap_size = suite.flappy.base_gap - k * suite.flappy.gap_step;
      if (!(spec.gap_size > 0.0)) {
        throw ConfigError("flappy task " + std::to_string(task_index) + " has non-positive gap_size");
      }
      break;
    case EnvFamily::catcher:
      spec.pellet_velocity = suite.catcher.base_velocity + k * suite.catcher.velocity_step;
      if (!(spec.pellet_velocity > 0.0)) {
        throw ConfigError("catcher task " + std::to_string(task_index) + " has non-positive pellet_velocity");
      }
      break;
  }
  return spec;
}

std::string task_name(const TaskSpec& spec) {
  switch (spec.family) {
    case EnvFamily::room: {
      static const char* names[] = {"Room-Random", "Room-Dark", "Room-Monsters", "Room-Trap", "Room-Ultimate"};
      return names[(spec.task_index - 1) % 5];
    }
    case EnvFamily::flappy: return "Flappy-T" + std::to_string(spec.task_index);
    case EnvFamily::catcher: return "Catcher-T" + std::to_string(spec.task_index);
  }
  return "unknown";
}

void Environment::check_action(int action) const {
  if (action < 0 || action >= action_count()) {
    throw InputError("action " + std::to_string(action) + " outside [0, " + std::to_string(action_count()) +
                     ") for " + to_string(spec_.family));
  }
}

int action_count(EnvFamily family) {
  switch (family) {
    case EnvFamily::room: return 8;
    case EnvFamily::flappy: return 2;
    case EnvFamily::catcher: return 2;
  }
  return 0;
}

std::size_t observation_size(const TaskSpec& spec) {
  switch (spec.family) {
    case EnvFamily::room: return detail::room_observation_size(spec);
    case EnvFamily::flappy: return detail::kFlappyObservationSize;
    case EnvFamily::catcher: return detail::kCatcherObservationSize;
  }
  return 0;
}

std::unique_ptr<Environment> make_env(const TaskSpec& spec, std::uint64_t seed) {
  if (spec.step_cap < 1) throw ConfigError("episode step cap must be at least 1");
  switch (spec.family) {
    case EnvFamily::room: return detail::make_room(spec, seed);
    case EnvFamily::flappy: return detail::make_flappy(spec, seed);
    case EnvFamily::catcher: return detail::make_catcher(spec, seed);
  }
  throw ConfigError("unknown environment family");
}

}  // namespace cyclerl
