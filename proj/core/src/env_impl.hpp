#pragma once

#include <memory>

#include "cyclerl/envs.hpp"

namespace cyclerl::detail {

std::unique_ptr<Environment> make_room(const TaskSpec& spec, std::uint64_t seed);
std::unique_ptr<Environment> make_flappy(const TaskSpec& spec, std::uint64_t seed);
std::unique_ptr<Environment> make_catcher(const TaskSpec& spec, std::uint64_t seed);

std::size_t room_observation_size(const TaskSpec& spec);
inline constexpr std::size_t kFlappyObservationSize = 5;
inline constexpr std::size_t kCatcherObservationSize = 5;

}  // namespace cyclerl::detail
