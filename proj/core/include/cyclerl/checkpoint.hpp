#pragma once

#include <cstdint>
#include <string>

#include "cyclerl/continual.hpp"

namespace cyclerl {

/// Versioned binary snapshot of a TrainerState. Doubles are stored as raw
/// host-order bytes so a restore is bit-exact on the same platform.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_network(const MlpNetwork& net);
std::string encode_optimizer(const AdamState& adam);
std::string encode_replay(const RingBuffer& buffer);
std::string encode_rehearsal(const RehearsalBuffer& rrb);

std::string encode_state(const TrainerState& state, std::uint64_t seed);
/// Restores into `state`, whose agent must already have the run's config.
/// Returns the seed stored in the snapshot.
std::uint64_t decode_state(const std::string& bytes, TrainerState& state);

}  // namespace cyclerl
