#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string>
#include <vector>

namespace cyclerl {

using Rng = std::mt19937_64;

/// Mixes a list of integers into one 64-bit seed (splitmix64 chain). Used to
/// give every environment instance and evaluation rollout its own stream.
std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts);

double uniform01(Rng& rng);
std::size_t uniform_index(Rng& rng, std::size_t n);

/// n distinct indices from [0, size), uniformly. When n >= size returns a
/// random permutation of all indices.
std::vector<std::size_t> sample_without_replacement(std::size_t size, std::size_t n, Rng& rng);

std::string rng_state(const Rng& rng);
void restore_rng_state(Rng& rng, const std::string& state);

}  // namespace cyclerl
