#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace sparrl {

using Rng = std::mt19937_64;

/// Independent generator for a named subsystem, derived from one master seed.
/// Changing how many draws one stream makes never shifts another stream.
Rng make_stream(std::uint64_t master_seed, std::string_view name);

/// Derives a child seed (e.g. per episode, per grid cell) from a parent seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view name, std::uint64_t index = 0);

/// Uniform integer in [0, n).
std::size_t uniform_index(Rng &rng, std::size_t n);

/// Uniform integer in [lo, hi].
std::int64_t uniform_int(Rng &rng, std::int64_t lo, std::int64_t hi);

/// Uniform real in [0, 1).
double uniform_unit(Rng &rng);

std::string serialize_rng(const Rng &rng);
Rng deserialize_rng(const std::string &state);

} // namespace sparrl
