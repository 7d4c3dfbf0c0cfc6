#pragma once

#include <cstdint>
#include <random>

namespace ruelle {

std::uint64_t splitmix64(std::uint64_t x);

// Seed of stream `stream` under master seed `master`; streams are keyed by
// index, so the work assigned to a stream never depends on thread layout.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

std::mt19937_64 make_stream(std::uint64_t master, std::uint64_t stream);

// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

}  // namespace ruelle
