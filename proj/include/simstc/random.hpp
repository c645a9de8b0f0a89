#pragma once

#include <cstdint>
#include <random>

namespace simstc {

// Independent, reproducible random streams. Stream k of root seed s is an
// mt19937_64 seeded through std::seed_seq{s_lo, s_hi, k_lo, k_hi}; both the
// engine and seed_seq are fully specified by the standard, so streams are
// identical on every conforming platform.
std::mt19937_64 make_stream(std::uint64_t root_seed, std::uint64_t stream_id);

// Uniform in [lo, hi) from the top 53 bits of one draw. Not
// std::uniform_real_distribution, whose algorithm is implementation-defined.
double uniform(std::mt19937_64& rng, double lo, double hi);

}  // namespace simstc
