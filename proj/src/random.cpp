#include "simstc/random.hpp"

namespace simstc {

std::mt19937_64 make_stream(std::uint64_t root_seed, std::uint64_t stream_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(root_seed), static_cast<std::uint32_t>(root_seed >> 32),
                    static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32)};
  return std::mt19937_64(seq);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * unit;
}

}  // namespace simstc
