#include "typolab/rng.hpp"

#include <limits>

namespace typolab {

std::uint64_t Rng::uniform_below(std::uint64_t bound) {
  if (bound <= 1) return 0;
  constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
  // 2^64 mod bound; draws in the last partial block are rejected.
  const std::uint64_t rem = (kMax % bound + 1) % bound;
  std::uint64_t x = next();
  if (rem != 0) {
    const std::uint64_t cutoff = 0 - rem;
    while (x >= cutoff) x = next();
  }
  return x % bound;
}

}  // namespace typolab
