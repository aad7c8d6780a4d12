#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ndsense {

using Rng = std::mt19937_64;

/// Derives an independent seed for a named substream of a master seed.
///
/// Every consumer of randomness gets its own stream ("medium", "tracker-photons",
/// "odmr-photons", ...), and ensembles index into it, so a serial run and any
/// parallel split over indices draw identical numbers.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

/// Poisson draw for a per-call mean; mean <= 0 returns 0.
inline double poisson(Rng& rng, double mean) {
  if (!(mean > 0.0)) return 0.0;
  std::poisson_distribution<std::int64_t> dist(mean);
  return static_cast<double>(dist(rng));
}

}  // namespace ndsense
