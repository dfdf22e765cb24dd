#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace zenosde {

using Rng = std::mt19937_64;

/// Derives independent random streams from a master seed and an integer key
/// (path index, sub-stream tag, ...). A stream depends only on the seed and
/// the key, never on the order in which streams are requested, which is what
/// makes parallel ensembles reproducible.
struct RngPolicy {
  std::uint64_t master_seed = 0;

  Rng stream(std::initializer_list<std::uint64_t> key) const;
};

// Sub-stream tags. Regime timing uses its own stream so the chain path does
// not change with the integration step size.
inline constexpr std::uint64_t kChainStream = 1;
inline constexpr std::uint64_t kMarkStream = 2;
inline constexpr std::uint64_t kNoiseStream = 3;

/// The three streams a single hybrid path consumes.
struct PathStreams {
  Rng chain;
  Rng marks;
  Rng noise;

  /// Streams for path `index` under `policy`; `domain` separates unrelated
  /// users of the same master seed (ensembles, nested estimators, ...).
  static PathStreams derive(const RngPolicy& policy, std::uint64_t domain, std::uint64_t index);
};

}  // namespace zenosde
