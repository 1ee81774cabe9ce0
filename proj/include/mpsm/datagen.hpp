#pragma once

// Deterministic dataset generators and the hash-join ground truth.
//
// All randomness comes from SplitMix64 (Steele, Lea & Flood 2014), seeded
// directly with GenSpec::seed. Draws per tuple, in order:
//   uniform:  key = lower + hi64(next() * width), payload = next() >> 32
//   80:20:    segment draw (next() >> 11) * 2^-53 < 0.8 picks the tail,
//             then key uniform inside the chosen segment, then payload.

#include <cstddef>
#include <cstdint>
#include <string>

#include "mpsm/core.hpp"

namespace mpsm {

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Value in [0, bound) via the high half of a 64x64 multiply.
  std::uint64_t below(std::uint64_t bound) noexcept {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next()) * bound) >> 64);
  }

  /// Uniform double in [0, 1).
  double unit() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

enum class Distribution { uniform, skew_high, skew_low, location_sorted };

std::string to_string(Distribution d);
Distribution parse_distribution(const std::string& s);

struct GenSpec {
  std::size_t cardinality = 0;
  KeyDomain domain{};
  Distribution distribution = Distribution::uniform;
  std::uint64_t seed = 0;
  /// Only used by location_sorted.
  unsigned clusters = 1;
};

inline constexpr double skew_tail_fraction = 0.2;
inline constexpr double skew_tail_mass = 0.8;

Relation gen_uniform(const GenSpec& spec);

/// 80% of keys uniform in the top (high) or bottom (low) 20% of the domain,
/// the rest uniform in the remaining 80%.
Relation gen_skewed_8020(const GenSpec& spec, bool high);

/// Reorders `rel` so chunk i of `clusters` holds the i-th key quantile range,
/// shuffled inside each chunk.
Relation gen_location_skew(const Relation& rel, unsigned clusters, std::uint64_t seed = 0);

/// Dispatches on spec.distribution. location_sorted draws uniform keys and
/// clusters them into spec.clusters chunks.
Relation generate(const GenSpec& spec);

/// Single-threaded hash join: builds on the smaller input, probes with the
/// larger. Aggregate is max(r.payload + s.payload) with wrap-around addition.
JoinResult hash_join_oracle(const Relation& r, const Relation& s, QueryMode mode,
                            std::size_t materialize_limit = std::size_t{1} << 24);

}  // namespace mpsm
