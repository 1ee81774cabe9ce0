#pragma once

// Skew handling for the range-partitioned join: equi-height bounds of each
// sorted public run, their merge into a global step CDF, and the choice of
// radix-granular splitters that minimize the largest per-partition cost.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mpsm/core.hpp"
#include "mpsm/partition.hpp"

namespace mpsm {

struct LocalBounds {
  /// f*T keys taken at equi-height positions of the run; empty for an empty run.
  std::vector<Key> keys;
  std::uint64_t run_size = 0;

  /// Number of tuples each bound stands for in the CDF.
  double step_height() const {
    return keys.empty() ? 0.0 : static_cast<double>(run_size) / static_cast<double>(keys.size());
  }
};

/// Keys at positions ceil(n*m/(f*T)) - 1 for m = 1..f*T, clamped to the run.
LocalBounds local_equiheight_bounds(std::span<const Tuple> run, unsigned fanout, unsigned threads);

class Cdf {
 public:
  struct Step {
    Key key;
    double cumulative;
  };

  Cdf() = default;
  Cdf(std::vector<Step> steps, std::uint64_t total, Key origin);

  /// Estimated number of tuples with key <= probe. Linear between steps,
  /// anchored at (origin, 0) below the first step, |S| from the last step on.
  double operator()(Key probe) const;

  const std::vector<Step>& steps() const noexcept { return steps_; }
  std::uint64_t total() const noexcept { return total_; }
  Key origin() const noexcept { return origin_; }

 private:
  std::vector<Step> steps_;
  std::uint64_t total_ = 0;
  Key origin_ = 0;
};

/// Merges all workers' bounds; each bound adds a step of run_size/(f*T).
/// `origin` is where the function starts at zero (the key domain's lower bound).
Cdf build_cdf(std::span<const LocalBounds> bounds, Key origin);

inline double cdf_eval(const Cdf& cdf, Key probe) { return cdf(probe); }

/// |R_i|*log2|R_i| + T*|R_i| + s_span, with 0*log(0) = 0.
double split_relevant_cost(std::uint64_t private_size, unsigned threads, double public_span);

struct SplitterSet {
  /// T-1 strictly increasing splitter keys; partition p holds keys in
  /// [lower_keys[p], upper_keys[p]).
  std::vector<Key> splitters;
  /// First radix bucket of partitions 1..T-1.
  std::vector<std::size_t> first_buckets;
  SplitterVector vector;
  std::vector<Key> lower_keys;
  std::vector<Key> upper_keys;
  std::vector<std::uint64_t> private_sizes;
  std::vector<double> public_spans;
  std::vector<double> costs;
  double max_cost = 0.0;

  double mean_cost() const;
};

/// Evaluates a given contiguous bucket assignment; used by compute_splitters
/// and for contrast baselines.
SplitterSet evaluate_splitters(std::span<const std::size_t> first_buckets, const RadixHistogram& r_hist,
                               const Cdf& cdf, unsigned threads, const KeyDomain& dom);

/// Contiguous assignment of the 2^B buckets of `r_hist` to `threads`
/// partitions (each at least one bucket) minimizing the maximum
/// split_relevant_cost; ties go to the lexicographically smallest splitters.
/// Throws ConfigError when 2^B < threads.
SplitterSet compute_splitters(const RadixHistogram& r_hist, const Cdf& cdf, unsigned threads,
                              const KeyDomain& dom);

/// Baseline that balances |R_i| only, ignoring the public side.
SplitterSet equal_cardinality_splitters(const RadixHistogram& r_hist, const Cdf& cdf, unsigned threads,
                                        const KeyDomain& dom);

}  // namespace mpsm
