#pragma once

// Private-input redistribution: per-worker radix histograms, prefix-sum write
// cursors, and a scatter that writes each worker's chunk into precomputed,
// disjoint regions of the target runs.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mpsm/core.hpp"

namespace mpsm {

/// min(B, dom.width_bits()); `warning` receives a message when clamping happened.
unsigned effective_radix_bits(unsigned radix_bits, const KeyDomain& dom, std::string* warning = nullptr);

/// Top `radix_bits` bits of (key - lower), aligned to the domain width.
/// No domain check; callers must have validated the key.
inline std::size_t radix_bucket(Key key, const KeyDomain& dom, unsigned radix_bits) noexcept {
  if (radix_bits == 0) return 0;
  return static_cast<std::size_t>((key - dom.lower()) >> (dom.width_bits() - radix_bits));
}

/// Checked radix_bucket. Throws DomainError for keys outside `dom` and
/// ConfigError when radix_bits exceeds the domain width.
std::size_t normalize_key(Key key, const KeyDomain& dom, unsigned radix_bits);

/// Smallest raw key that falls into `bucket`; bucket == 2^B (or any bucket
/// past the end of the domain) maps to dom.upper().
Key bucket_lower_key(std::size_t bucket, const KeyDomain& dom, unsigned radix_bits);

struct RadixHistogram {
  unsigned radix_bits = 0;
  std::vector<std::uint64_t> counts;

  std::uint64_t total() const;
};

RadixHistogram build_radix_histogram(std::span<const Tuple> chunk, const KeyDomain& dom,
                                     unsigned radix_bits);

/// Element-wise sum of equally sized histograms.
RadixHistogram sum_histograms(std::span<const RadixHistogram> histograms);

/// Non-decreasing map from radix bucket to target partition.
class SplitterVector {
 public:
  SplitterVector() = default;
  SplitterVector(std::vector<std::uint32_t> bucket_to_partition, unsigned partitions);

  /// One partition per bucket.
  static SplitterVector identity(unsigned radix_bits);
  /// `first_buckets[p-1]` is the first bucket of partition p (p = 1..P-1).
  static SplitterVector from_first_buckets(std::span<const std::size_t> first_buckets,
                                           unsigned radix_bits);

  std::uint32_t operator[](std::size_t bucket) const { return map_[bucket]; }
  std::size_t buckets() const noexcept { return map_.size(); }
  unsigned partitions() const noexcept { return partitions_; }
  const std::vector<std::uint32_t>& map() const noexcept { return map_; }

 private:
  std::vector<std::uint32_t> map_;
  unsigned partitions_ = 0;
};

/// Per (worker, partition) tuple counts and initial write offsets.
struct PartitionPlan {
  unsigned workers = 0;
  unsigned partitions = 0;
  std::vector<std::uint64_t> counts;   // row-major [worker][partition]
  std::vector<std::uint64_t> cursors;  // initial offsets, same layout
  std::vector<std::uint64_t> run_sizes;

  std::uint64_t count(unsigned worker, unsigned part) const { return counts[worker * partitions + part]; }
  std::uint64_t begin(unsigned worker, unsigned part) const { return cursors[worker * partitions + part]; }
  std::uint64_t end(unsigned worker, unsigned part) const { return begin(worker, part) + count(worker, part); }
  /// Initial cursor row for one worker.
  std::span<const std::uint64_t> cursor_row(unsigned worker) const {
    return std::span(cursors).subspan(std::size_t{worker} * partitions, partitions);
  }
};

PartitionPlan combine_prefix_cursors(std::span<const RadixHistogram> histograms, const SplitterVector& sp);

/// Throws ConsistencyError unless, for every partition, the worker regions are
/// pairwise disjoint and exactly tile [0, run_size).
void verify_disjoint_regions(const PartitionPlan& plan);

/// Copies every tuple of `chunk` to runs[sp[bucket]] at this worker's cursor.
/// Throws ConsistencyError if a cursor would leave the worker's region.
/// Returns the number of tuples written.
std::uint64_t scatter(std::span<const Tuple> chunk, const PartitionPlan& plan, unsigned worker,
                      const SplitterVector& sp, const KeyDomain& dom, unsigned radix_bits,
                      std::span<const std::span<Tuple>> runs);

}  // namespace mpsm
