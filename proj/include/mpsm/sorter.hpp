#pragma once

// Run generation sort: one in-place MSD radix pass on the top 8 significant
// key bits, introsort inside each bucket (quicksort bounded to 2*log2(N)
// levels, heapsort fallback, segments below 16 elements left alone), then one
// insertion-sort pass over the whole run.

#include <algorithm>
#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "mpsm/core.hpp"

namespace mpsm {

inline constexpr std::size_t insertion_threshold = 16;
inline constexpr unsigned msd_radix_bits = 8;
inline constexpr std::size_t msd_radix_buckets = std::size_t{1} << msd_radix_bits;

struct RadixBoundaries {
  /// offsets[k] is the start of bucket k; offsets[256] is the end of the sequence.
  std::array<std::size_t, msd_radix_buckets + 1> offsets{};

  std::size_t begin(std::size_t k) const { return offsets[k]; }
  std::size_t end(std::size_t k) const { return offsets[k + 1]; }
  std::size_t size(std::size_t k) const { return offsets[k + 1] - offsets[k]; }
};

struct SortStats {
  std::uint64_t heapsort_fallbacks = 0;
  std::uint64_t partition_steps = 0;
  unsigned max_depth = 0;
  /// Largest depth limit applied to any segment (2 * floor(log2 N)).
  unsigned depth_limit = 0;
};

/// Bucket of `key` for the MSD pass: top 8 bits of (key - lower) aligned to
/// the domain width. Domains narrower than 8 bits use fewer buckets.
inline unsigned msd_bucket(Key key, const KeyDomain& dom) noexcept {
  const Key norm = key - dom.lower();
  const unsigned w = dom.width_bits();
  return w > msd_radix_bits ? static_cast<unsigned>(norm >> (w - msd_radix_bits))
                            : static_cast<unsigned>(norm);
}

RadixBoundaries radix_msd_pass(std::span<Tuple> tuples, const KeyDomain& dom);

/// Partial sort: afterwards every segment shorter than insertion_threshold is
/// bounded by elements in final position; finish with insertion_sort.
void introsort(std::span<Tuple> segment, SortStats* stats = nullptr);

void insertion_sort(std::span<Tuple> tuples);

/// Full three-phase sort in place.
void sort_tuples(std::span<Tuple> tuples, const KeyDomain& dom, SortStats* stats = nullptr);

Run sort_run(std::vector<Tuple> tuples, const KeyDomain& dom, std::size_t origin_worker = 0,
             SortStats* stats = nullptr);

namespace detail {

inline unsigned introsort_depth_limit(std::size_t n) {
  return n < 2 ? 0 : 2 * (static_cast<unsigned>(std::bit_width(n)) - 1);
}

// Orders *a <= *b <= *c, then parks the median at *a so it serves as pivot
// and *c bounds the left-to-right scan.
template <class T, class Less>
void median_of_three_to_front(T* a, T* b, T* c, Less less) {
  if (less(*b, *a)) std::swap(*a, *b);
  if (less(*c, *b)) {
    std::swap(*b, *c);
    if (less(*b, *a)) std::swap(*a, *b);
  }
  std::swap(*a, *b);
}

template <class T, class Less>
T* hoare_partition(T* first, T* last, Less less) {
  median_of_three_to_front(first, first + (last - first) / 2, last - 1, less);
  T* lo = first + 1;
  T* hi = last;
  for (;;) {
    while (less(*lo, *first)) ++lo;
    --hi;
    while (less(*first, *hi)) --hi;
    if (!(lo < hi)) return lo;
    std::swap(*lo, *hi);
    ++lo;
  }
}

template <class T, class Less>
void introsort_loop(T* first, T* last, unsigned depth, unsigned limit, Less less, SortStats& st) {
  while (static_cast<std::size_t>(last - first) >= insertion_threshold) {
    st.max_depth = std::max(st.max_depth, depth);
    if (depth == limit) {
      ++st.heapsort_fallbacks;
      std::make_heap(first, last, less);
      std::sort_heap(first, last, less);
      return;
    }
    ++st.partition_steps;
    ++depth;
    T* cut = hoare_partition(first, last, less);
    introsort_loop(cut, last, depth, limit, less, st);
    last = cut;
  }
}

template <class T, class Less>
void introsort(std::span<T> seg, Less less, SortStats& st) {
  const unsigned limit = introsort_depth_limit(seg.size());
  st.depth_limit = std::max(st.depth_limit, limit);
  if (seg.size() < insertion_threshold) return;
  introsort_loop(seg.data(), seg.data() + seg.size(), 0, limit, less, st);
}

template <class T, class Less>
void insertion_sort(std::span<T> seg, Less less) {
  for (std::size_t i = 1; i < seg.size(); ++i) {
    T v = seg[i];
    std::size_t j = i;
    for (; j > 0 && less(v, seg[j - 1]); --j) seg[j] = seg[j - 1];
    seg[j] = v;
  }
}

struct KeyLess {
  bool operator()(const Tuple& a, const Tuple& b) const noexcept { return a.key < b.key; }
};

}  // namespace detail
}  // namespace mpsm
