#include "mpsm/sorter.hpp"

namespace mpsm {

RadixBoundaries radix_msd_pass(std::span<Tuple> tuples, const KeyDomain& dom) {
  std::array<std::size_t, msd_radix_buckets> counts{};
  for (const Tuple& t : tuples) ++counts[msd_bucket(t.key, dom)];

  RadixBoundaries bounds;
  std::size_t sum = 0;
  for (std::size_t k = 0; k < msd_radix_buckets; ++k) {
    bounds.offsets[k] = sum;
    sum += counts[k];
  }
  bounds.offsets[msd_radix_buckets] = sum;

  // Rounds of direct swaps: every tuple in a bucket's unfinished range is sent
  // to the next free slot of its own bucket. Swaps within a round do not
  // depend on each other, and each round shrinks the unfinished ranges.
  std::array<std::size_t, msd_radix_buckets> next;
  std::copy(bounds.offsets.begin(), bounds.offsets.end() - 1, next.begin());
  std::array<unsigned, msd_radix_buckets> pending;
  std::size_t npending = 0;
  for (unsigned k = 0; k < msd_radix_buckets; ++k)
    if (counts[k] != 0) pending[npending++] = k;
  while (npending > 1) {
    std::size_t kept = 0;
    for (std::size_t p = 0; p < npending; ++p) {
      const unsigned k = pending[p];
      const std::size_t end = bounds.offsets[k + 1];
      for (std::size_t i = next[k]; i < end; ++i) {
        const unsigned b = msd_bucket(tuples[i].key, dom);
        std::swap(tuples[i], tuples[next[b]++]);
      }
      if (next[k] != end) pending[kept++] = k;
    }
    npending = kept;
  }
  return bounds;
}

void introsort(std::span<Tuple> segment, SortStats* stats) {
  SortStats local;
  detail::introsort(segment, detail::KeyLess{}, stats ? *stats : local);
}

void insertion_sort(std::span<Tuple> tuples) { detail::insertion_sort(tuples, detail::KeyLess{}); }

void sort_tuples(std::span<Tuple> tuples, const KeyDomain& dom, SortStats* stats) {
  SortStats local;
  SortStats& st = stats ? *stats : local;
  if (tuples.size() < 2) return;
  const RadixBoundaries bounds = radix_msd_pass(tuples, dom);
  for (std::size_t k = 0; k < msd_radix_buckets; ++k) {
    if (bounds.size(k) >= insertion_threshold)
      detail::introsort(tuples.subspan(bounds.begin(k), bounds.size(k)), detail::KeyLess{}, st);
  }
  detail::insertion_sort(tuples, detail::KeyLess{});
}

Run sort_run(std::vector<Tuple> tuples, const KeyDomain& dom, std::size_t origin_worker,
             SortStats* stats) {
  sort_tuples(tuples, dom, stats);
  return Run{std::move(tuples), origin_worker};
}

}  // namespace mpsm
