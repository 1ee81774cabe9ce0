#include "mpsm/partition.hpp"

#include <algorithm>

namespace mpsm {

unsigned effective_radix_bits(unsigned radix_bits, const KeyDomain& dom, std::string* warning) {
  if (radix_bits <= dom.width_bits()) return radix_bits;
  if (warning) {
    *warning = "radix bits clamped from " + std::to_string(radix_bits) + " to key domain width " +
               std::to_string(dom.width_bits());
  }
  return dom.width_bits();
}

std::size_t normalize_key(Key key, const KeyDomain& dom, unsigned radix_bits) {
  if (radix_bits > dom.width_bits()) {
    throw ConfigError("radix bits " + std::to_string(radix_bits) + " exceed key domain width " +
                      std::to_string(dom.width_bits()));
  }
  if (!dom.contains(key)) {
    throw DomainError("key " + std::to_string(key) + " outside domain [" + std::to_string(dom.lower()) +
                      ", " + std::to_string(dom.upper()) + ")");
  }
  return radix_bucket(key, dom, radix_bits);
}

Key bucket_lower_key(std::size_t bucket, const KeyDomain& dom, unsigned radix_bits) {
  if (radix_bits == 0) return bucket == 0 ? dom.lower() : dom.upper();
  const unsigned shift = dom.width_bits() - radix_bits;
  if (bucket >= (std::size_t{1} << radix_bits)) return dom.upper();
  const std::uint64_t offset = static_cast<std::uint64_t>(bucket) << shift;
  if (offset >= dom.width()) return dom.upper();
  return dom.lower() + offset;
}

std::uint64_t RadixHistogram::total() const {
  std::uint64_t s = 0;
  for (auto c : counts) s += c;
  return s;
}

RadixHistogram build_radix_histogram(std::span<const Tuple> chunk, const KeyDomain& dom,
                                     unsigned radix_bits) {
  RadixHistogram h{radix_bits, std::vector<std::uint64_t>(std::size_t{1} << radix_bits, 0)};
  for (const Tuple& t : chunk) ++h.counts[normalize_key(t.key, dom, radix_bits)];
  return h;
}

RadixHistogram sum_histograms(std::span<const RadixHistogram> histograms) {
  if (histograms.empty()) return {};
  RadixHistogram sum{histograms.front().radix_bits,
                     std::vector<std::uint64_t>(histograms.front().counts.size(), 0)};
  for (const auto& h : histograms) {
    if (h.counts.size() != sum.counts.size()) throw ConsistencyError("histogram sizes differ");
    for (std::size_t b = 0; b < h.counts.size(); ++b) sum.counts[b] += h.counts[b];
  }
  return sum;
}

SplitterVector::SplitterVector(std::vector<std::uint32_t> bucket_to_partition, unsigned partitions)
    : map_(std::move(bucket_to_partition)), partitions_(partitions) {
  for (std::size_t b = 0; b < map_.size(); ++b) {
    if (map_[b] >= partitions_) throw ConfigError("splitter vector maps past the partition count");
    if (b > 0 && map_[b] < map_[b - 1]) throw ConfigError("splitter vector must be non-decreasing");
  }
}

SplitterVector SplitterVector::identity(unsigned radix_bits) {
  const std::size_t n = std::size_t{1} << radix_bits;
  std::vector<std::uint32_t> map(n);
  for (std::size_t b = 0; b < n; ++b) map[b] = static_cast<std::uint32_t>(b);
  return SplitterVector(std::move(map), static_cast<unsigned>(n));
}

SplitterVector SplitterVector::from_first_buckets(std::span<const std::size_t> first_buckets,
                                                  unsigned radix_bits) {
  const std::size_t n = std::size_t{1} << radix_bits;
  std::vector<std::uint32_t> map(n, 0);
  std::uint32_t part = 0;
  std::size_t next = 0;
  for (std::size_t b = 0; b < n; ++b) {
    while (next < first_buckets.size() && first_buckets[next] <= b) {
      ++part;
      ++next;
    }
    map[b] = part;
  }
  return SplitterVector(std::move(map), static_cast<unsigned>(first_buckets.size() + 1));
}

PartitionPlan combine_prefix_cursors(std::span<const RadixHistogram> histograms, const SplitterVector& sp) {
  PartitionPlan plan;
  plan.workers = static_cast<unsigned>(histograms.size());
  plan.partitions = sp.partitions();
  plan.counts.assign(std::size_t{plan.workers} * plan.partitions, 0);
  plan.cursors.assign(plan.counts.size(), 0);
  plan.run_sizes.assign(plan.partitions, 0);

  for (unsigned i = 0; i < plan.workers; ++i) {
    const auto& h = histograms[i];
    if (h.counts.size() != sp.buckets()) {
      throw ConfigError("histogram of worker " + std::to_string(i) + " has " +
                        std::to_string(h.counts.size()) + " buckets, splitter vector has " +
                        std::to_string(sp.buckets()));
    }
    for (std::size_t b = 0; b < h.counts.size(); ++b) plan.counts[i * plan.partitions + sp[b]] += h.counts[b];
  }
  // Worker i starts where workers 0..i-1 end within each partition.
  for (unsigned j = 0; j < plan.partitions; ++j) {
    std::uint64_t offset = 0;
    for (unsigned i = 0; i < plan.workers; ++i) {
      plan.cursors[i * plan.partitions + j] = offset;
      offset += plan.counts[i * plan.partitions + j];
    }
    plan.run_sizes[j] = offset;
  }
  return plan;
}

void verify_disjoint_regions(const PartitionPlan& plan) {
  for (unsigned j = 0; j < plan.partitions; ++j) {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> regions;
    for (unsigned i = 0; i < plan.workers; ++i)
      if (plan.count(i, j) > 0) regions.emplace_back(plan.begin(i, j), plan.end(i, j));
    std::sort(regions.begin(), regions.end());
    std::uint64_t covered = 0;
    for (auto [b, e] : regions) {
      if (b != covered) {
        throw ConsistencyError("partition " + std::to_string(j) + ": write regions " +
                               (b < covered ? "overlap" : "leave a gap") + " at offset " + std::to_string(b));
      }
      covered = e;
    }
    if (covered != plan.run_sizes[j]) {
      throw ConsistencyError("partition " + std::to_string(j) + ": regions cover " + std::to_string(covered) +
                             " of " + std::to_string(plan.run_sizes[j]) + " slots");
    }
  }
}

std::uint64_t scatter(std::span<const Tuple> chunk, const PartitionPlan& plan, unsigned worker,
                      const SplitterVector& sp, const KeyDomain& dom, unsigned radix_bits,
                      std::span<const std::span<Tuple>> runs) {
  if (worker >= plan.workers) throw ConfigError("worker index out of range");
  if (runs.size() != plan.partitions) throw ConfigError("target run count does not match the plan");

  std::vector<std::uint64_t> cursor(plan.partitions);
  std::vector<std::uint64_t> limit(plan.partitions);
  for (unsigned j = 0; j < plan.partitions; ++j) {
    cursor[j] = plan.begin(worker, j);
    limit[j] = std::min<std::uint64_t>(plan.end(worker, j), runs[j].size());
  }
  const std::uint32_t* part_of = sp.map().data();
  for (const Tuple& t : chunk) {
    const std::uint32_t p = part_of[radix_bucket(t.key, dom, radix_bits)];
    const std::uint64_t pos = cursor[p]++;
    if (pos >= limit[p]) [[unlikely]] {
      throw ConsistencyError("scatter cursor of worker " + std::to_string(worker) + " overflows partition " +
                             std::to_string(p) + " (histogram does not match chunk)");
    }
    runs[p][pos] = t;
  }
  return chunk.size();
}

}  // namespace mpsm
