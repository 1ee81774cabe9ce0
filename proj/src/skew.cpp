#include "mpsm/skew.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

namespace mpsm {

LocalBounds local_equiheight_bounds(std::span<const Tuple> run, unsigned fanout, unsigned threads) {
  const std::uint64_t k = std::uint64_t{fanout} * threads;
  if (k == 0) throw ConfigError("equi-height histogram needs at least one bound");
  LocalBounds lb;
  lb.run_size = run.size();
  if (run.empty()) return lb;
  const std::uint64_t n = run.size();
  lb.keys.reserve(k);
  for (std::uint64_t m = 1; m <= k; ++m) {
    std::uint64_t pos = (n * m + k - 1) / k;  // ceil(n*m/k) >= 1 since n, m >= 1
    pos = std::min(pos - 1, n - 1);
    lb.keys.push_back(run[pos].key);
  }
  return lb;
}

Cdf::Cdf(std::vector<Step> steps, std::uint64_t total, Key origin)
    : steps_(std::move(steps)), total_(total), origin_(origin) {}

double Cdf::operator()(Key probe) const {
  if (steps_.empty()) return 0.0;
  auto it = std::lower_bound(steps_.begin(), steps_.end(), probe,
                             [](const Step& s, Key k) { return s.key < k; });
  if (it == steps_.end()) return static_cast<double>(total_);
  if (it->key == probe) return it->cumulative;
  Key left_key = origin_;
  double left_val = 0.0;
  if (it != steps_.begin()) {
    left_key = std::prev(it)->key;
    left_val = std::prev(it)->cumulative;
  }
  if (probe <= left_key) return left_val;
  const double frac = static_cast<double>(probe - left_key) / static_cast<double>(it->key - left_key);
  return left_val + frac * (it->cumulative - left_val);
}

Cdf build_cdf(std::span<const LocalBounds> bounds, Key origin) {
  struct Entry {
    Key key;
    double height;
  };
  std::vector<Entry> entries;
  std::uint64_t total = 0;
  for (const auto& lb : bounds) {
    total += lb.run_size;
    const double h = lb.step_height();
    for (Key k : lb.keys) entries.push_back({k, h});
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.key < b.key; });

  std::vector<Cdf::Step> steps;
  double acc = 0.0;
  for (const auto& e : entries) {
    acc += e.height;
    if (!steps.empty() && steps.back().key == e.key)
      steps.back().cumulative = acc;
    else
      steps.push_back({e.key, acc});
  }
  // The last step carries the whole mass; avoid leaving rounding residue.
  if (!steps.empty()) steps.back().cumulative = static_cast<double>(total);
  return Cdf(std::move(steps), total, origin);
}

double split_relevant_cost(std::uint64_t private_size, unsigned threads, double public_span) {
  const double r = static_cast<double>(private_size);
  const double sort = private_size > 1 ? r * std::log2(r) : 0.0;
  return sort + static_cast<double>(threads) * r + public_span;
}

double SplitterSet::mean_cost() const {
  if (costs.empty()) return 0.0;
  double s = 0.0;
  for (double c : costs) s += c;
  return s / static_cast<double>(costs.size());
}

namespace {

// Bucket-edge tables shared by the optimizer and evaluation so both see
// bit-identical segment costs.
struct SegmentCosts {
  std::vector<std::uint64_t> prefix;  // prefix[e] = tuples in buckets [0, e)
  std::vector<double> edge_cdf;       // cdf at the lower key of bucket e
  std::vector<Key> edge_key;
  unsigned threads;

  SegmentCosts(const RadixHistogram& r_hist, const Cdf& cdf, unsigned t, const KeyDomain& dom) : threads(t) {
    const std::size_t n = r_hist.counts.size();
    prefix.assign(n + 1, 0);
    edge_cdf.assign(n + 1, 0.0);
    edge_key.assign(n + 1, 0);
    for (std::size_t e = 0; e <= n; ++e) {
      if (e > 0) prefix[e] = prefix[e - 1] + r_hist.counts[e - 1];
      edge_key[e] = e == n ? dom.upper() : bucket_lower_key(e, dom, r_hist.radix_bits);
      edge_cdf[e] = cdf(edge_key[e]);
    }
  }

  std::size_t buckets() const { return prefix.size() - 1; }
  double span(std::size_t a, std::size_t b) const { return edge_cdf[b] - edge_cdf[a]; }
  double operator()(std::size_t a, std::size_t b) const {
    return split_relevant_cost(prefix[b] - prefix[a], threads, span(a, b));
  }
};

SplitterSet evaluate(std::span<const std::size_t> first_buckets, const SegmentCosts& seg,
                     const KeyDomain& dom, unsigned radix_bits) {
  SplitterSet set;
  set.first_buckets.assign(first_buckets.begin(), first_buckets.end());
  set.vector = SplitterVector::from_first_buckets(first_buckets, radix_bits);
  const std::size_t parts = first_buckets.size() + 1;
  std::size_t a = 0;
  for (std::size_t p = 0; p < parts; ++p) {
    const std::size_t b = p + 1 < parts ? first_buckets[p] : seg.buckets();
    if (p + 1 < parts) set.splitters.push_back(seg.edge_key[b]);
    set.lower_keys.push_back(p == 0 ? dom.lower() : seg.edge_key[a]);
    set.upper_keys.push_back(seg.edge_key[b]);
    set.private_sizes.push_back(seg.prefix[b] - seg.prefix[a]);
    set.public_spans.push_back(seg.span(a, b));
    set.costs.push_back(seg(a, b));
    set.max_cost = std::max(set.max_cost, set.costs.back());
    a = b;
  }
  return set;
}

void check_partitionable(const RadixHistogram& r_hist, unsigned threads) {
  if (threads == 0) throw ConfigError("thread count must be positive");
  if (r_hist.counts.size() != (std::size_t{1} << r_hist.radix_bits))
    throw ConfigError("radix histogram size does not match its bit count");
  if (r_hist.counts.size() < threads) {
    throw ConfigError("2^B = " + std::to_string(r_hist.counts.size()) + " buckets cannot form " +
                      std::to_string(threads) + " partitions");
  }
}

}  // namespace

SplitterSet evaluate_splitters(std::span<const std::size_t> first_buckets, const RadixHistogram& r_hist,
                               const Cdf& cdf, unsigned threads, const KeyDomain& dom) {
  check_partitionable(r_hist, threads);
  if (first_buckets.size() + 1 != threads) throw ConfigError("need exactly T-1 splitter buckets");
  std::size_t prev = 0;
  for (std::size_t b : first_buckets) {
    if (b <= prev || b >= r_hist.counts.size())
      throw ConfigError("splitter buckets must be strictly increasing inside (0, 2^B)");
    prev = b;
  }
  return evaluate(first_buckets, SegmentCosts(r_hist, cdf, threads, dom), dom, r_hist.radix_bits);
}

SplitterSet compute_splitters(const RadixHistogram& r_hist, const Cdf& cdf, unsigned threads,
                              const KeyDomain& dom) {
  check_partitionable(r_hist, threads);
  const SegmentCosts seg(r_hist, cdf, threads, dom);
  const std::size_t n = seg.buckets();

  // Minimum number of contiguous segments with cost <= bound (greedy is
  // optimal because segment cost only grows when a segment is extended).
  auto min_segments = [&](double bound) -> std::size_t {
    std::size_t count = 0;
    std::size_t a = 0;
    while (a < n) {
      if (seg(a, a + 1) > bound) return std::numeric_limits<std::size_t>::max();
      std::size_t b = a + 1;
      while (b < n && seg(a, b + 1) <= bound) ++b;
      ++count;
      a = b;
    }
    return count;
  };

  // The optimum is itself a segment cost, i.e. a non-negative double. Bisect
  // over the bit patterns of non-negative doubles, which order like the values.
  std::uint64_t lo = 0;
  std::uint64_t hi = std::bit_cast<std::uint64_t>(seg(0, n));
  if (min_segments(0.0) > threads) {
    while (hi - lo > 1) {
      const std::uint64_t mid = lo + (hi - lo) / 2;
      if (min_segments(std::bit_cast<double>(mid)) <= threads)
        hi = mid;
      else
        lo = mid;
    }
  } else {
    hi = 0;
  }
  const double bound = std::bit_cast<double>(hi);

  // reach[a]: furthest end of a segment starting at a within the bound.
  // fewest[a]: minimum number of segments covering [a, n).
  constexpr std::size_t inf = std::numeric_limits<std::size_t>::max() / 2;
  std::vector<std::size_t> reach(n, 0);
  std::size_t b = 1;
  for (std::size_t a = 0; a < n; ++a) {
    b = std::max(b, a + 1);
    if (seg(a, a + 1) > bound) {
      reach[a] = a;
      continue;
    }
    while (b < n && seg(a, b + 1) <= bound) ++b;
    reach[a] = b;
  }
  std::vector<std::size_t> fewest(n + 1, inf);
  fewest[n] = 0;
  for (std::size_t a = n; a-- > 0;) fewest[a] = reach[a] == a ? inf : 1 + fewest[reach[a]];

  std::vector<std::size_t> first_buckets;
  std::size_t a = 0;
  for (unsigned p = 0; p + 1 < threads; ++p) {
    const std::size_t remaining = threads - 1 - p;
    const std::size_t last_allowed = std::min(reach[a], n - remaining);
    std::size_t e = a + 1;
    while (e < last_allowed && fewest[e] > remaining) ++e;
    if (fewest[e] > remaining) throw ConsistencyError("splitter search lost feasibility");
    first_buckets.push_back(e);
    a = e;
  }
  return evaluate(first_buckets, seg, dom, r_hist.radix_bits);
}

SplitterSet equal_cardinality_splitters(const RadixHistogram& r_hist, const Cdf& cdf, unsigned threads,
                                        const KeyDomain& dom) {
  check_partitionable(r_hist, threads);
  const SegmentCosts seg(r_hist, cdf, threads, dom);
  const std::size_t n = seg.buckets();
  const std::uint64_t total = seg.prefix[n];
  std::vector<std::size_t> first_buckets;
  std::size_t prev = 0;
  for (unsigned j = 1; j < threads; ++j) {
    const double target = static_cast<double>(total) * j / threads;
    std::size_t e = prev + 1;
    while (e < n - (threads - j) && static_cast<double>(seg.prefix[e]) < target) ++e;
    first_buckets.push_back(e);
    prev = e;
  }
  return evaluate(first_buckets, seg, dom, r_hist.radix_bits);
}

}  // namespace mpsm
