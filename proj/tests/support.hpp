#pragma once

// Test-only oracles and generators. Nothing here calls into the code paths
// being checked except through their public results.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <vector>

#include "mpsm/core.hpp"

namespace mpsm::testing {

inline std::vector<Tuple> random_tuples(std::mt19937_64& rng, std::size_t n, Key lo, Key hi) {
  std::uniform_int_distribution<Key> key(lo, hi - 1);
  std::uniform_int_distribution<Payload> pay(0, 0xFFFFFFFFu);
  std::vector<Tuple> out(n);
  for (auto& t : out) t = {key(rng), pay(rng)};
  return out;
}

inline std::vector<Tuple> canonical(std::vector<Tuple> v) {
  std::sort(v.begin(), v.end(), [](const Tuple& a, const Tuple& b) {
    return a.key != b.key ? a.key < b.key : a.payload < b.payload;
  });
  return v;
}

inline bool same_multiset(const std::vector<Tuple>& a, const std::vector<Tuple>& b) {
  return canonical(a) == canonical(b);
}

inline bool keys_sorted(const std::vector<Tuple>& v) {
  return std::is_sorted(v.begin(), v.end(), [](const Tuple& a, const Tuple& b) { return a.key < b.key; });
}

/// Per-key counting: sum over keys of count_r(k) * count_s(k) and the largest
/// payload sum, found by nested loops over the two key groups.
struct JoinTruth {
  std::uint64_t count = 0;
  bool has_max = false;
  std::uint64_t max = 0;
};

inline JoinTruth count_join(const Relation& r, const Relation& s) {
  std::map<Key, std::vector<Payload>> left, right;
  for (const auto& t : r.tuples) left[t.key].push_back(t.payload);
  for (const auto& t : s.tuples) right[t.key].push_back(t.payload);
  JoinTruth truth;
  for (const auto& [k, ps] : left) {
    auto it = right.find(k);
    if (it == right.end()) continue;
    truth.count += ps.size() * it->second.size();
    for (auto a : ps)
      for (auto b : it->second) {
        const std::uint64_t sum = a + b;
        if (!truth.has_max || sum > truth.max) truth.max = sum;
        truth.has_max = true;
      }
  }
  return truth;
}

}  // namespace mpsm::testing

#include <span>

#include "mpsm/skew.hpp"
#include "mpsm/sorter.hpp"

namespace mpsm::testing {

// McIlroy's "killer adversary for quicksort": answers comparisons lazily so
// that every partition step picks a poor pivot. Replaying the frozen values
// through the same deterministic introsort reproduces the comparisons.
inline std::vector<Key> quicksort_killer_keys(std::size_t n) {
  const int gas = static_cast<int>(n);
  std::vector<int> val(n, gas);
  int solid = 0;
  int candidate = 0;
  auto less = [&](int x, int y) {
    if (val[x] == gas && val[y] == gas) val[x == candidate ? x : y] = solid++;
    if (val[x] == gas)
      candidate = x;
    else if (val[y] == gas)
      candidate = y;
    return val[x] < val[y];
  };
  std::vector<int> items(n);
  for (std::size_t i = 0; i < n; ++i) items[i] = static_cast<int>(i);
  SortStats ignored;
  detail::introsort(std::span<int>(items), less, ignored);
  for (auto& v : val)
    if (v == gas) v = solid++;
  return std::vector<Key>(val.begin(), val.end());
}

// Exhaustive search over all placements of T-1 cuts among the 2^B - 1 inner
// bucket edges. Returns the lexicographically first placement with the
// smallest maximum cost.
struct BruteForce {
  double best = 0;
  std::vector<std::size_t> cuts;
};

inline BruteForce brute_force_splitters(const RadixHistogram& h, const Cdf& cdf, unsigned T, const KeyDomain& dom) {
  const std::size_t n = h.counts.size();
  auto edge_key = [&](std::size_t e) { return e == n ? dom.upper() : bucket_lower_key(e, dom, h.radix_bits); };
  auto cost = [&](std::size_t a, std::size_t b) {
    std::uint64_t r = 0;
    for (std::size_t k = a; k < b; ++k) r += h.counts[k];
    return split_relevant_cost(r, T, cdf(edge_key(b)) - cdf(edge_key(a)));
  };
  BruteForce result;
  bool have = false;
  std::vector<std::size_t> cuts(T - 1);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t idx, std::size_t from) {
    if (idx == cuts.size()) {
      double worst = 0;
      std::size_t a = 0;
      for (std::size_t p = 0; p <= cuts.size(); ++p) {
        const std::size_t b = p < cuts.size() ? cuts[p] : n;
        worst = std::max(worst, cost(a, b));
        a = b;
      }
      if (!have || worst < result.best) {
        result = {worst, cuts};
        have = true;
      }
      return;
    }
    for (std::size_t c = from; c + (cuts.size() - idx) <= n; ++c) {
      cuts[idx] = c;
      rec(idx + 1, c + 1);
    }
  };
  rec(0, 1);
  return result;
}

}  // namespace mpsm::testing
