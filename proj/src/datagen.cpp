#include "mpsm/datagen.hpp"

#include <algorithm>
#include <unordered_map>

namespace mpsm {

std::string to_string(Distribution d) {
  switch (d) {
    case Distribution::uniform: return "uniform";
    case Distribution::skew_high: return "skew-80-20-high";
    case Distribution::skew_low: return "skew-80-20-low";
    case Distribution::location_sorted: return "location-sorted-clusters";
  }
  return "?";
}

Distribution parse_distribution(const std::string& s) {
  if (s == "uniform") return Distribution::uniform;
  if (s == "skew-80-20-high" || s == "high") return Distribution::skew_high;
  if (s == "skew-80-20-low" || s == "low") return Distribution::skew_low;
  if (s == "location-sorted-clusters" || s == "location") return Distribution::location_sorted;
  throw ConfigError("unknown distribution '" + s + "'");
}

Relation gen_uniform(const GenSpec& spec) {
  SplitMix64 rng(spec.seed);
  const std::uint64_t w = spec.domain.width();
  std::vector<Tuple> tuples(spec.cardinality);
  for (auto& t : tuples) {
    t.key = spec.domain.lower() + rng.below(w);
    t.payload = rng.next() >> 32;
  }
  return Relation(std::move(tuples));
}

Relation gen_skewed_8020(const GenSpec& spec, bool high) {
  SplitMix64 rng(spec.seed);
  const std::uint64_t w = spec.domain.width();
  const Key lo = spec.domain.lower();
  const std::uint64_t tail_w = std::max<std::uint64_t>(1, w / 5);
  // [tail_begin, tail_begin + tail_w) holds 80% of the mass.
  const Key tail_begin = high ? lo + (w - tail_w) : lo;
  const Key rest_begin = high ? lo : lo + tail_w;
  const std::uint64_t rest_w = w - tail_w;

  std::vector<Tuple> tuples(spec.cardinality);
  for (auto& t : tuples) {
    const bool in_tail = rng.unit() < skew_tail_mass || rest_w == 0;
    t.key = in_tail ? tail_begin + rng.below(tail_w) : rest_begin + rng.below(rest_w);
    t.payload = rng.next() >> 32;
  }
  return Relation(std::move(tuples));
}

Relation gen_location_skew(const Relation& rel, unsigned clusters, std::uint64_t seed) {
  if (clusters == 0) throw ConfigError("location skew needs at least one cluster");
  std::vector<Tuple> tuples = rel.tuples;
  std::sort(tuples.begin(), tuples.end(), [](const Tuple& a, const Tuple& b) {
    return a.key != b.key ? a.key < b.key : a.payload < b.payload;
  });
  SplitMix64 rng(seed);
  for (unsigned c = 0; c < clusters; ++c) {
    auto [b, e] = chunk_bounds(tuples.size(), clusters, c);
    for (std::size_t i = e; i > b + 1; --i) {
      const std::size_t j = b + rng.below(i - b);
      std::swap(tuples[i - 1], tuples[j]);
    }
  }
  return Relation(std::move(tuples));
}

Relation generate(const GenSpec& spec) {
  switch (spec.distribution) {
    case Distribution::uniform: return gen_uniform(spec);
    case Distribution::skew_high: return gen_skewed_8020(spec, true);
    case Distribution::skew_low: return gen_skewed_8020(spec, false);
    case Distribution::location_sorted:
      return gen_location_skew(gen_uniform(spec), spec.clusters, spec.seed ^ 0x5DEECE66Dull);
  }
  throw ConfigError("unhandled distribution");
}

JoinResult hash_join_oracle(const Relation& r, const Relation& s, QueryMode mode, std::size_t materialize_limit) {
  const bool build_on_r = r.cardinality() <= s.cardinality();
  const Relation& build = build_on_r ? r : s;
  const Relation& probe = build_on_r ? s : r;

  std::unordered_map<Key, std::vector<Payload>> table;
  table.reserve(build.cardinality());
  for (const Tuple& t : build.tuples) table[t.key].push_back(t.payload);

  JoinResult result;
  if (mode == QueryMode::materialize) result.materialized.emplace();
  std::uint64_t best = 0;
  for (const Tuple& t : probe.tuples) {
    auto it = table.find(t.key);
    if (it == table.end()) continue;
    for (Payload p : it->second) {
      const Payload rp = build_on_r ? p : t.payload;
      const Payload sp = build_on_r ? t.payload : p;
      const std::uint64_t sum = rp + sp;
      if (result.match_count == 0 || sum > best) best = sum;
      ++result.match_count;
      if (mode == QueryMode::materialize) {
        if (result.materialized->size() >= materialize_limit)
          throw ConfigError("join output exceeds the materialization limit of " + std::to_string(materialize_limit));
        result.materialized->emplace_back(rp, sp);
      }
    }
  }
  if (mode == QueryMode::aggregate_max && result.match_count > 0) result.aggregate_max = best;
  return result;
}

}  // namespace mpsm
