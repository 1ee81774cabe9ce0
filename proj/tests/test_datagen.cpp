#include <algorithm>
#include <set>

#include "doctest.h"
#include "mpsm/datagen.hpp"
#include "support.hpp"

using namespace mpsm;

TEST_CASE("SplitMix64 reference outputs") {
  // Published sequence for seed 1234567.
  SplitMix64 rng(1234567);
  CHECK(rng.next() == 6457827717110365317ull);
  CHECK(rng.next() == 3203168211198807973ull);
  CHECK(rng.next() == 9817491932198370423ull);
  CHECK(rng.next() == 4593380528125082431ull);
  CHECK(rng.next() == 16408922859458223821ull);
}

TEST_CASE("below stays in range") {
  SplitMix64 rng(5);
  for (int i = 0; i < 10000; ++i) {
    CHECK(rng.below(7) < 7);
    CHECK(rng.below(1) == 0);
  }
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.unit();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("distribution names") {
  for (auto d : {Distribution::uniform, Distribution::skew_high, Distribution::skew_low, Distribution::location_sorted})
    CHECK(parse_distribution(to_string(d)) == d);
  CHECK(parse_distribution("high") == Distribution::skew_high);
  CHECK_THROWS_AS(parse_distribution("zipf"), ConfigError);
}

TEST_CASE("uniform keys fill the quartiles evenly") {
  const KeyDomain dom;
  const Relation r = gen_uniform(GenSpec{1000000, dom, Distribution::uniform, 42, 1});
  REQUIRE(r.cardinality() == 1000000);
  std::array<std::size_t, 4> q{};
  for (auto& t : r.tuples) {
    REQUIRE(dom.contains(t.key));
    REQUIRE(t.payload < (Payload{1} << 32));
    ++q[(t.key - dom.lower()) * 4 / dom.width()];
  }
  for (auto c : q) CHECK(std::abs(static_cast<double>(c) / 1e6 - 0.25) <= 0.005);
}

TEST_CASE("generators are deterministic per seed") {
  const KeyDomain dom(100, 100000);
  for (auto d : {Distribution::uniform, Distribution::skew_high, Distribution::skew_low, Distribution::location_sorted}) {
    const GenSpec spec{5000, dom, d, 77, 4};
    CHECK(generate(spec).tuples == generate(spec).tuples);
    GenSpec other = spec;
    other.seed = 78;
    CHECK(generate(spec).tuples != generate(other).tuples);
  }
}

TEST_CASE("uniform draws follow the documented recipe") {
  const KeyDomain dom(10, 1010);
  const Relation r = gen_uniform(GenSpec{3, dom, Distribution::uniform, 9, 1});
  SplitMix64 rng(9);
  for (const auto& t : r.tuples) {
    CHECK(t.key == 10 + rng.below(1000));
    CHECK(t.payload == rng.next() >> 32);
  }
}

TEST_CASE("80:20 high and low skew") {
  const KeyDomain dom;
  const double edge_high = 0.8 * static_cast<double>(dom.width());
  const double edge_low = 0.2 * static_cast<double>(dom.width());
  const Relation hi = gen_skewed_8020(GenSpec{1000000, dom, Distribution::skew_high, 3, 1}, true);
  const Relation lo = gen_skewed_8020(GenSpec{1000000, dom, Distribution::skew_low, 3, 1}, false);
  std::size_t top = 0, bottom = 0;
  for (auto& t : hi.tuples) top += static_cast<double>(t.key) >= edge_high;
  for (auto& t : lo.tuples) bottom += static_cast<double>(t.key) < edge_low;
  CHECK(top >= 790000);
  CHECK(top <= 810000);
  CHECK(bottom >= 790000);
  CHECK(bottom <= 810000);
}

TEST_CASE("80:20 single tuple lands in the hot tail about 80% of the time") {
  const KeyDomain dom(0, 1000);
  int hot = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const Relation r = gen_skewed_8020(GenSpec{1, dom, Distribution::skew_high, seed, 1}, true);
    REQUIRE(r.cardinality() == 1);
    hot += r.tuples[0].key >= 800;
  }
  CHECK(hot >= 740);
  CHECK(hot <= 860);
}

TEST_CASE("80:20 on a tiny domain stays in range") {
  for (Key w : {1, 2, 3, 5}) {
    const KeyDomain dom(7, 7 + w);
    for (bool high : {true, false}) {
      const Relation r = gen_skewed_8020(GenSpec{200, dom, Distribution::skew_high, w, 1}, high);
      for (auto& t : r.tuples) CHECK(dom.contains(t.key));
    }
  }
}

TEST_CASE("location skew clusters key ranges into chunks") {
  const KeyDomain dom;
  const Relation base = gen_uniform(GenSpec{100003, dom, Distribution::uniform, 8, 1});
  for (unsigned clusters : {1u, 3u, 8u}) {
    const Relation loc = gen_location_skew(base, clusters, 5);
    CHECK(testing::same_multiset(loc.tuples, base.tuples));
    Key prev_max = 0;
    bool first = true;
    for (auto part : chunk(loc.tuples, clusters)) {
      if (part.empty()) continue;
      auto [mn, mx] = std::minmax_element(part.begin(), part.end(),
                                          [](const Tuple& a, const Tuple& b) { return a.key < b.key; });
      if (!first) CHECK(mn->key >= prev_max);
      prev_max = mx->key;
      first = false;
    }
  }
  // Shuffled inside chunks: a 100k chunk is almost surely not sorted.
  const Relation loc = gen_location_skew(base, 1, 5);
  CHECK_FALSE(testing::keys_sorted(loc.tuples));
}

TEST_CASE("hash oracle small cases") {
  const Relation r({{1, 10}, {2, 20}});
  const Relation s({{2, 5}, {2, 7}, {3, 1}});
  const JoinResult agg = hash_join_oracle(r, s, QueryMode::aggregate_max);
  CHECK(agg.match_count == 2);
  CHECK(agg.aggregate_max == 27);

  const JoinResult none = hash_join_oracle(Relation({{1, 1}}), Relation({{2, 2}}), QueryMode::aggregate_max);
  CHECK(none.match_count == 0);
  CHECK_FALSE(none.aggregate_max.has_value());

  const Relation a({{4, 1}, {4, 2}});
  const Relation b({{4, 3}, {4, 4}, {4, 5}});
  CHECK(hash_join_oracle(a, b, QueryMode::count).match_count == 6);
  CHECK_FALSE(hash_join_oracle(a, b, QueryMode::count).aggregate_max.has_value());

  const JoinResult mat = hash_join_oracle(r, s, QueryMode::materialize);
  REQUIRE(mat.materialized);
  auto pairs = *mat.materialized;
  std::sort(pairs.begin(), pairs.end());
  CHECK(pairs == std::vector<PayloadPair>{{20, 5}, {20, 7}});
  CHECK_THROWS_AS(hash_join_oracle(a, b, QueryMode::materialize, 5), ConfigError);
}

TEST_CASE("hash oracle agrees with per-key counting") {
  std::mt19937_64 rng(64);
  for (int round = 0; round < 100; ++round) {
    const Key hi = 1 + rng() % 200;
    const auto r = testing::random_tuples(rng, rng() % 500, 0, hi);
    const auto s = testing::random_tuples(rng, rng() % 1500, 0, hi);
    const Relation rr(r), ss(s);
    const auto truth = testing::count_join(rr, ss);
    for (const auto& [x, y] : {std::pair{&rr, &ss}, std::pair{&ss, &rr}}) {
      const JoinResult got = hash_join_oracle(*x, *y, QueryMode::aggregate_max);
      CHECK(got.match_count == truth.count);
      CHECK(got.aggregate_max.has_value() == truth.has_max);
      if (truth.has_max) CHECK(*got.aggregate_max == truth.max);
    }
  }
}
