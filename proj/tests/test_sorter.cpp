#include <algorithm>
#include <random>

#include "doctest.h"
#include "mpsm/sorter.hpp"
#include "support.hpp"

using namespace mpsm;

namespace {

std::vector<Tuple> with_keys(const std::vector<Key>& keys) {
  std::vector<Tuple> out;
  for (std::size_t i = 0; i < keys.size(); ++i) out.push_back({keys[i], i});
  return out;
}

}  // namespace

TEST_CASE("sort_run small cases") {
  const KeyDomain dom;
  CHECK(sort_run({}, dom).empty());

  Run r = sort_run({{5, 'a'}, {1, 'b'}, {5, 'c'}}, dom, 3);
  REQUIRE(r.size() == 3);
  CHECK(r.origin_worker == 3);
  CHECK(r.tuples[0] == Tuple{1, 'b'});
  CHECK(r.tuples[1].key == 5);
  CHECK(r.tuples[2].key == 5);
  CHECK(std::min(r.tuples[1].payload, r.tuples[2].payload) == 'a');
  CHECK(std::max(r.tuples[1].payload, r.tuples[2].payload) == 'c');
}

TEST_CASE("sort_run matches a reference comparison sort on 1e5 tuples") {
  std::mt19937_64 rng(2024);
  const KeyDomain dom;
  auto input = testing::random_tuples(rng, 100000, 0, Key{1} << 32);
  auto reference = input;
  std::stable_sort(reference.begin(), reference.end(), [](auto& a, auto& b) { return a.key < b.key; });
  Run run = sort_run(input, dom);
  std::vector<Key> got, want;
  for (auto& t : run.tuples) got.push_back(t.key);
  for (auto& t : reference) want.push_back(t.key);
  CHECK(got == want);
  CHECK(testing::same_multiset(run.tuples, input));
}

TEST_CASE("radix_msd_pass places one key per bucket") {
  const KeyDomain dom(0, 256);
  std::vector<Tuple> v = with_keys({255, 0, 128});
  const RadixBoundaries b = radix_msd_pass(v, dom);
  CHECK(v[0].key == 0);
  CHECK(v[1].key == 128);
  CHECK(v[2].key == 255);
  CHECK(b.size(0) == 1);
  CHECK(b.begin(128) == 1);
  CHECK(b.size(128) == 1);
  CHECK(b.begin(255) == 2);
  CHECK(b.end(255) == 3);
  std::size_t nonempty = 0;
  for (std::size_t k = 0; k < msd_radix_buckets; ++k) nonempty += b.size(k) > 0;
  CHECK(nonempty == 3);
}

TEST_CASE("radix_msd_pass with all keys equal") {
  const KeyDomain dom;
  std::vector<Tuple> v(100, Tuple{12345678, 0});
  const RadixBoundaries b = radix_msd_pass(v, dom);
  std::size_t nonempty = 0;
  for (std::size_t k = 0; k < msd_radix_buckets; ++k)
    if (b.size(k) > 0) {
      ++nonempty;
      CHECK(b.size(k) == 100);
    }
  CHECK(nonempty == 1);
}

TEST_CASE("radix_msd_pass buckets hold exactly their top-8 normalized bits") {
  std::mt19937_64 rng(7);
  for (const KeyDomain dom : {KeyDomain(), KeyDomain(1000, 1000 + (Key{1} << 20) + 17), KeyDomain(0, 40)}) {
    auto v = testing::random_tuples(rng, 10000, dom.lower(), dom.upper());
    const auto before = v;
    const RadixBoundaries b = radix_msd_pass(v, dom);
    CHECK(b.offsets.back() == v.size());
    const unsigned w = dom.width_bits();
    for (std::size_t k = 0; k < msd_radix_buckets; ++k) {
      CHECK(b.offsets[k] <= b.offsets[k + 1]);
      for (std::size_t i = b.begin(k); i < b.end(k); ++i) {
        const Key norm = v[i].key - dom.lower();
        const Key top = w > 8 ? norm >> (w - 8) : norm;
        CHECK(top == k);
      }
    }
    CHECK(testing::same_multiset(before, v));
  }
}

TEST_CASE("introsort leaves sub-threshold segments to insertion sort") {
  std::vector<Tuple> v = with_keys({9, 3, 14, 1, 0, 7, 12, 5, 2, 11, 13, 4, 8, 6, 10});
  SortStats st;
  introsort(v, &st);
  CHECK(st.partition_steps == 0);
  CHECK(st.heapsort_fallbacks == 0);
  insertion_sort(v);
  CHECK(testing::keys_sorted(v));
}

TEST_CASE("introsort on sorted input needs no heapsort") {
  std::vector<Key> keys(10000);
  for (std::size_t i = 0; i < keys.size(); ++i) keys[i] = i;
  auto v = with_keys(keys);
  SortStats st;
  introsort(v, &st);
  insertion_sort(v);
  CHECK(testing::keys_sorted(v));
  CHECK(st.heapsort_fallbacks == 0);
  CHECK(st.max_depth <= st.depth_limit);
}

TEST_CASE("introsort on a flood of equal keys needs no heapsort") {
  std::vector<Tuple> v(10000, Tuple{42, 0});
  for (std::size_t i = 0; i < v.size(); ++i) v[i].payload = i;
  SortStats st;
  introsort(v, &st);
  CHECK(st.heapsort_fallbacks == 0);
}

TEST_CASE("adversarial input forces the heapsort fallback") {
  for (std::size_t n : {64u, 1000u, 10000u}) {
    auto v = with_keys(testing::quicksort_killer_keys(n));
    const auto before = v;
    SortStats st;
    introsort(v, &st);
    insertion_sort(v);
    CHECK(testing::keys_sorted(v));
    CHECK(testing::same_multiset(before, v));
    CHECK(st.heapsort_fallbacks >= 1);
    CHECK(st.depth_limit == 2 * (std::bit_width(n) - 1));
    CHECK(st.max_depth <= st.depth_limit);
  }
}

TEST_CASE("sort_run survives the adversary when the radix pass keeps one bucket") {
  // Keys < 2^24 in a 2^32 domain all share MSD bucket 0, so the radix pass
  // leaves the adversarial order untouched.
  auto v = with_keys(testing::quicksort_killer_keys(5000));
  SortStats st;
  sort_tuples(v, KeyDomain(), &st);
  CHECK(testing::keys_sorted(v));
  CHECK(st.heapsort_fallbacks >= 1);
  CHECK(st.max_depth <= st.depth_limit);
}

TEST_CASE("sort_run permutation fuzz") {
  std::mt19937_64 rng(99);
  for (int round = 0; round < 2000; ++round) {
    const auto n = std::uniform_int_distribution<std::size_t>(0, 400)(rng);
    const Key lo = std::uniform_int_distribution<Key>(0, 1000)(rng);
    const Key span = std::uniform_int_distribution<Key>(1, round % 3 == 0 ? 8 : 1u << 30)(rng);
    const KeyDomain dom(lo, lo + span);
    auto input = testing::random_tuples(rng, n, dom.lower(), dom.upper());
    SortStats st;
    Run r = sort_run(input, dom, 0, &st);
    CHECK(testing::keys_sorted(r.tuples));
    CHECK(testing::same_multiset(r.tuples, input));
    CHECK(st.max_depth <= st.depth_limit);
  }
}
