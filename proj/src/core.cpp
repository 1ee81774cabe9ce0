#include "mpsm/core.hpp"

#include <bit>

namespace mpsm {

KeyDomain::KeyDomain(Key lower, Key upper) : lower_(lower), upper_(upper) {
  if (!(lower < upper)) {
    throw ConfigError("key domain requires lower < upper (got [" + std::to_string(lower) + ", " +
                      std::to_string(upper) + "))");
  }
  width_bits_ = static_cast<unsigned>(std::bit_width(upper - lower - 1));
}

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::bmpsm: return "bmpsm";
    case Algorithm::pmpsm: return "pmpsm";
    case Algorithm::hash_oracle: return "hash";
  }
  return "?";
}

std::string to_string(RolePolicy p) {
  switch (p) {
    case RolePolicy::automatic: return "auto";
    case RolePolicy::r_private: return "r-private";
    case RolePolicy::s_private: return "s-private";
  }
  return "?";
}

std::string to_string(QueryMode q) {
  switch (q) {
    case QueryMode::aggregate_max: return "aggregate-max";
    case QueryMode::count: return "count";
    case QueryMode::materialize: return "materialize";
  }
  return "?";
}

Algorithm parse_algorithm(const std::string& s) {
  if (s == "bmpsm" || s == "B-MPSM") return Algorithm::bmpsm;
  if (s == "pmpsm" || s == "P-MPSM") return Algorithm::pmpsm;
  if (s == "hash" || s == "HASH-ORACLE") return Algorithm::hash_oracle;
  throw ConfigError("unknown algorithm '" + s + "'");
}

RolePolicy parse_role_policy(const std::string& s) {
  if (s == "auto") return RolePolicy::automatic;
  if (s == "r-private") return RolePolicy::r_private;
  if (s == "s-private") return RolePolicy::s_private;
  throw ConfigError("unknown role policy '" + s + "'");
}

QueryMode parse_query_mode(const std::string& s) {
  if (s == "aggregate-max" || s == "max") return QueryMode::aggregate_max;
  if (s == "count") return QueryMode::count;
  if (s == "materialize") return QueryMode::materialize;
  throw ConfigError("unknown query mode '" + s + "'");
}

void JoinConfig::validate() const {
  if (threads == 0) throw ConfigError("thread count must be positive");
  if (cdf_fanout == 0) throw ConfigError("cdf fanout must be positive");
  if (radix_bits > 30) throw ConfigError("radix bits must be at most 30");
  if ((std::uint64_t{1} << radix_bits) < threads) {
    throw ConfigError("2^radix_bits (" + std::to_string(std::uint64_t{1} << radix_bits) +
                      ") must be at least the thread count (" + std::to_string(threads) + ")");
  }
}

ValidationReport validate_relation(const Relation& rel, const KeyDomain& dom) {
  constexpr std::size_t max_samples = 16;
  ValidationReport report;
  for (std::size_t i = 0; i < rel.tuples.size(); ++i) {
    if (!dom.contains(rel.tuples[i].key)) {
      ++report.violations;
      if (report.sample_positions.size() < max_samples) report.sample_positions.push_back(i);
    }
  }
  return report;
}

std::pair<std::size_t, std::size_t> chunk_bounds(std::size_t n, unsigned t, unsigned i) {
  if (t == 0) throw ConfigError("cannot chunk into zero parts");
  const std::size_t base = n / t;
  const std::size_t rem = n % t;
  const std::size_t begin = i * base + std::min<std::size_t>(i, rem);
  const std::size_t len = base + (i < rem ? 1 : 0);
  return {begin, begin + len};
}

std::vector<std::span<const Tuple>> chunk(std::span<const Tuple> rel, unsigned t) {
  if (t == 0) throw ConfigError("cannot chunk into zero parts");
  std::vector<std::span<const Tuple>> chunks;
  chunks.reserve(t);
  for (unsigned i = 0; i < t; ++i) {
    auto [b, e] = chunk_bounds(rel.size(), t, i);
    chunks.push_back(rel.subspan(b, e - b));
  }
  return chunks;
}

}  // namespace mpsm
