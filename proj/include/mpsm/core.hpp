#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mpsm {

using Key = std::uint64_t;
using Payload = std::uint64_t;

struct Tuple {
  Key key;
  Payload payload;

  friend bool operator==(const Tuple&, const Tuple&) = default;
};
static_assert(sizeof(Tuple) == 16);

// Error hierarchy. Everything thrown by the library derives from Error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ConsistencyError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " at byte offset " + std::to_string(offset)), offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

/// Half-open key range [lower, upper) with the number of significant bits
/// needed to address it after shifting by `lower`.
class KeyDomain {
 public:
  constexpr KeyDomain() = default;
  KeyDomain(Key lower, Key upper);

  Key lower() const noexcept { return lower_; }
  Key upper() const noexcept { return upper_; }
  std::uint64_t width() const noexcept { return upper_ - lower_; }
  /// ceil(log2(upper - lower)); 0 for a single-key domain.
  unsigned width_bits() const noexcept { return width_bits_; }
  bool contains(Key k) const noexcept { return k >= lower_ && k < upper_; }

  friend bool operator==(const KeyDomain&, const KeyDomain&) = default;

 private:
  Key lower_ = 0;
  Key upper_ = Key{1} << 32;
  unsigned width_bits_ = 32;
};

struct Relation {
  std::vector<Tuple> tuples;

  Relation() = default;
  explicit Relation(std::vector<Tuple> t) : tuples(std::move(t)) {}

  std::size_t cardinality() const noexcept { return tuples.size(); }
  bool empty() const noexcept { return tuples.empty(); }
  std::span<const Tuple> view() const noexcept { return tuples; }

  friend bool operator==(const Relation&, const Relation&) = default;
};

/// A tuple sequence sorted ascending by key, produced by one worker.
struct Run {
  std::vector<Tuple> tuples;
  std::size_t origin_worker = 0;

  std::size_t size() const noexcept { return tuples.size(); }
  bool empty() const noexcept { return tuples.empty(); }
  std::span<const Tuple> view() const noexcept { return tuples; }
};

enum class Algorithm { bmpsm, pmpsm, hash_oracle };
enum class RolePolicy { automatic, r_private, s_private };
enum class QueryMode { aggregate_max, count, materialize };
enum class AllocPolicy { local_first, interleave };

std::string to_string(Algorithm a);
std::string to_string(RolePolicy p);
std::string to_string(QueryMode q);
Algorithm parse_algorithm(const std::string& s);
RolePolicy parse_role_policy(const std::string& s);
QueryMode parse_query_mode(const std::string& s);

struct JoinConfig {
  unsigned threads = 1;
  unsigned radix_bits = 10;
  unsigned cdf_fanout = 4;
  Algorithm algorithm = Algorithm::pmpsm;
  RolePolicy role_policy = RolePolicy::automatic;
  QueryMode query_mode = QueryMode::aggregate_max;
  KeyDomain domain{};
  bool pin_workers = false;
  AllocPolicy alloc_policy = AllocPolicy::local_first;
  std::size_t materialize_limit = std::size_t{1} << 24;

  /// Throws ConfigError unless threads >= 1, cdf_fanout >= 1 and 2^radix_bits >= threads.
  void validate() const;
};

/// Counters kept privately by each worker and merged after the run.
struct WorkerStats {
  std::uint64_t tuples_sorted = 0;
  std::uint64_t tuples_scattered = 0;
  std::uint64_t public_examined = 0;
  std::uint64_t probe_steps = 0;
  std::uint64_t runs_with_matches = 0;
  std::uint64_t private_run_size = 0;
  std::uint64_t matches = 0;
};

using PayloadPair = std::pair<Payload, Payload>;

struct JoinResult {
  std::optional<std::uint64_t> aggregate_max;
  std::uint64_t match_count = 0;
  std::optional<std::vector<PayloadPair>> materialized;
  std::map<std::string, std::chrono::nanoseconds> phase_timings;
  std::chrono::nanoseconds total_time{0};
  std::vector<WorkerStats> worker_stats;
  /// Range-partitioned runs only: splitter keys and estimated cost per partition.
  std::vector<Key> splitters;
  std::vector<double> partition_costs;
  std::vector<std::string> warnings;
  /// true when the larger relation was swapped into the private role.
  bool roles_swapped = false;
};

struct ValidationReport {
  std::size_t violations = 0;
  /// Positions of the first few offending tuples.
  std::vector<std::size_t> sample_positions;

  bool valid() const noexcept { return violations == 0; }
};

ValidationReport validate_relation(const Relation& rel, const KeyDomain& dom);

/// [begin, end) offsets of chunk i when n tuples are split into t chunks.
/// Remainder tuples go to the lowest-indexed chunks.
std::pair<std::size_t, std::size_t> chunk_bounds(std::size_t n, unsigned t, unsigned i);

std::vector<std::span<const Tuple>> chunk(std::span<const Tuple> rel, unsigned t);

}  // namespace mpsm
