#pragma once

// Parallel sort-merge join drivers.
//
//   B-MPSM: sort public chunks | barrier | sort private chunks, merge each
//           private run against every public run.
//   P-MPSM: sort public chunks | barrier | equi-height bounds + private radix
//           histograms | barrier (splitters, prefix cursors) | scatter |
//           barrier | sort private run, merge against every public run from
//           its interpolated start.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mpsm/core.hpp"

namespace mpsm {

struct RoleAssignment {
  /// true: the first relation argument is the private (range-partitioned) input.
  bool first_is_private = true;

  friend bool operator==(const RoleAssignment&, const RoleAssignment&) = default;
};

/// `automatic` makes the smaller relation private; ties keep the first.
RoleAssignment choose_roles(std::uint64_t n_first, std::uint64_t n_second, RolePolicy policy);

enum class Phase { sort_public, partition, sort_private, join };

std::string to_string(Phase p);

struct PhaseStep {
  Phase phase;
  /// All workers must finish this step before any worker starts the next.
  bool barrier_after;
};

struct PhasePlan {
  Algorithm algorithm;
  std::vector<PhaseStep> steps;

  /// True when some barrier separates the public sort from the join.
  bool join_waits_for_public_sort() const;
};

PhasePlan phase_plan(Algorithm algorithm);

/// Lower-bound index of `target` in a key-sorted run (0..size). Probes by
/// linear interpolation between the interval ends and falls back to bisection
/// whenever an interpolation step fails to halve the interval.
/// `steps` (optional) receives the number of probes.
std::size_t interpolation_search(std::span<const Tuple> run, Key target, std::uint64_t* steps = nullptr);

/// Per-worker result accumulator. Payload pairs are always stored as
/// (first relation payload, second relation payload).
class JoinSink {
 public:
  JoinSink(QueryMode mode, bool private_is_second, std::size_t materialize_limit);

  void emit(Payload private_payload, Payload public_payload);
  /// Emits the full cross product of two equal-key groups.
  void emit_group(std::span<const Tuple> private_group, std::span<const Tuple> public_group);
  /// Folds another worker's partial result into this one.
  void absorb(JoinSink&& other);

  std::uint64_t count() const noexcept { return count_; }
  bool has_max() const noexcept { return has_max_; }
  std::uint64_t max() const noexcept { return max_; }
  bool overflowed() const noexcept { return overflowed_; }
  std::vector<PayloadPair>& pairs() noexcept { return pairs_; }

 private:
  QueryMode mode_;
  bool private_is_second_;
  std::size_t limit_;
  std::uint64_t count_ = 0;
  std::uint64_t max_ = 0;
  bool has_max_ = false;
  bool overflowed_ = false;
  std::vector<PayloadPair> pairs_;
};

/// Merge join of a private run against a public run starting at `public_start`.
/// Every equal-key (private, public) pair is emitted exactly once; the scan
/// ends once a public key exceeds the largest private key.
/// Returns the number of public tuples read.
std::uint64_t merge_join(std::span<const Tuple> private_run, std::span<const Tuple> public_run,
                         std::size_t public_start, JoinSink& sink);

/// Test hook invoked by every worker right before it starts a phase.
using PhaseHook = std::function<void(unsigned worker, Phase phase)>;

JoinResult run_bmpsm(const Relation& r, const Relation& s, const JoinConfig& cfg, const PhaseHook& hook = {});
JoinResult run_pmpsm(const Relation& r, const Relation& s, const JoinConfig& cfg, const PhaseHook& hook = {});

/// Dispatches on cfg.algorithm (including the single-threaded hash oracle).
JoinResult run_join(const Relation& r, const Relation& s, const JoinConfig& cfg, const PhaseHook& hook = {});

}  // namespace mpsm
