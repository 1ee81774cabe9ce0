#include "mpsm/engine.hpp"

#include <pthread.h>
#include <sched.h>

#include <algorithm>
#include <atomic>
#include <barrier>
#include <exception>
#include <memory>
#include <mutex>
#include <thread>

#include "mpsm/datagen.hpp"
#include "mpsm/partition.hpp"
#include "mpsm/skew.hpp"
#include "mpsm/sorter.hpp"

namespace mpsm {

RoleAssignment choose_roles(std::uint64_t n_first, std::uint64_t n_second, RolePolicy policy) {
  switch (policy) {
    case RolePolicy::r_private: return {true};
    case RolePolicy::s_private: return {false};
    case RolePolicy::automatic:
      // |R|/T + |R| + |S|/T < |S|/T + |S| + |R|/T  reduces to  |R| < |S|.
      return {n_first <= n_second};
  }
  return {true};
}

std::string to_string(Phase p) {
  switch (p) {
    case Phase::sort_public: return "sort-public";
    case Phase::partition: return "partition";
    case Phase::sort_private: return "sort-private";
    case Phase::join: return "join";
  }
  return "?";
}

bool PhasePlan::join_waits_for_public_sort() const {
  bool public_sorted = false;
  bool barrier_seen = false;
  for (const auto& step : steps) {
    if (step.phase == Phase::join) return public_sorted && barrier_seen;
    if (step.phase == Phase::sort_public) public_sorted = true;
    if (public_sorted && step.barrier_after) barrier_seen = true;
  }
  return false;
}

PhasePlan phase_plan(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::bmpsm:
      return {algorithm,
              {{Phase::sort_public, true}, {Phase::sort_private, false}, {Phase::join, false}}};
    case Algorithm::pmpsm:
      // The partition step contains two internal barriers (after histograms,
      // after the coordinator step) and ends with one after the scatter.
      return {algorithm,
              {{Phase::sort_public, true},
               {Phase::partition, true},
               {Phase::sort_private, false},
               {Phase::join, false}}};
    case Algorithm::hash_oracle:
      return {algorithm, {{Phase::join, false}}};
  }
  return {algorithm, {}};
}

std::size_t interpolation_search(std::span<const Tuple> run, Key target, std::uint64_t* steps) {
  std::uint64_t probes = 0;
  auto done = [&](std::size_t idx) {
    if (steps) *steps += probes;
    return idx;
  };
  const std::size_t n = run.size();
  if (n == 0) return done(0);
  ++probes;
  if (run[n - 1].key < target) return done(n);

  // Answer lies in [lo, hi] and run[hi].key >= target.
  std::size_t lo = 0;
  std::size_t hi = n - 1;
  bool bisect = false;
  for (;;) {
    ++probes;
    const Key lo_key = run[lo].key;
    if (lo_key >= target) return done(lo);
    if (hi - lo == 1) return done(hi);
    const Key hi_key = run[hi].key;  // > lo_key here
    std::size_t pos;
    if (bisect) {
      pos = lo + (hi - lo) / 2;
    } else {
      const auto num = static_cast<unsigned __int128>(hi - lo) * (target - lo_key);
      pos = lo + static_cast<std::size_t>(num / (hi_key - lo_key));
    }
    pos = std::clamp(pos, lo + 1, hi - 1);
    const std::size_t before = hi - lo;
    ++probes;
    if (run[pos].key >= target)
      hi = pos;
    else
      lo = pos + 1;
    bisect = (hi - lo) * 2 > before;
  }
}

JoinSink::JoinSink(QueryMode mode, bool private_is_second, std::size_t materialize_limit)
    : mode_(mode), private_is_second_(private_is_second), limit_(materialize_limit) {}

void JoinSink::emit(Payload private_payload, Payload public_payload) {
  ++count_;
  if (mode_ == QueryMode::count) return;
  const std::uint64_t sum = private_payload + public_payload;
  if (!has_max_ || sum > max_) {
    max_ = sum;
    has_max_ = true;
  }
  if (mode_ == QueryMode::materialize) {
    if (pairs_.size() >= limit_) {
      overflowed_ = true;
      return;
    }
    if (private_is_second_)
      pairs_.emplace_back(public_payload, private_payload);
    else
      pairs_.emplace_back(private_payload, public_payload);
  }
}

void JoinSink::emit_group(std::span<const Tuple> private_group, std::span<const Tuple> public_group) {
  if (mode_ == QueryMode::count) {
    count_ += static_cast<std::uint64_t>(private_group.size()) * public_group.size();
    return;
  }
  if (mode_ == QueryMode::aggregate_max) {
    Payload pmax = 0;
    Payload qmax = 0;
    for (const auto& t : private_group) pmax = std::max(pmax, t.payload);
    for (const auto& t : public_group) qmax = std::max(qmax, t.payload);
    std::uint64_t sum;
    if (!__builtin_add_overflow(pmax, qmax, &sum)) {
      // No pair wraps, so the largest sum is the sum of the largest payloads.
      count_ += static_cast<std::uint64_t>(private_group.size()) * public_group.size();
      if (!has_max_ || sum > max_) {
        max_ = sum;
        has_max_ = true;
      }
      return;
    }
  }
  for (const auto& r : private_group)
    for (const auto& s : public_group) emit(r.payload, s.payload);
}

void JoinSink::absorb(JoinSink&& other) {
  count_ += other.count_;
  if (other.has_max_ && (!has_max_ || other.max_ > max_)) {
    max_ = other.max_;
    has_max_ = true;
  }
  overflowed_ = overflowed_ || other.overflowed_;
  if (pairs_.empty())
    pairs_ = std::move(other.pairs_);
  else
    pairs_.insert(pairs_.end(), other.pairs_.begin(), other.pairs_.end());
  if (pairs_.size() > limit_) {
    pairs_.resize(limit_);
    overflowed_ = true;
  }
}

std::uint64_t merge_join(std::span<const Tuple> private_run, std::span<const Tuple> public_run,
                         std::size_t public_start, JoinSink& sink) {
  const std::size_t nr = private_run.size();
  const std::size_t ns = public_run.size();
  if (nr == 0 || public_start >= ns) return 0;
  const Key private_max = private_run[nr - 1].key;

  std::size_t i = 0;
  std::size_t j = public_start;
  std::size_t read_end = public_start;  // one past the furthest public tuple read
  while (j < ns) {
    const Key key = public_run[j].key;
    read_end = std::max(read_end, j + 1);
    if (key > private_max) break;
    while (private_run[i].key < key) ++i;  // private_max >= key bounds this
    if (private_run[i].key > key) {
      ++j;
      continue;
    }
    std::size_t i_end = i + 1;
    while (i_end < nr && private_run[i_end].key == key) ++i_end;
    std::size_t j_end = j + 1;
    while (j_end < ns && public_run[j_end].key == key) ++j_end;
    read_end = std::max(read_end, std::min(j_end + 1, ns));
    sink.emit_group(private_run.subspan(i, i_end - i), public_run.subspan(j, j_end - j));
    i = i_end;
    j = j_end;
    if (i == nr) break;
  }
  return read_end - public_start;
}

namespace {

using Clock = std::chrono::steady_clock;

void pin_to_core(unsigned worker) {
  const unsigned cores = std::max(1u, std::thread::hardware_concurrency());
  cpu_set_t set;
  CPU_ZERO(&set);
  CPU_SET(worker % cores, &set);
  // Failure (restricted cpusets, containers) leaves the thread unpinned.
  pthread_setaffinity_np(pthread_self(), sizeof(set), &set);
}

// Collects the first worker failure; workers keep meeting barriers but skip
// further work once anything failed.
class FailureLatch {
 public:
  template <class Fn>
  void run(Fn&& fn) {
    if (failed_.load(std::memory_order_acquire)) return;
    try {
      fn();
    } catch (...) {
      std::lock_guard lock(mu_);
      if (!error_) error_ = std::current_exception();
      failed_.store(true, std::memory_order_release);
    }
  }
  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::atomic<bool> failed_{false};
  std::mutex mu_;
  std::exception_ptr error_;
};

struct Inputs {
  const Relation* priv;
  const Relation* pub;
  bool swapped;
};

Inputs prepare(const Relation& r, const Relation& s, const JoinConfig& cfg) {
  cfg.validate();
  for (const Relation* rel : {&r, &s}) {
    const ValidationReport rep = validate_relation(*rel, cfg.domain);
    if (!rep.valid()) {
      throw DomainError(std::string(rel == &r ? "first" : "second") + " relation has " +
                        std::to_string(rep.violations) + " keys outside [" + std::to_string(cfg.domain.lower()) +
                        ", " + std::to_string(cfg.domain.upper()) + "), first at position " +
                        std::to_string(rep.sample_positions.front()));
    }
  }
  const RoleAssignment roles = choose_roles(r.cardinality(), s.cardinality(), cfg.role_policy);
  return roles.first_is_private ? Inputs{&r, &s, false} : Inputs{&s, &r, true};
}

std::vector<Tuple> copy_chunk(std::span<const Tuple> rel, unsigned threads, unsigned worker) {
  auto [b, e] = chunk_bounds(rel.size(), threads, worker);
  return std::vector<Tuple>(rel.begin() + static_cast<std::ptrdiff_t>(b), rel.begin() + static_cast<std::ptrdiff_t>(e));
}

// Merges the private run against every public run and records counters.
void join_private_run(std::span<const Tuple> private_run, const std::vector<Run>& public_runs, JoinSink& sink,
                      WorkerStats& stats) {
  if (private_run.empty()) return;
  const Key first = private_run.front().key;
  for (const Run& s : public_runs) {
    const std::size_t start = interpolation_search(s.view(), first, &stats.probe_steps);
    const std::uint64_t before = sink.count();
    stats.public_examined += merge_join(private_run, s.view(), start, sink);
    if (sink.count() != before) ++stats.runs_with_matches;
  }
}

JoinResult finish(std::vector<JoinSink>& sinks, std::vector<WorkerStats>& stats, const JoinConfig& cfg,
                  bool swapped) {
  JoinResult result;
  result.roles_swapped = swapped;
  JoinSink total(cfg.query_mode, swapped, cfg.materialize_limit);
  for (std::size_t w = 0; w < sinks.size(); ++w) {
    stats[w].matches = sinks[w].count();
    total.absorb(std::move(sinks[w]));
  }
  if (total.overflowed() || (cfg.query_mode == QueryMode::materialize && total.count() > cfg.materialize_limit)) {
    throw ConfigError("join output exceeds the materialization limit of " + std::to_string(cfg.materialize_limit));
  }
  result.match_count = total.count();
  if (cfg.query_mode == QueryMode::aggregate_max && total.has_max()) result.aggregate_max = total.max();
  if (cfg.query_mode == QueryMode::materialize) result.materialized = std::move(total.pairs());
  result.worker_stats = std::move(stats);
  return result;
}

template <class Fn>
void spawn_workers(unsigned threads, Fn&& body) {
  std::vector<std::jthread> workers;
  workers.reserve(threads);
  for (unsigned w = 0; w < threads; ++w) workers.emplace_back([&body, w] { body(w); });
}

}  // namespace

JoinResult run_bmpsm(const Relation& r, const Relation& s, const JoinConfig& cfg, const PhaseHook& hook) {
  const auto t0 = Clock::now();
  const Inputs in = prepare(r, s, cfg);
  const unsigned T = cfg.threads;

  std::vector<Run> public_runs(T);
  std::vector<JoinSink> sinks(T, JoinSink(cfg.query_mode, in.swapped, cfg.materialize_limit));
  std::vector<WorkerStats> stats(T);
  std::vector<Clock::time_point> private_sorted(T, t0);
  Clock::time_point public_done = t0;
  FailureLatch latch;

  std::barrier public_sorted(static_cast<std::ptrdiff_t>(T), [&]() noexcept { public_done = Clock::now(); });

  spawn_workers(T, [&](unsigned w) {
    if (cfg.pin_workers) pin_to_core(w);
    latch.run([&] {
      if (hook) hook(w, Phase::sort_public);
      public_runs[w] = sort_run(copy_chunk(in.pub->view(), T, w), cfg.domain, w);
      stats[w].tuples_sorted += public_runs[w].size();
    });
    public_sorted.arrive_and_wait();

    Run private_run;
    latch.run([&] {
      if (hook) hook(w, Phase::sort_private);
      private_run = sort_run(copy_chunk(in.priv->view(), T, w), cfg.domain, w);
      stats[w].tuples_sorted += private_run.size();
      stats[w].private_run_size = private_run.size();
    });
    private_sorted[w] = Clock::now();
    latch.run([&] {
      if (hook) hook(w, Phase::join);
      join_private_run(private_run.view(), public_runs, sinks[w], stats[w]);
    });
  });
  latch.rethrow();

  const auto t_end = Clock::now();
  const auto private_done = std::max(public_done, *std::max_element(private_sorted.begin(), private_sorted.end()));
  JoinResult result = finish(sinks, stats, cfg, in.swapped);
  result.phase_timings["sort-public"] = public_done - t0;
  result.phase_timings["sort-private"] = private_done - public_done;
  result.phase_timings["join"] = t_end - private_done;
  result.total_time = Clock::now() - t0;
  return result;
}

JoinResult run_pmpsm(const Relation& r, const Relation& s, const JoinConfig& cfg, const PhaseHook& hook) {
  const auto t0 = Clock::now();
  const Inputs in = prepare(r, s, cfg);
  const unsigned T = cfg.threads;

  std::string clamp_warning;
  const unsigned B = effective_radix_bits(cfg.radix_bits, cfg.domain, &clamp_warning);
  if ((std::uint64_t{1} << B) < T) {
    throw ConfigError("key domain has only " + std::to_string(B) + " significant bits; cannot form " +
                      std::to_string(T) + " radix partitions");
  }

  std::vector<Run> public_runs(T);
  std::vector<LocalBounds> bounds(T);
  std::vector<RadixHistogram> histograms(T);
  std::vector<std::unique_ptr<Tuple[]>> private_storage(T);
  std::vector<std::span<Tuple>> private_runs(T);
  std::vector<JoinSink> sinks(T, JoinSink(cfg.query_mode, in.swapped, cfg.materialize_limit));
  std::vector<WorkerStats> stats(T);
  std::vector<Clock::time_point> private_sorted(T, t0);
  SplitterSet splitters;
  PartitionPlan plan;
  Clock::time_point public_done = t0;
  Clock::time_point scatter_done = t0;
  FailureLatch latch;

  // Single coordination step between histogramming and scattering.
  auto coordinate = [&]() noexcept {
    latch.run([&] {
      const Cdf cdf = build_cdf(bounds, cfg.domain.lower());
      const RadixHistogram global = sum_histograms(histograms);
      splitters = compute_splitters(global, cdf, T, cfg.domain);
      plan = combine_prefix_cursors(histograms, splitters.vector);
      verify_disjoint_regions(plan);
      for (unsigned j = 0; j < T; ++j) {
        const std::size_t n = plan.run_sizes[j];
        // Uninitialized so pages are first touched by the scattering writers
        // unless the interleave policy asks the coordinator to fault them in.
        private_storage[j] = std::unique_ptr<Tuple[]>(new Tuple[n]);
        if (cfg.alloc_policy == AllocPolicy::interleave) std::fill_n(private_storage[j].get(), n, Tuple{0, 0});
        private_runs[j] = std::span<Tuple>(private_storage[j].get(), n);
      }
    });
  };

  std::barrier public_sorted(static_cast<std::ptrdiff_t>(T), [&]() noexcept { public_done = Clock::now(); });
  std::barrier histogrammed(static_cast<std::ptrdiff_t>(T), coordinate);
  std::barrier scattered(static_cast<std::ptrdiff_t>(T), [&]() noexcept { scatter_done = Clock::now(); });

  spawn_workers(T, [&](unsigned w) {
    if (cfg.pin_workers) pin_to_core(w);
    const auto priv_chunk = chunk(in.priv->view(), T)[w];

    latch.run([&] {
      if (hook) hook(w, Phase::sort_public);
      public_runs[w] = sort_run(copy_chunk(in.pub->view(), T, w), cfg.domain, w);
      stats[w].tuples_sorted += public_runs[w].size();
    });
    public_sorted.arrive_and_wait();

    latch.run([&] {
      if (hook) hook(w, Phase::partition);
      bounds[w] = local_equiheight_bounds(public_runs[w].view(), cfg.cdf_fanout, T);
      histograms[w] = build_radix_histogram(priv_chunk, cfg.domain, B);
    });
    histogrammed.arrive_and_wait();

    latch.run([&] {
      stats[w].tuples_scattered = scatter(priv_chunk, plan, w, splitters.vector, cfg.domain, B, private_runs);
    });
    scattered.arrive_and_wait();

    latch.run([&] {
      if (hook) hook(w, Phase::sort_private);
      sort_tuples(private_runs[w], cfg.domain);
      stats[w].tuples_sorted += private_runs[w].size();
      stats[w].private_run_size = private_runs[w].size();
    });
    private_sorted[w] = Clock::now();
    latch.run([&] {
      if (hook) hook(w, Phase::join);
      join_private_run(private_runs[w], public_runs, sinks[w], stats[w]);
    });
  });
  latch.rethrow();

  const auto t_end = Clock::now();
  const auto private_done = std::max(scatter_done, *std::max_element(private_sorted.begin(), private_sorted.end()));
  JoinResult result = finish(sinks, stats, cfg, in.swapped);
  if (!clamp_warning.empty()) result.warnings.push_back(clamp_warning);
  result.splitters = splitters.splitters;
  result.partition_costs = splitters.costs;
  result.phase_timings["sort-public"] = public_done - t0;
  result.phase_timings["partition"] = scatter_done - public_done;
  result.phase_timings["sort-private"] = private_done - scatter_done;
  result.phase_timings["join"] = t_end - private_done;
  result.total_time = Clock::now() - t0;
  return result;
}

JoinResult run_join(const Relation& r, const Relation& s, const JoinConfig& cfg, const PhaseHook& hook) {
  switch (cfg.algorithm) {
    case Algorithm::bmpsm: return run_bmpsm(r, s, cfg, hook);
    case Algorithm::pmpsm: return run_pmpsm(r, s, cfg, hook);
    case Algorithm::hash_oracle: {
      const auto t0 = Clock::now();
      cfg.validate();
      JoinResult res = hash_join_oracle(r, s, cfg.query_mode, cfg.materialize_limit);
      res.total_time = Clock::now() - t0;
      res.phase_timings["join"] = res.total_time;
      return res;
    }
  }
  throw ConfigError("unknown algorithm");
}

}  // namespace mpsm
