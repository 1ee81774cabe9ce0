#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "mpsm/bench.hpp"
#include "mpsm/datagen.hpp"
#include "mpsm/engine.hpp"
#include "mpsm/partition.hpp"
#include "mpsm/skew.hpp"
#include "mpsm/sorter.hpp"

namespace py = pybind11;
using namespace mpsm;

namespace {

using U64Array = py::array_t<std::uint64_t, py::array::c_style | py::array::forcecast>;

std::vector<Tuple> to_tuples(const U64Array& keys, const U64Array& payloads) {
  if (keys.ndim() != 1 || payloads.ndim() != 1) throw ConfigError("keys and payloads must be 1-d");
  if (keys.size() != payloads.size()) throw ConfigError("keys and payloads differ in length");
  auto k = keys.unchecked<1>();
  auto p = payloads.unchecked<1>();
  std::vector<Tuple> out(static_cast<std::size_t>(keys.size()));
  for (py::ssize_t i = 0; i < keys.size(); ++i) out[i] = {k(i), p(i)};
  return out;
}

py::tuple from_tuples(const std::vector<Tuple>& tuples) {
  const std::vector<py::ssize_t> shape{static_cast<py::ssize_t>(tuples.size())};
  U64Array keys(shape), payloads(shape);
  auto k = keys.mutable_unchecked<1>();
  auto p = payloads.mutable_unchecked<1>();
  for (std::size_t i = 0; i < tuples.size(); ++i) {
    k(i) = tuples[i].key;
    p(i) = tuples[i].payload;
  }
  return py::make_tuple(keys, payloads);
}

double seconds(std::chrono::nanoseconds ns) { return std::chrono::duration<double>(ns).count(); }

py::dict stats_dict(const WorkerStats& s) {
  py::dict d;
  d["tuples_sorted"] = s.tuples_sorted;
  d["tuples_scattered"] = s.tuples_scattered;
  d["public_examined"] = s.public_examined;
  d["probe_steps"] = s.probe_steps;
  d["runs_with_matches"] = s.runs_with_matches;
  d["private_run_size"] = s.private_run_size;
  d["matches"] = s.matches;
  return d;
}

// Splitter plan for `r` (private) against `s` (public) as the engine would
// compute it: s is chunked and sorted per worker, r is histogrammed.
py::dict plan_splitters(const Relation& r, const Relation& s, unsigned threads, unsigned radix_bits,
                        unsigned cdf_fanout, const KeyDomain& dom, bool balanced) {
  if (threads == 0 || cdf_fanout == 0) throw ConfigError("threads and cdf_fanout must be positive");
  std::vector<LocalBounds> bounds;
  for (auto c : chunk(s.tuples, threads))
    bounds.push_back(local_equiheight_bounds(sort_run(std::vector<Tuple>(c.begin(), c.end()), dom).tuples,
                                             cdf_fanout, threads));
  const Cdf cdf = build_cdf(bounds, dom.lower());
  const unsigned bits = effective_radix_bits(radix_bits, dom);
  const RadixHistogram h = build_radix_histogram(r.tuples, dom, bits);
  const SplitterSet set = balanced ? compute_splitters(h, cdf, threads, dom)
                                   : equal_cardinality_splitters(h, cdf, threads, dom);
  py::dict d;
  d["splitters"] = set.splitters;
  d["first_buckets"] = set.first_buckets;
  d["private_sizes"] = set.private_sizes;
  d["public_spans"] = set.public_spans;
  d["costs"] = set.costs;
  d["max_cost"] = set.max_cost;
  d["mean_cost"] = set.mean_cost();
  return d;
}

}  // namespace

PYBIND11_MODULE(_mpsm, m) {
  m.doc() = "Parallel sort-merge equi-join (B-MPSM and range-partitioned P-MPSM).";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<DomainError>(m, "DomainError", error.ptr());
  py::register_exception<ConsistencyError>(m, "ConsistencyError", error.ptr());
  py::register_exception<FormatError>(m, "FormatError", error.ptr());

  py::enum_<Algorithm>(m, "Algorithm")
      .value("bmpsm", Algorithm::bmpsm)
      .value("pmpsm", Algorithm::pmpsm)
      .value("hash", Algorithm::hash_oracle);
  py::enum_<RolePolicy>(m, "RolePolicy")
      .value("auto", RolePolicy::automatic)
      .value("r_private", RolePolicy::r_private)
      .value("s_private", RolePolicy::s_private);
  py::enum_<QueryMode>(m, "QueryMode")
      .value("aggregate_max", QueryMode::aggregate_max)
      .value("count", QueryMode::count)
      .value("materialize", QueryMode::materialize);
  py::enum_<AllocPolicy>(m, "AllocPolicy")
      .value("local_first", AllocPolicy::local_first)
      .value("interleave", AllocPolicy::interleave);
  py::enum_<Distribution>(m, "Distribution")
      .value("uniform", Distribution::uniform)
      .value("skew_high", Distribution::skew_high)
      .value("skew_low", Distribution::skew_low)
      .value("location_sorted", Distribution::location_sorted);

  py::class_<KeyDomain>(m, "KeyDomain")
      .def(py::init<>())
      .def(py::init<Key, Key>(), py::arg("lower"), py::arg("upper"))
      .def_property_readonly("lower", &KeyDomain::lower)
      .def_property_readonly("upper", &KeyDomain::upper)
      .def_property_readonly("width_bits", &KeyDomain::width_bits)
      .def("__contains__", &KeyDomain::contains)
      .def("__repr__", [](const KeyDomain& d) {
        return "KeyDomain(" + std::to_string(d.lower()) + ", " + std::to_string(d.upper()) + ")";
      });

  py::class_<Relation>(m, "Relation")
      .def(py::init<>())
      .def(py::init([](const U64Array& keys, const U64Array& payloads) { return Relation(to_tuples(keys, payloads)); }),
           py::arg("keys"), py::arg("payloads"))
      .def("__len__", &Relation::cardinality)
      .def_property_readonly("keys", [](const Relation& r) { return py::object(from_tuples(r.tuples)[0]); })
      .def_property_readonly("payloads", [](const Relation& r) { return py::object(from_tuples(r.tuples)[1]); })
      .def("arrays", [](const Relation& r) { return from_tuples(r.tuples); });

  py::class_<JoinConfig>(m, "JoinConfig")
      .def(py::init<>())
      .def_readwrite("threads", &JoinConfig::threads)
      .def_readwrite("radix_bits", &JoinConfig::radix_bits)
      .def_readwrite("cdf_fanout", &JoinConfig::cdf_fanout)
      .def_readwrite("algorithm", &JoinConfig::algorithm)
      .def_readwrite("role_policy", &JoinConfig::role_policy)
      .def_readwrite("query_mode", &JoinConfig::query_mode)
      .def_readwrite("domain", &JoinConfig::domain)
      .def_readwrite("pin_workers", &JoinConfig::pin_workers)
      .def_readwrite("alloc_policy", &JoinConfig::alloc_policy)
      .def_readwrite("materialize_limit", &JoinConfig::materialize_limit)
      .def("validate", &JoinConfig::validate);

  py::class_<JoinResult>(m, "JoinResult")
      .def_readonly("aggregate_max", &JoinResult::aggregate_max)
      .def_readonly("match_count", &JoinResult::match_count)
      .def_readonly("materialized", &JoinResult::materialized)
      .def_readonly("splitters", &JoinResult::splitters)
      .def_readonly("partition_costs", &JoinResult::partition_costs)
      .def_readonly("warnings", &JoinResult::warnings)
      .def_readonly("roles_swapped", &JoinResult::roles_swapped)
      .def_property_readonly("total_time", [](const JoinResult& r) { return seconds(r.total_time); })
      .def_property_readonly("phase_timings",
                             [](const JoinResult& r) {
                               py::dict d;
                               for (const auto& [name, ns] : r.phase_timings) d[py::str(name)] = seconds(ns);
                               return d;
                             })
      .def_property_readonly("worker_stats", [](const JoinResult& r) {
        py::list out;
        for (const auto& s : r.worker_stats) out.append(stats_dict(s));
        return out;
      });

  m.def(
      "sort_run",
      [](const U64Array& keys, const U64Array& payloads, const KeyDomain& dom) {
        std::vector<Tuple> t = to_tuples(keys, payloads);
        const ValidationReport rep = validate_relation(Relation(t), dom);
        if (!rep.valid()) throw DomainError("key outside the domain at position " +
                                            std::to_string(rep.sample_positions.front()));
        {
          py::gil_scoped_release release;
          sort_tuples(t, dom);
        }
        return from_tuples(t);
      },
      py::arg("keys"), py::arg("payloads"), py::arg("domain") = KeyDomain(),
      "Sort (key, payload) arrays by key; returns new arrays.");

  m.def(
      "interpolation_search",
      [](const U64Array& sorted_keys, Key target) {
        std::vector<Tuple> t(static_cast<std::size_t>(sorted_keys.size()));
        auto k = sorted_keys.unchecked<1>();
        for (py::ssize_t i = 0; i < sorted_keys.size(); ++i) t[i].key = k(i);
        return interpolation_search(t, target);
      },
      py::arg("sorted_keys"), py::arg("target"), "Lower-bound index of target in sorted keys.");

  m.def("choose_roles",
        [](std::uint64_t n_first, std::uint64_t n_second, RolePolicy p) {
          return choose_roles(n_first, n_second, p).first_is_private;
        },
        py::arg("n_first"), py::arg("n_second"), py::arg("policy") = RolePolicy::automatic,
        "True when the first relation should be the private input.");

  m.def("split_relevant_cost", &split_relevant_cost, py::arg("private_size"), py::arg("threads"),
        py::arg("public_span"));

  m.def(
      "generate",
      [](std::size_t n, Distribution d, std::uint64_t seed, const KeyDomain& dom, unsigned clusters) {
        return generate(GenSpec{n, dom, d, seed, clusters});
      },
      py::arg("cardinality"), py::arg("distribution") = Distribution::uniform, py::arg("seed") = 0,
      py::arg("domain") = KeyDomain(), py::arg("clusters") = 1);

  m.def(
      "hash_join",
      [](const Relation& r, const Relation& s, QueryMode mode) {
        py::gil_scoped_release release;
        return hash_join_oracle(r, s, mode);
      },
      py::arg("r"), py::arg("s"), py::arg("mode") = QueryMode::aggregate_max);

  m.def(
      "run_join",
      [](const Relation& r, const Relation& s, const JoinConfig& cfg) {
        py::gil_scoped_release release;
        return run_join(r, s, cfg);
      },
      py::arg("r"), py::arg("s"), py::arg("config") = JoinConfig());

  m.def("plan_splitters", &plan_splitters, py::arg("r"), py::arg("s"), py::arg("threads"),
        py::arg("radix_bits") = 10, py::arg("cdf_fanout") = 4, py::arg("domain") = KeyDomain(),
        py::arg("balanced") = true);

  m.def("write_relation", &write_relation, py::arg("relation"), py::arg("path"));
  m.def("read_relation", &read_relation, py::arg("path"));
}
