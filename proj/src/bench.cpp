#include "mpsm/bench.hpp"

#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "json.hpp"
#include "mpsm/datagen.hpp"
#include "mpsm/engine.hpp"

namespace mpsm {

namespace {

void put_u64le(unsigned char* out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out[b] = static_cast<unsigned char>(v >> (8 * b));
}

std::uint64_t get_u64le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int b = 7; b >= 0; --b) v = (v << 8) | p[b];
  return v;
}

}  // namespace

std::vector<unsigned char> encode_relation(const Relation& rel) {
  std::vector<unsigned char> out(relation_header_size + rel.cardinality() * 16);
  unsigned char* p = out.data();
  std::memcpy(p, relation_magic, sizeof(relation_magic));
  put_u64le(p + 8, rel.cardinality());
  p += relation_header_size;
  for (const Tuple& t : rel.tuples) {
    put_u64le(p, t.key);
    put_u64le(p + 8, t.payload);
    p += 16;
  }
  return out;
}

Relation decode_relation(std::span<const unsigned char> bytes) {
  if (bytes.size() < sizeof(relation_magic)) throw FormatError("truncated magic", bytes.size());
  if (std::memcmp(bytes.data(), relation_magic, sizeof(relation_magic)) != 0) throw FormatError("bad magic", 0);
  if (bytes.size() < relation_header_size) throw FormatError("truncated tuple count", bytes.size());
  const std::uint64_t count = get_u64le(bytes.data() + 8);
  const std::uint64_t available = (bytes.size() - relation_header_size) / 16;
  if (count > available) {
    throw FormatError("truncated record " + std::to_string(available) + " of " + std::to_string(count),
                      relation_header_size + available * 16);
  }
  const std::uint64_t expected = relation_header_size + count * 16;
  if (bytes.size() != expected) throw FormatError("trailing bytes after last record", expected);
  std::vector<Tuple> tuples(count);
  const unsigned char* p = bytes.data() + relation_header_size;
  for (auto& t : tuples) {
    t.key = get_u64le(p);
    t.payload = get_u64le(p + 8);
    p += 16;
  }
  return Relation(std::move(tuples));
}

void write_relation(const Relation& rel, const std::filesystem::path& path) {
  const auto bytes = encode_relation(rel);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

Relation read_relation(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_relation(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what(), e.offset());
  }
}

std::string to_string(Workload w) {
  switch (w) {
    case Workload::uniform: return "uniform";
    case Workload::skewed: return "skew";
    case Workload::negcorr: return "negcorr";
    case Workload::location: return "location";
  }
  return "?";
}

Workload parse_workload(const std::string& s) {
  if (s == "uniform") return Workload::uniform;
  if (s == "skew" || s == "80:20") return Workload::skewed;
  if (s == "negcorr") return Workload::negcorr;
  if (s == "location") return Workload::location;
  throw ConfigError("unknown distribution '" + s + "' (expected uniform, skew, negcorr or location)");
}

ReportFormat parse_report_format(const std::string& s) {
  if (s == "csv") return ReportFormat::csv;
  if (s == "json") return ReportFormat::json;
  throw ConfigError("unknown report format '" + s + "'");
}

void ExperimentConfig::validate() const {
  if (algorithms.empty() || threads.empty() || multiplicities.empty() || seeds.empty() || roles.empty())
    throw ConfigError("experiment sweeps must not be empty");
  if (repetitions == 0) throw ConfigError("repetitions must be at least 1");
  if (loaded_r.has_value() != loaded_s.has_value()) throw ConfigError("load both relations or neither");
}

namespace {

struct Dataset {
  Relation r;
  Relation s;
  unsigned multiplicity;
  std::uint64_t seed;
};

}  // namespace

std::pair<Relation, Relation> generate_workload(const ExperimentConfig& cfg, unsigned multiplicity,
                                                std::uint64_t seed, unsigned threads) {
  const std::size_t n_s = cfg.size_r * multiplicity;
  GenSpec rs{cfg.size_r, cfg.domain, Distribution::uniform, seed, 1};
  GenSpec ss{n_s, cfg.domain, Distribution::uniform, seed ^ 0x9E3779B97F4A7C15ull, 1};
  switch (cfg.workload) {
    case Workload::uniform: break;
    case Workload::skewed:
      rs.distribution = Distribution::skew_high;
      ss.distribution = Distribution::skew_high;
      break;
    case Workload::negcorr:
      rs.distribution = Distribution::skew_high;
      ss.distribution = Distribution::skew_low;
      break;
    case Workload::location:
      ss.distribution = Distribution::location_sorted;
      ss.clusters = threads;
      break;
  }
  return {generate(rs), generate(ss)};
}

namespace {

Dataset make_dataset(const ExperimentConfig& cfg, unsigned multiplicity, std::uint64_t seed, unsigned threads) {
  auto [r, s] = generate_workload(cfg, multiplicity, seed, threads);
  return {std::move(r), std::move(s), multiplicity, seed};
}

std::string join_list(const std::vector<std::uint64_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += std::to_string(v[i]);
  }
  return out;
}

std::int64_t micros(const JoinResult& res, const char* phase) {
  auto it = res.phase_timings.find(phase);
  if (it == res.phase_timings.end()) return 0;
  return std::chrono::duration_cast<std::chrono::microseconds>(it->second).count();
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string cell_text(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, std::monostate>) return "";
        else if constexpr (std::is_same_v<V, bool>) return v ? "true" : "false";
        else if constexpr (std::is_same_v<V, std::string>) return v;
        else return std::to_string(v);
      },
      c);
}

nlohmann::ordered_json cell_json(const Cell& c) {
  return std::visit(
      [](const auto& v) -> nlohmann::ordered_json {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, std::monostate>) return nullptr;
        else return v;
      },
      c);
}

}  // namespace

const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> columns = {
      "algorithm",       "threads",        "roles",
      "size_r",          "size_s",         "multiplicity",
      "distribution",    "seed",           "rep",
      "radix_bits",      "cdf_fanout",     "sort_public_us",
      "partition_us",    "sort_private_us", "join_us",
      "total_us",        "match_count",    "aggregate",
      "worker_tuples_sorted", "worker_tuples_scattered", "worker_public_examined",
      "oracle_ok",       "error"};
  return columns;
}

std::vector<Cell> row_cells(const ReportRow& r) {
  auto opt_u64 = [](const std::optional<std::uint64_t>& v) -> Cell { return v ? Cell{*v} : Cell{}; };
  return {r.algorithm,
          std::uint64_t{r.threads},
          r.roles,
          r.size_r,
          r.size_s,
          std::uint64_t{r.multiplicity},
          r.distribution,
          r.seed,
          std::uint64_t{r.rep},
          std::uint64_t{r.radix_bits},
          std::uint64_t{r.cdf_fanout},
          r.sort_public_us,
          r.partition_us,
          r.sort_private_us,
          r.join_us,
          r.total_us,
          r.match_count,
          opt_u64(r.aggregate),
          join_list(r.worker_tuples_sorted),
          join_list(r.worker_tuples_scattered),
          join_list(r.worker_public_examined),
          r.oracle_ok ? Cell{*r.oracle_ok} : Cell{},
          r.error};
}

std::vector<ReportRow> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<ReportRow> rows;
  const bool loaded = cfg.loaded_r.has_value();
  const std::vector<std::uint64_t> seeds = loaded ? std::vector<std::uint64_t>{0} : cfg.seeds;
  const std::vector<unsigned> mults = loaded ? std::vector<unsigned>{0} : cfg.multiplicities;

  for (std::uint64_t seed : seeds) {
    for (unsigned m : mults) {
      std::optional<Dataset> shared;
      std::optional<JoinResult> oracle;
      for (unsigned T : cfg.threads) {
        // Location-skewed public data is clustered per worker count.
        std::optional<Dataset> per_t;
        const Dataset* data;
        if (loaded) {
          if (!shared) shared = Dataset{*cfg.loaded_r, *cfg.loaded_s, 0, 0};
          data = &*shared;
        } else if (cfg.workload == Workload::location) {
          per_t = make_dataset(cfg, m, seed, T);
          data = &*per_t;
        } else {
          if (!shared) shared = make_dataset(cfg, m, seed, T);
          data = &*shared;
        }
        if (cfg.oracle && (!oracle || per_t)) {
          oracle = hash_join_oracle(data->r, data->s, cfg.query == QueryMode::materialize ? QueryMode::count : cfg.query);
        }
        for (Algorithm algo : cfg.algorithms) {
          for (RolePolicy role : cfg.roles) {
            for (unsigned rep = 0; rep < cfg.repetitions; ++rep) {
              ReportRow row;
              row.algorithm = to_string(algo);
              row.threads = T;
              row.roles = to_string(role);
              row.size_r = data->r.cardinality();
              row.size_s = data->s.cardinality();
              row.multiplicity = loaded ? 0 : m;
              row.distribution = loaded ? "loaded" : to_string(cfg.workload);
              row.seed = data->seed;
              row.rep = rep;
              row.radix_bits = cfg.radix_bits;
              row.cdf_fanout = cfg.cdf_fanout;
              try {
                JoinConfig jc;
                jc.threads = T;
                jc.radix_bits = cfg.radix_bits;
                jc.cdf_fanout = cfg.cdf_fanout;
                jc.algorithm = algo;
                jc.role_policy = role;
                jc.query_mode = cfg.query;
                jc.domain = cfg.domain;
                jc.pin_workers = cfg.pin;
                const JoinResult res = run_join(data->r, data->s, jc);
                row.sort_public_us = micros(res, "sort-public");
                row.partition_us = micros(res, "partition");
                row.sort_private_us = micros(res, "sort-private");
                row.join_us = micros(res, "join");
                row.total_us = std::chrono::duration_cast<std::chrono::microseconds>(res.total_time).count();
                row.match_count = res.match_count;
                row.aggregate = res.aggregate_max;
                for (const auto& ws : res.worker_stats) {
                  row.worker_tuples_sorted.push_back(ws.tuples_sorted);
                  row.worker_tuples_scattered.push_back(ws.tuples_scattered);
                  row.worker_public_examined.push_back(ws.public_examined + ws.probe_steps);
                }
                if (oracle) {
                  row.oracle_ok = res.match_count == oracle->match_count &&
                                  (cfg.query != QueryMode::aggregate_max || res.aggregate_max == oracle->aggregate_max);
                }
              } catch (const Error& e) {
                row.error = e.what();
              }
              rows.push_back(std::move(row));
            }
          }
        }
      }
    }
  }
  return rows;
}

std::string format_csv(std::span<const ReportRow> rows) {
  std::ostringstream out;
  const auto& cols = report_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& row : rows) {
    const auto cells = row_cells(row);
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << csv_escape(cell_text(cells[i]));
    out << '\n';
  }
  return out.str();
}

std::string format_json(std::span<const ReportRow> rows) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  const auto& cols = report_columns();
  for (const auto& row : rows) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    const auto cells = row_cells(row);
    for (std::size_t i = 0; i < cells.size(); ++i) obj[cols[i]] = cell_json(cells[i]);
    arr.push_back(std::move(obj));
  }
  return arr.dump(2) + "\n";
}

void emit_report(std::span<const ReportRow> rows, const std::filesystem::path& path, ReportFormat format) {
  if (rows.empty()) throw ConfigError("refusing to write an empty report to '" + path.string() + "'");
  const std::string text = format == ReportFormat::csv ? format_csv(rows) : format_json(rows);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

}  // namespace mpsm
