#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "mpsm/core.hpp"

namespace mpsm {

// Relation file: "MPSMREL1", u64le count, then count x (u64le key, u64le payload).
inline constexpr char relation_magic[8] = {'M', 'P', 'S', 'M', 'R', 'E', 'L', '1'};
inline constexpr std::size_t relation_header_size = 16;

std::vector<unsigned char> encode_relation(const Relation& rel);
/// Throws FormatError (with byte offset) on bad magic, truncation or trailing bytes.
Relation decode_relation(std::span<const unsigned char> bytes);

void write_relation(const Relation& rel, const std::filesystem::path& path);
Relation read_relation(const std::filesystem::path& path);

/// Workload shapes for a pair of relations.
enum class Workload { uniform, skewed, negcorr, location };

std::string to_string(Workload w);
Workload parse_workload(const std::string& s);

enum class ReportFormat { csv, json };

ReportFormat parse_report_format(const std::string& s);

struct ExperimentConfig {
  std::vector<Algorithm> algorithms{Algorithm::pmpsm};
  std::vector<unsigned> threads{1};
  std::size_t size_r = 1 << 16;
  std::vector<unsigned> multiplicities{4};
  Workload workload = Workload::uniform;
  std::vector<std::uint64_t> seeds{1};
  unsigned radix_bits = 10;
  unsigned cdf_fanout = 4;
  std::vector<RolePolicy> roles{RolePolicy::automatic};
  unsigned repetitions = 1;
  QueryMode query = QueryMode::aggregate_max;
  bool oracle = true;
  bool pin = false;
  KeyDomain domain{};
  /// When both are set they replace generated data (size/multiplicity/seed sweeps collapse).
  std::optional<Relation> loaded_r;
  std::optional<Relation> loaded_s;

  /// Throws ConfigError for empty sweeps or zero repetitions.
  void validate() const;
};

struct ReportRow {
  std::string algorithm;
  unsigned threads = 0;
  std::string roles;
  std::uint64_t size_r = 0;
  std::uint64_t size_s = 0;
  unsigned multiplicity = 0;
  std::string distribution;
  std::uint64_t seed = 0;
  unsigned rep = 0;
  unsigned radix_bits = 0;
  unsigned cdf_fanout = 0;
  std::int64_t sort_public_us = 0;
  std::int64_t partition_us = 0;
  std::int64_t sort_private_us = 0;
  std::int64_t join_us = 0;
  std::int64_t total_us = 0;
  std::uint64_t match_count = 0;
  std::optional<std::uint64_t> aggregate;
  std::vector<std::uint64_t> worker_tuples_sorted;
  std::vector<std::uint64_t> worker_tuples_scattered;
  std::vector<std::uint64_t> worker_public_examined;
  std::optional<bool> oracle_ok;
  std::string error;
};

using Cell = std::variant<std::monostate, std::uint64_t, std::int64_t, bool, std::string>;

const std::vector<std::string>& report_columns();
std::vector<Cell> row_cells(const ReportRow& row);

/// R and S for one configuration point (location workloads cluster S per worker count).
std::pair<Relation, Relation> generate_workload(const ExperimentConfig& cfg, unsigned multiplicity,
                                                std::uint64_t seed, unsigned threads);

std::vector<ReportRow> run_experiment(const ExperimentConfig& cfg);

std::string format_csv(std::span<const ReportRow> rows);
std::string format_json(std::span<const ReportRow> rows);

/// Refuses empty input; I/O failures name the path.
void emit_report(std::span<const ReportRow> rows, const std::filesystem::path& path, ReportFormat format);

}  // namespace mpsm
