#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ednet/calibration.hpp"
#include "ednet/engine.hpp"
#include "ednet/sbo.hpp"

namespace ednet {

/// Writes via a sibling temporary file and rename, so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

// RFC-4180 CSV.
std::string csv_field(std::string_view text);
std::string csv_row(std::span<const std::string> fields);
/// Parses quoted fields, doubled quotes, embedded separators and line breaks;
/// accepts CRLF or LF record ends. Throws std::runtime_error on malformed quoting.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

/// Value rounded to two decimals, for stochastic means in JSON reports.
double round2(double value);

/// 95% Student-t half-width of the mean; nullopt when fewer than two values.
std::optional<double> half_width_95(std::span<const double> values);

// Fronts.

/// s_<ed id><slot label> columns, then f1_minutes, f2_minutes, viol_norm, feasible.
std::vector<std::string> front_header(const NetworkConfig& cfg);
/// Front rows sorted as given. f2 is printed as an integer, other values in
/// shortest round-trip form so that reading the file back is exact.
std::string front_csv(const NetworkConfig& cfg, const std::vector<Evaluation>& front);

struct FrontRow {
  std::vector<int> servers;
  double f1 = 0.0;
  double f2 = 0.0;
  double viol_norm = 0.0;
  bool feasible = false;

  friend bool operator==(const FrontRow&, const FrontRow&) = default;
};

FrontRow to_front_row(const Evaluation& e);
std::vector<FrontRow> read_front_csv(const NetworkConfig& cfg, std::string_view text);

/// Plot series: one (f2, f1) row per front point.
std::string series_csv(const OptimizationResult& result);

// JSON reports.

nlohmann::json simulation_report(const NetworkModel& model, const Allocation& alloc, const ADPolicy& policy,
                                 const RunDesign& design, std::span<const ReplicationStats> reps);

nlohmann::json front_json(const NetworkConfig& cfg, const OptimizationResult& result);
nlohmann::json comparison_report(const NetworkConfig& cfg, const PolicyComparison& comparison);

/// Trace rows: time,event_type,ed,patient_id,tag (ED ids and tag labels).
std::string trace_csv_header();
std::string trace_csv_row(const NetworkModel& model, const TraceEvent& event);

/// Reads ed,slot,tag,mean_dtdt_minutes rows.
DTDTTargets read_targets_csv(std::string_view text);
std::string targets_csv(const NetworkConfig& cfg, std::size_t ed_index,
                        const std::vector<std::vector<double>>& means_by_slot_tag);

struct RunManifest {
  std::string config_path;
  std::string config_sha256;
  std::string subcommand;
  std::vector<std::string> policy_ids;
  std::uint64_t seed = 0;
  int replications = 0;
  std::optional<int> budget;
  std::optional<std::string> started_at;  // only when timestamps are requested
  std::optional<std::string> finished_at;
  std::vector<std::string> artifacts;
};

nlohmann::json to_json(const RunManifest& manifest);

/// Two-space indented JSON terminated by a newline.
std::string dump_json(const nlohmann::json& doc);

}  // namespace ednet
