#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crowdstream/engine.hpp"
#include "crowdstream/trace.hpp"

namespace crowdstream {

// Capacity rows are `time_s,user_id,capacity_mbps`; encounter rows are
// `time_s,user_a,user_b,connected`. A header line is optional, blank lines and
// lines starting with '#' are skipped. Errors carry the 1-based line number.
// With a non-empty `known_users`, rows naming anyone else are rejected.
CapacityTrace parse_capacity_trace(std::string_view text,
                                   std::span<const std::string> known_users = {});
EncounterTrace parse_encounter_trace(std::string_view text,
                                     std::span<const std::string> known_users = {});

// Shortest round-trip formatting, so parse(format(t)) == t.
std::string format_capacity_trace(const CapacityTrace& trace);
std::string format_encounter_trace(const EncounterTrace& trace);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

// Metrics are printed with 6 significant digits.
std::string format_metric(double value);

struct Table {
  std::vector<std::string> header;
  std::vector<bool> numeric;  // per column; numeric cells are unquoted in JSON
  std::vector<std::vector<std::string>> rows;
};

Table users_table(const SimResult& result);
Table aggregate_table(const SimResult& result);
Table events_table(const SimResult& result);
Table comparison_table(std::span<const CellSummary> cells);

std::string to_csv(const Table& table);
std::string to_jsonl(const Table& table);
// Inverse of to_csv for the simple cells we emit (no embedded commas or quotes).
Table parse_csv(std::string_view text);

enum class ResultFormat { csv, jsonl };

ResultFormat parse_result_format(std::string_view name);

// Writes users, aggregate and (optionally) events into `dir`, one file per table.
void emit_results(const SimResult& result, const std::filesystem::path& dir, ResultFormat format,
                  bool include_events = true);
void emit_comparison(std::span<const CellSummary> cells, const std::filesystem::path& dir,
                     ResultFormat format);

}  // namespace crowdstream
