#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crowdstream/engine.hpp"
#include "crowdstream/momd.hpp"
#include "crowdstream/trace.hpp"

namespace crowdstream {

// Cells swept by `compare`. Empty axes fall back to the scenario's own value.
struct CompareGrid {
  std::vector<Mechanism> mechanisms;
  std::vector<AdaptationKind> adaptations;
  std::vector<std::size_t> K;
  std::vector<double> overhead_energy;
  std::vector<double> overhead_time_s;
  std::vector<bool> participation;
  std::size_t replications = 1;
  std::size_t threads = 1;
};

struct Scenario {
  SimConfig sim;
  // Capacity statistics for synthesized traces, one entry per user.
  std::vector<CapacityStats> capacity;
  double trace_horizon_s = 0.0;  // 0 = the simulation's time limit
  double trace_step_s = 1.0;
  // Explicit contact windows; absent = everyone always meets everyone.
  std::optional<EncounterTrace> encounters;
  CompareGrid grid;
};

// JSON in, JSON out. Throws ConfigError naming the offending key.
Scenario parse_scenario(std::string_view json_text);
Scenario load_scenario(const std::filesystem::path& path);
std::string dump_scenario(const Scenario& scenario);

std::vector<std::string> user_names(const SimConfig& cfg);

// Synthesized traces of one replication; seeds derive from sim.seed + replication.
TraceSet synthesize_traces(const Scenario& scenario, std::size_t replication);

std::vector<ComparisonCell> expand_grid(const Scenario& scenario);

// Small auction instance for the brute-force oracles. Either raw marginal
// scores (allocation only) or full bidder profiles with a downloader.
struct OracleInstance {
  std::size_t K = 1;
  std::vector<std::vector<double>> marginal_scores;
  std::optional<UserProfile> downloader;
  std::optional<double> downloader_capacity_mbps;  // enables the time-cost term
  std::vector<Participant> bidders;
};

OracleInstance parse_oracle_instance(std::string_view json_text);

}  // namespace crowdstream
