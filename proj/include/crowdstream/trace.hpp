#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace crowdstream {

struct CapacityPoint {
  double time_s = 0.0;
  double capacity_mbps = 0.0;

  friend bool operator==(const CapacityPoint&, const CapacityPoint&) = default;
};

// Piecewise-constant cellular capacity per user. Each series starts at t = 0,
// has strictly increasing breakpoints, and its last value extends forever.
class CapacityTrace {
 public:
  void set_series(const std::string& user, std::vector<CapacityPoint> points);

  bool has_user(const std::string& user) const { return series_.count(user) != 0; }
  std::span<const CapacityPoint> series(const std::string& user) const;
  double capacity_at(const std::string& user, double t) const;
  const std::map<std::string, std::vector<CapacityPoint>>& all() const { return series_; }

  friend bool operator==(const CapacityTrace&, const CapacityTrace&) = default;

 private:
  std::map<std::string, std::vector<CapacityPoint>> series_;
};

double capacity_at(std::span<const CapacityPoint> series, double t);

struct EncounterToggle {
  double time_s = 0.0;
  bool connected = false;

  friend bool operator==(const EncounterToggle&, const EncounterToggle&) = default;
};

// Pairwise contact windows. Pairs are unordered; unlisted pairs never meet and
// every user always meets itself.
class EncounterTrace {
 public:
  static EncounterTrace fully_connected(std::span<const std::string> users);

  void set_toggles(const std::string& a, const std::string& b, std::vector<EncounterToggle> toggles);
  bool connected(const std::string& a, const std::string& b, double t) const;

  using PairKey = std::pair<std::string, std::string>;
  const std::map<PairKey, std::vector<EncounterToggle>>& all() const { return toggles_; }

  friend bool operator==(const EncounterTrace&, const EncounterTrace&) = default;

 private:
  static PairKey key(const std::string& a, const std::string& b);
  std::map<PairKey, std::vector<EncounterToggle>> toggles_;
};

bool connected_at(std::span<const EncounterToggle> toggles, double t);

// One piece of a user's capacity profile: from start_s on, capacity per step is
// drawn from a normal(mean, std) truncated at zero.
struct CapacityPhase {
  double start_s = 0.0;
  double mean_mbps = 1.0;
  double std_mbps = 0.0;
};

struct CapacityStats {
  std::string user;
  std::vector<CapacityPhase> phases;
};

CapacityTrace generate_synthetic_traces(std::span<const CapacityStats> stats, double horizon_s,
                                        double step_s, std::uint64_t seed);

}  // namespace crowdstream
