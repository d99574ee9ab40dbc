#include "crowdstream/trace.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "crowdstream/errors.hpp"

namespace crowdstream {

void CapacityTrace::set_series(const std::string& user, std::vector<CapacityPoint> points) {
  if (points.empty() || points.front().time_s != 0.0) {
    throw TraceError("capacity trace for '" + user + "' must start at time 0");
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!std::isfinite(points[i].capacity_mbps) || points[i].capacity_mbps < 0.0) {
      throw TraceError("capacity trace for '" + user + "' has a negative capacity");
    }
    if (i > 0 && !(points[i].time_s > points[i - 1].time_s)) {
      throw TraceError("capacity trace for '" + user + "' has non-increasing times");
    }
  }
  series_[user] = std::move(points);
}

std::span<const CapacityPoint> CapacityTrace::series(const std::string& user) const {
  const auto it = series_.find(user);
  if (it == series_.end()) throw TraceError("trace underrun: no capacity trace for '" + user + "'");
  return it->second;
}

double CapacityTrace::capacity_at(const std::string& user, double t) const {
  return crowdstream::capacity_at(series(user), t);
}

double capacity_at(std::span<const CapacityPoint> series, double t) {
  const auto it = std::upper_bound(series.begin(), series.end(), t,
                                   [](double time, const CapacityPoint& p) { return time < p.time_s; });
  if (it == series.begin()) return series.front().capacity_mbps;
  return std::prev(it)->capacity_mbps;
}

EncounterTrace EncounterTrace::fully_connected(std::span<const std::string> users) {
  EncounterTrace out;
  for (std::size_t i = 0; i < users.size(); ++i) {
    for (std::size_t j = i + 1; j < users.size(); ++j) {
      out.set_toggles(users[i], users[j], {{0.0, true}});
    }
  }
  return out;
}

EncounterTrace::PairKey EncounterTrace::key(const std::string& a, const std::string& b) {
  return a < b ? PairKey{a, b} : PairKey{b, a};
}

void EncounterTrace::set_toggles(const std::string& a, const std::string& b,
                                 std::vector<EncounterToggle> toggles) {
  if (a == b) throw TraceError("encounter trace lists self-pair '" + a + "'");
  for (std::size_t i = 1; i < toggles.size(); ++i) {
    if (!(toggles[i].time_s > toggles[i - 1].time_s)) {
      throw TraceError("encounter toggles for " + a + "/" + b + " must have increasing times");
    }
    if (toggles[i].connected == toggles[i - 1].connected) {
      throw TraceError("encounter toggles for " + a + "/" + b + " must alternate");
    }
  }
  toggles_[key(a, b)] = std::move(toggles);
}

bool connected_at(std::span<const EncounterToggle> toggles, double t) {
  bool state = false;
  for (const auto& toggle : toggles) {
    if (toggle.time_s > t) break;
    state = toggle.connected;
  }
  return state;
}

bool EncounterTrace::connected(const std::string& a, const std::string& b, double t) const {
  if (a == b) return true;
  const auto it = toggles_.find(key(a, b));
  if (it == toggles_.end()) return false;
  return connected_at(it->second, t);
}

namespace {

double truncated_normal(std::mt19937_64& rng, double mean, double std) {
  if (std == 0.0) return mean;
  std::normal_distribution<double> dist(mean, std);
  for (;;) {
    const double x = dist(rng);
    if (x > 0.0) return x;
  }
}

}  // namespace

CapacityTrace generate_synthetic_traces(std::span<const CapacityStats> stats, double horizon_s,
                                        double step_s, std::uint64_t seed) {
  if (!(step_s > 0.0) || !(horizon_s > 0.0)) {
    throw std::invalid_argument("horizon and step must be positive");
  }
  CapacityTrace trace;
  std::mt19937_64 rng(seed);
  const auto steps = static_cast<std::size_t>(std::ceil(horizon_s / step_s));
  for (const CapacityStats& user : stats) {
    if (user.phases.empty() || user.phases.front().start_s != 0.0) {
      throw std::invalid_argument("capacity stats for '" + user.user + "' must start at time 0");
    }
    for (const auto& phase : user.phases) {
      if (!(phase.mean_mbps > 0.0) || phase.std_mbps < 0.0) {
        throw std::invalid_argument("capacity stats need mean > 0 and std >= 0");
      }
    }
    std::vector<CapacityPoint> points;
    points.reserve(steps);
    std::size_t phase = 0;
    for (std::size_t k = 0; k < steps; ++k) {
      const double t = static_cast<double>(k) * step_s;
      while (phase + 1 < user.phases.size() && user.phases[phase + 1].start_s <= t) ++phase;
      const auto& p = user.phases[phase];
      points.push_back({t, truncated_normal(rng, p.mean_mbps, p.std_mbps)});
    }
    trace.set_series(user.user, std::move(points));
  }
  return trace;
}

}  // namespace crowdstream
