#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crowdstream/model.hpp"
#include "crowdstream/strategy.hpp"
#include "crowdstream/trace.hpp"

namespace crowdstream {

enum class Mechanism { somd, momd, vickrey_1d, noncooperative };

std::string_view to_string(Mechanism m);
Mechanism parse_mechanism(std::string_view name);

struct SimUser {
  UserProfile profile;
  bool helper = true;  // keeps auctioning its link after its own video is fetched
};

struct SimConfig {
  std::vector<SimUser> users;
  std::size_t K = 1;
  Mechanism mechanism = Mechanism::momd;
  AdaptationPolicy adaptation;
  bool participation_enabled = false;
  ParticipationConfig participation;
  double video_length_s = 100.0;
  double overhead_energy_per_auction = 0.0;
  double overhead_time_per_auction_s = 0.0;
  double d2d_delay_s = 0.0;      // 0 = instantaneous device-to-device hop
  double idle_retry_s = 1.0;     // poll period of an idle link with nothing to sell
  std::size_t capacity_window = 3;
  double max_time_s = 0.0;       // 0 = 20 x video length + 1000 s
  std::uint64_t seed = 1;
  bool record_events = true;

  // Throws ConfigError.
  void validate() const;
  std::size_t segments_per_video() const;
};

enum class EventKind {
  auction_start,
  auction_resolved,
  segment_downloaded,
  segment_delivered,
  playback_stall_start,
  playback_stall_end,
  video_complete,
};

std::string_view to_string(EventKind kind);

struct SimEvent {
  double time_s = 0.0;
  std::uint64_t sequence = 0;
  EventKind kind = EventKind::auction_start;
  UserId user;    // auctioneer / downloader / the user whose playback changed
  UserId peer;    // receiver for downloads and deliveries
  std::size_t segment = 0;
  double bitrate = 0.0;
  double value = 0.0;  // auction: participants; download: duration; stall end: length

  friend bool operator==(const SimEvent&, const SimEvent&) = default;
};

struct PaymentTransfer {
  UserId payer;
  double amount = 0.0;

  friend bool operator==(const PaymentTransfer&, const PaymentTransfer&) = default;
};

struct AuctionRecord {
  double time_s = 0.0;
  UserId auctioneer;
  std::size_t participants = 0;
  std::size_t segments = 0;
  std::vector<PaymentTransfer> paid;  // by winners other than the auctioneer
  double received = 0.0;              // credited to the auctioneer
  bool guaranteed = true;

  friend bool operator==(const AuctionRecord&, const AuctionRecord&) = default;
};

struct UserMetrics {
  std::string name;
  double utility = 0.0;
  double cost = 0.0;
  double overhead = 0.0;
  double payments_made = 0.0;
  double payments_received = 0.0;
  double welfare = 0.0;  // utility - cost - overhead - made + received
  std::size_t segments = 0;
  double average_bitrate = 0.0;
  double rebuffer_s = 0.0;
  std::size_t stall_count = 0;
  double degradation_volume = 0.0;
  std::size_t degradation_events = 0;
  double degradation_ratio = 0.0;
  double rebuffer_ratio = 0.0;
  double completion_time_s = 0.0;
  double min_buffer_s = 0.0;
  double max_buffer_s = 0.0;
  std::vector<double> bitrates;  // in playback order

  friend bool operator==(const UserMetrics&, const UserMetrics&) = default;
};

struct AggregateMetrics {
  double social_welfare = 0.0;
  double total_utility = 0.0;
  double total_cost = 0.0;
  double overhead_energy = 0.0;
  double rebuffer_ratio = 0.0;
  double degradation_ratio = 0.0;
  double average_bitrate = 0.0;
  std::size_t auction_count = 0;
  std::size_t assumption1_violations = 0;
  double end_time_s = 0.0;

  friend bool operator==(const AggregateMetrics&, const AggregateMetrics&) = default;
};

struct SimResult {
  std::vector<UserMetrics> users;
  AggregateMetrics aggregate;
  std::vector<AuctionRecord> auctions;
  std::vector<SimEvent> events;

  friend bool operator==(const SimResult&, const SimResult&) = default;
};

// Time to pull `rate * beta` megabits through a piecewise-constant link,
// starting at `start_s`. Throws TraceError when the link never delivers.
double download_duration(std::span<const CapacityPoint> series, double start_s, double rate,
                         double beta);

SimResult run_simulation(const SimConfig& cfg, const CapacityTrace& capacity,
                         const EncounterTrace& encounters);

// Bid of a single-dimensional (price only) auction.
struct PriceBid {
  UserId bidder;
  double price = 0.0;
};

struct PriceOutcome {
  UserId winner;
  double payment = 0.0;
};

// Textbook Vickrey: highest price (lowest id on ties) pays the runner-up price.
PriceOutcome single_dimensional_vickrey(std::span<const PriceBid> bids);

struct InvariantReport {
  std::size_t payment_violations = 0;
  std::size_t buffer_violations = 0;
  std::size_t welfare_violations = 0;
  std::size_t rebuffer_violations = 0;

  std::size_t total() const {
    return payment_violations + buffer_violations + welfare_violations + rebuffer_violations;
  }
};

// Re-derives the accounting identities of a finished run.
InvariantReport check_invariants(const SimConfig& cfg, const SimResult& result);

struct TraceSet {
  CapacityTrace capacity;
  EncounterTrace encounters;
};

struct ComparisonCell {
  std::string label;
  SimConfig config;
};

struct CellSummary {
  std::string label;
  std::size_t replications = 0;
  double social_welfare = 0.0;
  double rebuffer_ratio = 0.0;
  double degradation_ratio = 0.0;
  double average_bitrate = 0.0;
  double auction_count = 0.0;
  double assumption1_violations = 0.0;
  std::size_t invariant_violations = 0;
  std::size_t determinism_failures = 0;
  std::vector<AggregateMetrics> runs;  // by replication index
};

struct ComparisonOptions {
  std::size_t replications = 1;
  std::size_t threads = 1;
  bool check_determinism = false;  // re-run every simulation and compare
};

using TraceFactory = std::function<TraceSet(std::size_t replication)>;

// Runs every cell against the same per-replication traces. Output order follows
// the cells; replications are merged by index regardless of thread count.
std::vector<CellSummary> run_comparison(std::span<const ComparisonCell> cells,
                                        const TraceFactory& traces,
                                        const ComparisonOptions& options);

}  // namespace crowdstream
