#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "crowdstream/model.hpp"
#include "crowdstream/momd.hpp"
#include "crowdstream/somd.hpp"

namespace crowdstream {

// Coefficients of the refrain-from-bidding rule. Defaults are the values that
// maximized long-run welfare in the original tuning sweep.
struct ParticipationConfig {
  double alpha_buf = 1.0;
  double alpha_link = 0.5;
};

enum class AdaptationKind { optimal, buffer_based, bandwidth_based, hybrid };

std::string_view to_string(AdaptationKind kind);
AdaptationKind parse_adaptation(std::string_view name);

struct AdaptationPolicy {
  AdaptationKind kind = AdaptationKind::optimal;
  double bandwidth_safety = 1.0;  // fraction of the capacity estimate BW-based may use
};

// Row kappa holds kappa copies of argmax_r (kappa * g(r) - l(R^pre, r)), where
// g(r) = v^Q(r) - s(r). Exact for linear s.
BitrateMatrix optimal_bitrate_matrix(const UserProfile& profile, const UserState& state,
                                     const ScoreFunction& downloader_cost, std::size_t K);

// Full search over all ladder vectors of each row length. Used as an oracle.
BitrateMatrix brute_force_bitrate_matrix(const UserProfile& profile, const UserState& state,
                                         const ScoreFunction& downloader_cost, std::size_t K);

// Objective maximized by each row: U(row) - s(row).
double row_objective(const UserProfile& profile, const UserState& state,
                     const ScoreFunction& downloader_cost, std::span<const double> row);

std::vector<double> truthful_price_vector(const UserProfile& profile, const UserState& state,
                                          const BitrateMatrix& matrix);

MomdBid truthful_bid(const UserProfile& profile, const UserState& state, BitrateMatrix matrix);

// False when the auctioneer's link is both too slow to keep the bidder's buffer
// from draining and slower than the bidder's fair share of its neighbors' links.
bool should_participate(const UserProfile& profile, const UserState& state,
                        double auctioneer_capacity, std::span<const double> neighbor_shares,
                        const ParticipationConfig& cfg);

// Rate chosen by a heuristic (non-optimal) adaptation policy.
double baseline_bitrate(const AdaptationPolicy& policy, const UserState& state,
                        double est_capacity, const BitrateLadder& ladder);

}  // namespace crowdstream
