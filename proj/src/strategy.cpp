#include "crowdstream/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace crowdstream {

std::string_view to_string(AdaptationKind kind) {
  switch (kind) {
    case AdaptationKind::optimal:
      return "optimal";
    case AdaptationKind::buffer_based:
      return "buffer_based";
    case AdaptationKind::bandwidth_based:
      return "bandwidth_based";
    case AdaptationKind::hybrid:
      return "hybrid";
  }
  return "unknown";
}

AdaptationKind parse_adaptation(std::string_view name) {
  if (name == "optimal") return AdaptationKind::optimal;
  if (name == "buffer_based") return AdaptationKind::buffer_based;
  if (name == "bandwidth_based") return AdaptationKind::bandwidth_based;
  if (name == "hybrid") return AdaptationKind::hybrid;
  throw std::invalid_argument("unknown adaptation policy '" + std::string(name) + "'");
}

double row_objective(const UserProfile& profile, const UserState& state,
                     const ScoreFunction& downloader_cost, std::span<const double> row) {
  return utility_total(profile, state, row) - downloader_cost(row);
}

BitrateMatrix optimal_bitrate_matrix(const UserProfile& profile, const UserState& state,
                                     const ScoreFunction& downloader_cost, std::size_t K) {
  const auto& ladder = profile.ladder.rates();
  std::vector<double> row_rates;
  row_rates.reserve(K);
  for (std::size_t kappa = 1; kappa <= K; ++kappa) {
    double best_rate = ladder.front();
    double best_value = -std::numeric_limits<double>::infinity();
    for (double r : ladder) {
      const double g = segment_quality(profile, r) - downloader_cost(r);
      const double value =
          static_cast<double>(kappa) * g - degradation_step(profile, state.prev_bitrate, r);
      if (value > best_value) {
        best_value = value;
        best_rate = r;
      }
    }
    row_rates.push_back(best_rate);
  }
  return BitrateMatrix::uniform(row_rates);
}

BitrateMatrix brute_force_bitrate_matrix(const UserProfile& profile, const UserState& state,
                                         const ScoreFunction& downloader_cost, std::size_t K) {
  const auto& ladder = profile.ladder.rates();
  std::vector<BitrateVector> rows;
  for (std::size_t kappa = 1; kappa <= K; ++kappa) {
    std::size_t combos = 1;
    for (std::size_t i = 0; i < kappa; ++i) combos *= ladder.size();
    BitrateVector candidate(kappa);
    BitrateVector best;
    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t code = 0; code < combos; ++code) {
      std::size_t rest = code;
      for (std::size_t i = kappa; i-- > 0;) {
        candidate[i] = ladder[rest % ladder.size()];
        rest /= ladder.size();
      }
      const double value = row_objective(profile, state, downloader_cost, candidate);
      if (value > best_value) {
        best_value = value;
        best = candidate;
      }
    }
    rows.push_back(std::move(best));
  }
  return BitrateMatrix(std::move(rows));
}

std::vector<double> truthful_price_vector(const UserProfile& profile, const UserState& state,
                                          const BitrateMatrix& matrix) {
  std::vector<double> prices;
  prices.reserve(matrix.size());
  for (std::size_t kappa = 1; kappa <= matrix.size(); ++kappa) {
    prices.push_back(utility_total(profile, state, matrix.row(kappa)));
  }
  return prices;
}

MomdBid truthful_bid(const UserProfile& profile, const UserState& state, BitrateMatrix matrix) {
  MomdBid bid;
  bid.bidder = profile.id;
  bid.prices = truthful_price_vector(profile, state, matrix);
  bid.bitrates = std::move(matrix);
  return bid;
}

bool should_participate(const UserProfile& profile, const UserState& state,
                        double auctioneer_capacity, std::span<const double> neighbor_shares,
                        const ParticipationConfig& cfg) {
  // A starving bidder takes whatever capacity is on offer.
  if (state.buffer_s <= 0.0) return true;
  const double buffer_threshold =
      cfg.alpha_buf * state.prev_bitrate * profile.ladder.segment_length_s() / state.buffer_s;
  double share_sum = 0.0;
  for (double s : neighbor_shares) share_sum += s;
  const double link_threshold = cfg.alpha_link * share_sum;
  const bool refrain =
      auctioneer_capacity < buffer_threshold && auctioneer_capacity < link_threshold;
  return !refrain;
}

namespace {

double bandwidth_rate(const AdaptationPolicy& policy, double est_capacity,
                      const BitrateLadder& ladder) {
  const double budget = policy.bandwidth_safety * est_capacity;
  double chosen = ladder.lowest();
  for (double r : ladder.rates()) {
    if (r <= budget) chosen = r;
  }
  return chosen;
}

double buffer_rate(const UserState& state, const BitrateLadder& ladder) {
  const double Z = static_cast<double>(ladder.size());
  const double fill = state.buffer_s / ladder.max_buffer_s();
  auto index = static_cast<std::size_t>(std::floor(Z * fill));
  index = std::clamp<std::size_t>(index, 1, ladder.size());
  return ladder.rates()[index - 1];
}

}  // namespace

double baseline_bitrate(const AdaptationPolicy& policy, const UserState& state,
                        double est_capacity, const BitrateLadder& ladder) {
  switch (policy.kind) {
    case AdaptationKind::bandwidth_based:
      return bandwidth_rate(policy, est_capacity, ladder);
    case AdaptationKind::buffer_based:
      return buffer_rate(state, ladder);
    case AdaptationKind::hybrid:
      return std::min(bandwidth_rate(policy, est_capacity, ladder), buffer_rate(state, ladder));
    case AdaptationKind::optimal:
      break;
  }
  throw std::invalid_argument("optimal adaptation has no baseline rate; use the bidding strategy");
}

}  // namespace crowdstream
