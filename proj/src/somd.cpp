#include "crowdstream/somd.hpp"

#include <array>
#include <stdexcept>

#include "crowdstream/errors.hpp"

namespace crowdstream {

ScoreFunction::ScoreFunction(std::string label, PerSegment per_segment)
    : label_(std::move(label)), per_segment_(std::move(per_segment)) {}

ScoreFunction ScoreFunction::zero() {
  return ScoreFunction("zero", [](double) { return 0.0; });
}

ScoreFunction ScoreFunction::linear(double per_mbps) {
  if (per_mbps < 0.0) throw std::invalid_argument("score slope must be nonnegative");
  return ScoreFunction("linear", [per_mbps](double r) { return per_mbps * r; });
}

ScoreFunction ScoreFunction::efficient(const UserProfile& downloader) {
  return ScoreFunction("efficient", [downloader](double r) { return segment_cost(downloader, r); });
}

ScoreFunction ScoreFunction::efficient(const UserProfile& downloader, double est_capacity_mbps) {
  UserProfile effective = downloader;
  effective.cost_per_mbit = estimated_cost_per_mbit(downloader, est_capacity_mbps);
  effective.time_cost_per_s = 0.0;
  return efficient(effective);
}

double ScoreFunction::operator()(double rate) const {
  if (rate == 0.0) return 0.0;
  return per_segment_(rate);
}

double ScoreFunction::operator()(std::span<const double> rates) const {
  double total = 0.0;
  for (double r : rates) total += (*this)(r);
  return total;
}

double score(const SomdBid& bid, const ScoreFunction& sf) { return bid.price - sf(bid.bitrate); }

SomdOutcome resolve_second_score(std::span<const SomdBid> bids, const ScoreFunction& sf) {
  if (bids.size() < 2) throw AuctionError("insufficient bidders");

  std::size_t best = 0;
  double best_score = score(bids[0], sf);
  for (std::size_t i = 1; i < bids.size(); ++i) {
    const double s = score(bids[i], sf);
    if (s > best_score || (s == best_score && bids[i].bidder < bids[best].bidder)) {
      best = i;
      best_score = s;
    }
  }

  bool have_second = false;
  double second = 0.0;
  for (std::size_t i = 0; i < bids.size(); ++i) {
    if (i == best) continue;
    const double s = score(bids[i], sf);
    if (!have_second || s > second) {
      second = s;
      have_second = true;
    }
  }

  SomdOutcome out;
  out.winner = bids[best].bidder;
  out.winning_bitrate = bids[best].bitrate;
  out.winning_score = best_score;
  out.second_score = second;
  out.payment = second + sf(out.winning_bitrate);
  return out;
}

SomdBid optimal_somd_bid(const UserProfile& profile, const UserState& state,
                         const ScoreFunction& sf) {
  SomdBid bid;
  bid.bidder = profile.id;
  double best_objective = 0.0;
  bool first = true;
  for (double r : profile.ladder.rates()) {
    const std::array<double, 1> row{r};
    const double utility = utility_total(profile, state, row);
    const double objective = utility - sf(r);
    if (first || objective > best_objective) {
      best_objective = objective;
      bid.bitrate = r;
      bid.price = utility;
      first = false;
    }
  }
  return bid;
}

SomdOptimum brute_force_somd_optimum(std::span<const Participant> bidders,
                                     const UserProfile& downloader) {
  if (bidders.empty()) throw std::invalid_argument("brute force needs at least one bidder");
  SomdOptimum best;
  bool first = true;
  for (const Participant& p : bidders) {
    for (double r : p.profile.ladder.rates()) {
      const std::array<double, 1> row{r};
      const double w = welfare(downloader, p.profile, p.state, row).welfare;
      if (first || w > best.welfare || (w == best.welfare && p.profile.id < best.bidder)) {
        best = {p.profile.id, r, w};
        first = false;
      }
    }
  }
  return best;
}

}  // namespace crowdstream
