#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "crowdstream/model.hpp"

namespace crowdstream {

// Maps a segment bitrate to the score penalty s(r). Must be nondecreasing with
// s(0) = 0; vectors are scored component-wise.
class ScoreFunction {
 public:
  using PerSegment = std::function<double(double)>;

  ScoreFunction(std::string label, PerSegment per_segment);

  static ScoreFunction zero();
  static ScoreFunction linear(double per_mbps);
  // s(r) = c_{n,t}(r), the auctioneer's own downloading cost.
  static ScoreFunction efficient(const UserProfile& downloader);
  // Efficient score under an estimated link capacity.
  static ScoreFunction efficient(const UserProfile& downloader, double est_capacity_mbps);

  double operator()(double rate) const;
  double operator()(std::span<const double> rates) const;

  const std::string& label() const { return label_; }

 private:
  std::string label_;
  PerSegment per_segment_;
};

struct SomdBid {
  UserId bidder;
  double bitrate = 0.0;
  double price = 0.0;
};

struct SomdOutcome {
  UserId winner;
  double winning_bitrate = 0.0;
  double payment = 0.0;
  double winning_score = 0.0;
  double second_score = 0.0;
};

double score(const SomdBid& bid, const ScoreFunction& sf);

// Highest score wins (ties to the lowest bidder id); the winner pays the price
// that would have scored the best competing bid at the winning bitrate.
SomdOutcome resolve_second_score(std::span<const SomdBid> bids, const ScoreFunction& sf);

// Bitrate maximizing U(r) - s(r) over the ladder (lowest on ties), priced at U(r).
SomdBid optimal_somd_bid(const UserProfile& profile, const UserState& state,
                         const ScoreFunction& sf);

struct SomdOptimum {
  UserId bidder;
  double bitrate = 0.0;
  double welfare = 0.0;
};

// Exhaustive search over every (bidder, ladder rate) pair.
SomdOptimum brute_force_somd_optimum(std::span<const Participant> bidders,
                                     const UserProfile& downloader);

}  // namespace crowdstream
