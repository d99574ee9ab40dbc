#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "crowdstream/model.hpp"
#include "crowdstream/somd.hpp"

namespace crowdstream {

// Lower-triangular bid matrix: row kappa (1-based) lists the bitrates of the
// kappa segments the bidder wants if awarded kappa segments. Entries right of
// the diagonal are implicitly zero.
class BitrateMatrix {
 public:
  BitrateMatrix() = default;
  explicit BitrateMatrix(std::vector<BitrateVector> rows);

  // Row kappa filled with `row_rates[kappa - 1]`.
  static BitrateMatrix uniform(std::span<const double> row_rates);

  std::size_t size() const { return rows_.size(); }
  std::span<const double> row(std::size_t kappa) const;
  double at(std::size_t kappa, std::size_t i) const;
  bool on_ladder(const BitrateLadder& ladder) const;

  friend bool operator==(const BitrateMatrix&, const BitrateMatrix&) = default;

 private:
  std::vector<BitrateVector> rows_;
};

struct MomdBid {
  UserId bidder;
  BitrateMatrix bitrates;
  std::vector<double> prices;  // prices[kappa - 1] is the total for kappa segments
};

struct MarginalScoreSeq {
  std::vector<double> scores;
};

double momd_score(std::span<const double> row, double price, const ScoreFunction& sf);

MarginalScoreSeq marginal_scores(const MomdBid& bid, const ScoreFunction& sf);

struct Assumption1Check {
  bool holds = true;
  // 1-based kappa: a negative S_kappa, or S_kappa < S_(kappa+1).
  std::optional<std::size_t> first_violation;
};

// Marginal scores must be nonnegative and nonincreasing.
Assumption1Check validate_assumption1(const MarginalScoreSeq& seq);

struct ScoredBidder {
  UserId bidder;
  MarginalScoreSeq scores;
};

struct VickreyAllocation {
  std::vector<UserId> per_segment_winners;  // k-th highest marginal score's owner
  std::vector<std::size_t> counts;          // aligned with the input bidders
  std::vector<double> score_damage;         // payment minus s(winning row)
};

// Top-K marginal scores win, ties by (bidder id, kappa). Each bidder's damage is
// the sum of the K - kappa + 1 .. K highest competing marginal scores, with
// missing competitors counted as zero.
VickreyAllocation allocate_marginal_scores(std::span<const ScoredBidder> bidders, std::size_t K);

struct BidderAward {
  UserId bidder;
  std::size_t segments = 0;
  BitrateVector bitrates;
  double payment = 0.0;
  double score_damage = 0.0;
};

struct MomdOutcome {
  std::vector<UserId> per_segment_winners;
  std::vector<BidderAward> awards;  // aligned with the input bids
  std::size_t assumption1_violations = 0;

  bool guaranteed() const { return assumption1_violations == 0; }
};

MomdOutcome resolve_vickrey_score(std::span<const MomdBid> bids, const ScoreFunction& sf,
                                  std::size_t K);

// Sum over winners of receiver utility minus the downloader's cost.
double outcome_welfare(const MomdOutcome& outcome, std::span<const Participant> bidders,
                       const UserProfile& downloader);

struct MomdOptimum {
  std::vector<std::size_t> counts;
  std::vector<BitrateVector> bitrates;
  double welfare = 0.0;
};

inline constexpr std::size_t kMaxOracleBidders = 4;
inline constexpr std::size_t kMaxOracleSegments = 4;
inline constexpr std::size_t kMaxOracleLadder = 5;

// Enumerates every split of K segments over the bidders and every ladder
// assignment of each bidder's share. Throws SizeGuardError past 4x4x5.
MomdOptimum brute_force_momd_optimum(std::span<const Participant> bidders,
                                     const UserProfile& downloader, std::size_t K);

// Same enumeration with each bidder's bitrates pinned to the rows of a matrix.
MomdOptimum brute_force_fixed_rows_optimum(std::span<const Participant> bidders,
                                           std::span<const BitrateMatrix> matrices,
                                           const UserProfile& downloader, std::size_t K);

struct SufficientConditionReport {
  bool nonnegative_ok = true;
  std::optional<double> violating_rate;  // first ladder rate with v^Q < c
  double required_gap = 0.0;             // 2K c(R^Z) + l(R^Z, 0)
  std::optional<double> tightest_gap;    // Delta~, absent when K < 2
  bool nonincreasing_ok = true;

  bool ok() const { return nonnegative_ok && nonincreasing_ok; }
};

// Checks the cost/utility conditions that make every optimal truthful bid of
// `bidder` to `downloader` satisfy Assumption 1. Delta~ is evaluated from the
// geometric buffer gain at its loosest point (kappa = K - 2, B = max buffer).
SufficientConditionReport check_sufficient_conditions(const UserProfile& downloader,
                                                      const UserProfile& bidder, std::size_t K);

}  // namespace crowdstream
