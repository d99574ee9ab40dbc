#include "crowdstream/momd.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "crowdstream/errors.hpp"

namespace crowdstream {

BitrateMatrix::BitrateMatrix(std::vector<BitrateVector> rows) : rows_(std::move(rows)) {
  for (std::size_t k = 0; k < rows_.size(); ++k) {
    if (rows_[k].size() != k + 1) {
      throw std::invalid_argument("bitrate matrix row " + std::to_string(k + 1) +
                                  " must hold exactly " + std::to_string(k + 1) + " entries");
    }
    for (double r : rows_[k]) {
      if (!(r > 0.0)) throw std::invalid_argument("bitrate matrix entries must be positive");
    }
  }
}

BitrateMatrix BitrateMatrix::uniform(std::span<const double> row_rates) {
  std::vector<BitrateVector> rows;
  rows.reserve(row_rates.size());
  for (std::size_t k = 0; k < row_rates.size(); ++k) {
    rows.emplace_back(k + 1, row_rates[k]);
  }
  return BitrateMatrix(std::move(rows));
}

std::span<const double> BitrateMatrix::row(std::size_t kappa) const {
  if (kappa == 0) return {};
  return rows_.at(kappa - 1);
}

double BitrateMatrix::at(std::size_t kappa, std::size_t i) const {
  const auto r = row(kappa);
  if (i == 0 || i > r.size()) return 0.0;
  return r[i - 1];
}

bool BitrateMatrix::on_ladder(const BitrateLadder& ladder) const {
  for (const auto& row : rows_) {
    for (double r : row) {
      if (!ladder.contains(r)) return false;
    }
  }
  return true;
}

double momd_score(std::span<const double> row, double price, const ScoreFunction& sf) {
  return price - sf(row);
}

MarginalScoreSeq marginal_scores(const MomdBid& bid, const ScoreFunction& sf) {
  if (bid.prices.size() != bid.bitrates.size()) {
    throw std::invalid_argument("price vector and bitrate matrix sizes differ");
  }
  MarginalScoreSeq out;
  out.scores.reserve(bid.prices.size());
  double previous = 0.0;
  for (std::size_t k = 1; k <= bid.prices.size(); ++k) {
    const double phi = momd_score(bid.bitrates.row(k), bid.prices[k - 1], sf);
    out.scores.push_back(phi - previous);
    previous = phi;
  }
  return out;
}

Assumption1Check validate_assumption1(const MarginalScoreSeq& seq) {
  for (std::size_t i = 0; i < seq.scores.size(); ++i) {
    if (i > 0 && seq.scores[i] > seq.scores[i - 1]) return {false, i};
    if (seq.scores[i] < 0.0) return {false, i + 1};
  }
  return {};
}

namespace {

struct Entry {
  double score;
  std::size_t owner;  // index into the bidder span
  UserId bidder;
  std::size_t kappa;
};

bool ranks_before(const Entry& a, const Entry& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.bidder != b.bidder) return a.bidder < b.bidder;
  return a.kappa < b.kappa;
}

}  // namespace

VickreyAllocation allocate_marginal_scores(std::span<const ScoredBidder> bidders, std::size_t K) {
  std::vector<Entry> entries;
  for (std::size_t m = 0; m < bidders.size(); ++m) {
    const auto& scores = bidders[m].scores.scores;
    for (std::size_t k = 0; k < scores.size(); ++k) {
      entries.push_back({scores[k], m, bidders[m].bidder, k + 1});
    }
  }
  if (entries.size() < K) throw AuctionError("insufficient marginal scores");
  std::sort(entries.begin(), entries.end(), ranks_before);

  VickreyAllocation out;
  out.counts.assign(bidders.size(), 0);
  out.score_damage.assign(bidders.size(), 0.0);
  out.per_segment_winners.reserve(K);
  for (std::size_t k = 0; k < K; ++k) {
    out.per_segment_winners.push_back(entries[k].bidder);
    ++out.counts[entries[k].owner];
  }

  std::vector<double> competing;
  competing.reserve(K);
  for (std::size_t m = 0; m < bidders.size(); ++m) {
    const std::size_t won = out.counts[m];
    if (won == 0) continue;
    competing.clear();
    for (const Entry& e : entries) {
      if (competing.size() == K) break;
      if (e.owner != m) competing.push_back(e.score);
    }
    competing.resize(K, 0.0);
    double damage = 0.0;
    for (std::size_t i = 1; i <= won; ++i) damage += competing[K - won + i - 1];
    out.score_damage[m] = damage;
  }
  return out;
}

MomdOutcome resolve_vickrey_score(std::span<const MomdBid> bids, const ScoreFunction& sf,
                                  std::size_t K) {
  if (bids.empty()) throw AuctionError("insufficient bidders");

  std::vector<ScoredBidder> scored;
  scored.reserve(bids.size());
  MomdOutcome out;
  for (const MomdBid& bid : bids) {
    scored.push_back({bid.bidder, marginal_scores(bid, sf)});
    if (!validate_assumption1(scored.back().scores).holds) ++out.assumption1_violations;
  }

  const VickreyAllocation alloc = allocate_marginal_scores(scored, K);
  out.per_segment_winners = alloc.per_segment_winners;
  out.awards.reserve(bids.size());
  for (std::size_t m = 0; m < bids.size(); ++m) {
    BidderAward award;
    award.bidder = bids[m].bidder;
    award.segments = alloc.counts[m];
    if (award.segments > 0) {
      const auto row = bids[m].bitrates.row(award.segments);
      award.bitrates.assign(row.begin(), row.end());
      award.score_damage = alloc.score_damage[m];
      award.payment = sf(row) + award.score_damage;
    }
    out.awards.push_back(std::move(award));
  }
  return out;
}

double outcome_welfare(const MomdOutcome& outcome, std::span<const Participant> bidders,
                       const UserProfile& downloader) {
  double total = 0.0;
  for (const BidderAward& award : outcome.awards) {
    if (award.segments == 0) continue;
    const auto it = std::find_if(bidders.begin(), bidders.end(), [&](const Participant& p) {
      return p.profile.id == award.bidder;
    });
    if (it == bidders.end()) throw std::invalid_argument("award for unknown bidder");
    total += welfare(downloader, it->profile, it->state, award.bitrates).welfare;
  }
  return total;
}

namespace {

void guard_size(std::size_t bidders, std::size_t K, std::size_t ladder) {
  if (bidders > kMaxOracleBidders || K > kMaxOracleSegments || ladder > kMaxOracleLadder) {
    throw SizeGuardError("brute-force instance exceeds M<=4, K<=4, Z<=5 (M=" +
                         std::to_string(bidders) + ", K=" + std::to_string(K) +
                         ", Z=" + std::to_string(ladder) + ")");
  }
}

// table[m][kappa] = best welfare for bidder m receiving kappa segments (nullopt
// when infeasible), with the achieving bitrates.
struct ShareTable {
  std::vector<std::vector<std::optional<double>>> value;
  std::vector<std::vector<BitrateVector>> rates;
};

MomdOptimum best_composition(const ShareTable& table, std::size_t K) {
  const std::size_t M = table.value.size();
  MomdOptimum best;
  bool found = false;
  std::vector<std::size_t> counts(M, 0);

  std::function<void(std::size_t, std::size_t)> recurse = [&](std::size_t m, std::size_t left) {
    if (m + 1 == M || M == 0) {
      if (M == 0) {
        if (left != 0) return;
      } else {
        counts[m] = left;
      }
      double total = 0.0;
      for (std::size_t i = 0; i < M; ++i) {
        const auto& v = table.value[i][counts[i]];
        if (!v) return;
        total += *v;
      }
      if (!found || total > best.welfare) {
        found = true;
        best.welfare = total;
        best.counts = counts;
        best.bitrates.clear();
        for (std::size_t i = 0; i < M; ++i) best.bitrates.push_back(table.rates[i][counts[i]]);
      }
      return;
    }
    for (std::size_t c = 0; c <= left; ++c) {
      counts[m] = c;
      recurse(m + 1, left - c);
    }
  };
  recurse(0, K);
  if (!found) throw AuctionError("insufficient marginal scores");
  return best;
}

}  // namespace

MomdOptimum brute_force_momd_optimum(std::span<const Participant> bidders,
                                     const UserProfile& downloader, std::size_t K) {
  std::size_t widest = 0;
  for (const auto& p : bidders) widest = std::max(widest, p.profile.ladder.size());
  guard_size(bidders.size(), K, widest);
  if (K == 0) {
    return {std::vector<std::size_t>(bidders.size(), 0),
            std::vector<BitrateVector>(bidders.size()), 0.0};
  }

  ShareTable table;
  for (const Participant& p : bidders) {
    const auto& ladder = p.profile.ladder.rates();
    std::vector<std::optional<double>> values{0.0};
    std::vector<BitrateVector> rates{BitrateVector{}};
    for (std::size_t kappa = 1; kappa <= K; ++kappa) {
      std::size_t combos = 1;
      for (std::size_t i = 0; i < kappa; ++i) combos *= ladder.size();
      BitrateVector candidate(kappa);
      std::optional<double> best;
      BitrateVector best_rates;
      // Lexicographic over ladder indices, first entry most significant.
      for (std::size_t code = 0; code < combos; ++code) {
        std::size_t rest = code;
        for (std::size_t i = kappa; i-- > 0;) {
          candidate[i] = ladder[rest % ladder.size()];
          rest /= ladder.size();
        }
        const double w = welfare(downloader, p.profile, p.state, candidate).welfare;
        if (!best || w > *best) {
          best = w;
          best_rates = candidate;
        }
      }
      values.push_back(best);
      rates.push_back(best_rates);
    }
    table.value.push_back(std::move(values));
    table.rates.push_back(std::move(rates));
  }
  return best_composition(table, K);
}

MomdOptimum brute_force_fixed_rows_optimum(std::span<const Participant> bidders,
                                           std::span<const BitrateMatrix> matrices,
                                           const UserProfile& downloader, std::size_t K) {
  if (bidders.size() != matrices.size()) {
    throw std::invalid_argument("one bitrate matrix per bidder required");
  }
  guard_size(bidders.size(), K, 0);
  if (K == 0) {
    return {std::vector<std::size_t>(bidders.size(), 0),
            std::vector<BitrateVector>(bidders.size()), 0.0};
  }
  ShareTable table;
  for (std::size_t m = 0; m < bidders.size(); ++m) {
    std::vector<std::optional<double>> values{0.0};
    std::vector<BitrateVector> rates{BitrateVector{}};
    for (std::size_t kappa = 1; kappa <= K; ++kappa) {
      if (kappa > matrices[m].size()) {
        values.emplace_back();
        rates.emplace_back();
        continue;
      }
      const auto row = matrices[m].row(kappa);
      values.emplace_back(welfare(downloader, bidders[m].profile, bidders[m].state, row).welfare);
      rates.emplace_back(row.begin(), row.end());
    }
    table.value.push_back(std::move(values));
    table.rates.push_back(std::move(rates));
  }
  return best_composition(table, K);
}

SufficientConditionReport check_sufficient_conditions(const UserProfile& downloader,
                                                      const UserProfile& bidder, std::size_t K) {
  SufficientConditionReport report;
  for (double r : bidder.ladder.rates()) {
    if (segment_quality(bidder, r) < segment_cost(downloader, r)) {
      report.nonnegative_ok = false;
      report.violating_rate = r;
      break;
    }
  }

  const double top = bidder.ladder.highest();
  report.required_gap = 2.0 * static_cast<double>(K) * segment_cost(downloader, top) +
                        degradation_step(bidder, top, 0.0);
  if (K >= 2) {
    // Gaps shrink in magnitude as kappa and B grow; the loosest bound sits at
    // the largest kappa entering S_K and a full buffer.
    const double B = bidder.ladder.max_buffer_s();
    const double gap = buffer_gain_gap(bidder, K - 1, B) - buffer_gain_gap(bidder, K - 2, B);
    report.tightest_gap = gap;
    report.nonincreasing_ok = report.required_gap <= std::fabs(gap);
  }
  return report;
}

}  // namespace crowdstream
