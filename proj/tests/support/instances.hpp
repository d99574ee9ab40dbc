#pragma once

// Random auction instances shared by the property tests and the acceptance
// suite. Everything is driven by an explicit mt19937_64 so that a failing seed
// can be replayed.

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "crowdstream/model.hpp"
#include "crowdstream/momd.hpp"
#include "crowdstream/somd.hpp"
#include "crowdstream/strategy.hpp"

namespace crowdstream::testing {

inline const std::vector<double> kLadderRates{0.2, 0.4, 0.7, 1.3, 2.3};

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// Nonempty random subset of the standard ladder, at most `max_z` rates.
inline BitrateLadder random_ladder(std::mt19937_64& rng, double beta, double max_buffer,
                                   std::size_t max_z = 5) {
  std::vector<double> rates = kLadderRates;
  std::shuffle(rates.begin(), rates.end(), rng);
  rates.resize(pick(rng, 1, std::min<std::size_t>(max_z, rates.size())));
  std::sort(rates.begin(), rates.end());
  return BitrateLadder(rates, beta, max_buffer);
}

struct InstanceShape {
  double beta = 10.0;
  double max_buffer = 40.0;
  std::size_t max_z = 5;
};

inline UserProfile random_profile(std::mt19937_64& rng, std::uint32_t id,
                                  const InstanceShape& shape) {
  UserProfile p{UserId{id}, "u" + std::to_string(id),
                random_ladder(rng, shape.beta, shape.max_buffer, shape.max_z)};
  p.theta = uniform(rng, 0.0, 2.0);
  p.cost_per_mbit = uniform(rng, 0.0, 0.4);
  p.buffer_gain_scale = uniform(rng, 0.0, 10.0);
  p.buffer_gain_decay = uniform(rng, 0.1, 0.9);
  p.degradation_slope = uniform(rng, 0.0, 3.0);
  return p;
}

inline UserState random_state(std::mt19937_64& rng, const UserProfile& profile) {
  UserState s;
  s.buffer_s = uniform(rng, 0.0, profile.ladder.max_buffer_s());
  if (pick(rng, 0, 3) != 0) {
    const auto& rates = profile.ladder.rates();
    s.prev_bitrate = rates[pick(rng, 0, rates.size() - 1)];
  }
  return s;
}

inline std::vector<Participant> random_participants(std::mt19937_64& rng, std::size_t count,
                                                    const InstanceShape& shape) {
  std::vector<Participant> out;
  for (std::size_t m = 0; m < count; ++m) {
    UserProfile p = random_profile(rng, static_cast<std::uint32_t>(m), shape);
    UserState s = random_state(rng, p);
    out.push_back({std::move(p), std::move(s)});
  }
  return out;
}

// Downloader whose cost is purely volume based, so the efficient score
// function equals the welfare cost term exactly.
inline UserProfile random_downloader(std::mt19937_64& rng, const InstanceShape& shape) {
  UserProfile d{UserId{999}, "downloader", BitrateLadder(kLadderRates, shape.beta, shape.max_buffer)};
  d.cost_per_mbit = uniform(rng, 0.0, 0.4);
  return d;
}

struct MomdInstance {
  std::size_t K = 1;
  UserProfile downloader;
  std::vector<Participant> bidders;
  std::vector<MomdBid> bids;  // truthful, optimal matrices
};

inline std::vector<MomdBid> optimal_truthful_bids(const std::vector<Participant>& bidders,
                                                  const ScoreFunction& sf, std::size_t K) {
  std::vector<MomdBid> bids;
  for (const auto& p : bidders) {
    bids.push_back(truthful_bid(p.profile, p.state, optimal_bitrate_matrix(p.profile, p.state, sf, K)));
  }
  return bids;
}

// Resamples until every truthful optimal bid satisfies Assumption 1.
inline MomdInstance random_momd_instance(std::mt19937_64& rng, std::size_t max_bidders,
                                         std::size_t max_k) {
  for (;;) {
    MomdInstance inst{pick(rng, 1, max_k), random_downloader(rng, {}), {}, {}};
    inst.bidders = random_participants(rng, pick(rng, 1, max_bidders), {});
    const ScoreFunction sf = ScoreFunction::efficient(inst.downloader);
    inst.bids = optimal_truthful_bids(inst.bidders, sf, inst.K);
    bool valid = true;
    for (const auto& bid : inst.bids) {
      valid = valid && validate_assumption1(marginal_scores(bid, sf)).holds;
    }
    if (valid) return inst;
  }
}

// 0, 0.1x, ..., 2x of a truthful value.
inline std::vector<double> deviation_grid(double truthful) {
  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(truthful * 0.1 * i);
  return grid;
}

}  // namespace crowdstream::testing
