#pragma once

#include <compare>
#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <vector>

namespace crowdstream {

// Index of a user within a scenario. Ordering doubles as the auction tie-break.
struct UserId {
  std::uint32_t value = 0;

  friend constexpr auto operator<=>(UserId, UserId) = default;
};

// Bitrates a user's video is encoded at, in Mbps, plus segment and buffer sizes
// in playback seconds.
class BitrateLadder {
 public:
  BitrateLadder(std::vector<double> rates, double segment_length_s, double max_buffer_s);

  const std::vector<double>& rates() const { return rates_; }
  double segment_length_s() const { return segment_length_s_; }
  double max_buffer_s() const { return max_buffer_s_; }

  std::size_t size() const { return rates_.size(); }
  double lowest() const { return rates_.front(); }
  double highest() const { return rates_.back(); }
  bool contains(double rate) const;

 private:
  std::vector<double> rates_;
  double segment_length_s_;
  double max_buffer_s_;
};

struct UserProfile {
  UserId id;
  std::string name;
  BitrateLadder ladder;
  double theta = 1.0;              // desire for quality
  double cost_per_mbit = 0.0;      // volume cost of downloading for anyone
  double time_cost_per_s = 0.0;    // cost of keeping the cellular link busy
  double buffer_gain_scale = 0.0;  // gamma
  double buffer_gain_decay = 0.5;  // rho, in (0, 1)
  double degradation_slope = 0.0;  // lambda

  // Throws std::invalid_argument on out-of-range coefficients.
  void validate() const;
};

struct UserState {
  double buffer_s = 0.0;
  double prev_bitrate = 0.0;  // 0 before the first segment
  std::deque<double> capacity_history;

  void validate(const UserProfile& profile) const;
};

// Bitrates of consecutively received segments, in Mbps.
using BitrateVector = std::vector<double>;

struct WelfareBreakdown {
  double quality_gain = 0.0;
  double buffer_gain = 0.0;
  double degradation_loss = 0.0;
  double cost = 0.0;
  double welfare = 0.0;
};

/// Downloader's cost for a single segment at `rate`: linear in the volume.
double segment_cost(const UserProfile& downloader, double rate);
double cost_total(const UserProfile& downloader, std::span<const double> rates);

/// Per-Mbit coefficient an auctioneer expects to pay when its link is believed
/// to run at `capacity_mbps`; folds link-time cost into the volume cost.
double estimated_cost_per_mbit(const UserProfile& downloader, double capacity_mbps);

/// v^Q(r, theta) = theta * beta * ln(1 + r).
double segment_quality(const UserProfile& receiver, double rate);
double quality_gain(const UserProfile& receiver, std::span<const double> rates);

/// V^B(kappa, B) = gamma * sum_{j=1..kappa} rho^(B/beta + j - 1).
double buffer_gain(const UserProfile& receiver, std::size_t kappa, double buffer_s);
/// Delta(kappa, B) = V^B(kappa + 1, B) - V^B(kappa, B), in closed form.
double buffer_gain_gap(const UserProfile& receiver, std::size_t kappa, double buffer_s);

/// Loss of switching from `previous` to `current`: lambda * (previous - current)
/// when not an upgrade.
double degradation_step(const UserProfile& receiver, double previous, double current);
double degradation_loss(const UserProfile& receiver, double prev_bitrate,
                        std::span<const double> rates);

double utility_total(const UserProfile& receiver, const UserState& state,
                     std::span<const double> rates);

WelfareBreakdown welfare(const UserProfile& downloader, const UserProfile& receiver,
                         const UserState& state, std::span<const double> rates);

}  // namespace crowdstream

namespace crowdstream {

// A bidder's private information at auction time.
struct Participant {
  UserProfile profile;
  UserState state;
};

}  // namespace crowdstream
