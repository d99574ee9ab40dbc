#include "crowdstream/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace crowdstream {

namespace {

bool finite_nonnegative(double x) { return std::isfinite(x) && x >= 0.0; }

}  // namespace

BitrateLadder::BitrateLadder(std::vector<double> rates, double segment_length_s,
                             double max_buffer_s)
    : rates_(std::move(rates)), segment_length_s_(segment_length_s), max_buffer_s_(max_buffer_s) {
  if (rates_.empty()) {
    throw std::invalid_argument("bitrate ladder must contain at least one rate");
  }
  for (std::size_t i = 0; i < rates_.size(); ++i) {
    if (!std::isfinite(rates_[i]) || rates_[i] <= 0.0) {
      throw std::invalid_argument("bitrates must be positive and finite");
    }
    if (i > 0 && rates_[i] <= rates_[i - 1]) {
      throw std::invalid_argument("bitrates must be strictly increasing");
    }
  }
  if (!std::isfinite(segment_length_s_) || segment_length_s_ <= 0.0) {
    throw std::invalid_argument("segment length must be positive");
  }
  if (!std::isfinite(max_buffer_s_) || max_buffer_s_ < segment_length_s_) {
    throw std::invalid_argument("max buffer must hold at least one segment");
  }
}

bool BitrateLadder::contains(double rate) const {
  return std::binary_search(rates_.begin(), rates_.end(), rate);
}

void UserProfile::validate() const {
  if (!finite_nonnegative(theta) || !finite_nonnegative(cost_per_mbit) ||
      !finite_nonnegative(time_cost_per_s) || !finite_nonnegative(buffer_gain_scale) ||
      !finite_nonnegative(degradation_slope)) {
    throw std::invalid_argument("user '" + name + "': coefficients must be finite and >= 0");
  }
  if (!(buffer_gain_decay > 0.0 && buffer_gain_decay < 1.0)) {
    throw std::invalid_argument("user '" + name + "': buffer_gain_decay must lie in (0, 1)");
  }
}

void UserState::validate(const UserProfile& profile) const {
  if (!(buffer_s >= 0.0 && buffer_s <= profile.ladder.max_buffer_s())) {
    throw std::invalid_argument("buffer level outside [0, max_buffer]");
  }
  if (prev_bitrate != 0.0 && !profile.ladder.contains(prev_bitrate)) {
    throw std::invalid_argument("previous bitrate is not on the ladder");
  }
}

double segment_cost(const UserProfile& downloader, double rate) {
  return downloader.cost_per_mbit * rate * downloader.ladder.segment_length_s();
}

double cost_total(const UserProfile& downloader, std::span<const double> rates) {
  double total = 0.0;
  for (double r : rates) total += segment_cost(downloader, r);
  return total;
}

double estimated_cost_per_mbit(const UserProfile& downloader, double capacity_mbps) {
  if (downloader.time_cost_per_s == 0.0) return downloader.cost_per_mbit;
  if (!(capacity_mbps > 0.0)) {
    throw std::invalid_argument("capacity estimate must be positive");
  }
  return downloader.cost_per_mbit + downloader.time_cost_per_s / capacity_mbps;
}

double segment_quality(const UserProfile& receiver, double rate) {
  return receiver.theta * receiver.ladder.segment_length_s() * std::log1p(rate);
}

double quality_gain(const UserProfile& receiver, std::span<const double> rates) {
  double total = 0.0;
  for (double r : rates) total += segment_quality(receiver, r);
  return total;
}

double buffer_gain(const UserProfile& receiver, std::size_t kappa, double buffer_s) {
  const double offset = buffer_s / receiver.ladder.segment_length_s();
  double total = 0.0;
  for (std::size_t j = 1; j <= kappa; ++j) {
    total += std::pow(receiver.buffer_gain_decay, offset + static_cast<double>(j - 1));
  }
  return receiver.buffer_gain_scale * total;
}

double buffer_gain_gap(const UserProfile& receiver, std::size_t kappa, double buffer_s) {
  const double offset = buffer_s / receiver.ladder.segment_length_s();
  return receiver.buffer_gain_scale *
         std::pow(receiver.buffer_gain_decay, offset + static_cast<double>(kappa));
}

double degradation_step(const UserProfile& receiver, double previous, double current) {
  if (previous < current) return 0.0;
  return receiver.degradation_slope * (previous - current);
}

double degradation_loss(const UserProfile& receiver, double prev_bitrate,
                        std::span<const double> rates) {
  double total = 0.0;
  double previous = prev_bitrate;
  for (double r : rates) {
    total += degradation_step(receiver, previous, r);
    previous = r;
  }
  return total;
}

double utility_total(const UserProfile& receiver, const UserState& state,
                     std::span<const double> rates) {
  return quality_gain(receiver, rates) + buffer_gain(receiver, rates.size(), state.buffer_s) -
         degradation_loss(receiver, state.prev_bitrate, rates);
}

WelfareBreakdown welfare(const UserProfile& downloader, const UserProfile& receiver,
                         const UserState& state, std::span<const double> rates) {
  WelfareBreakdown out;
  out.quality_gain = quality_gain(receiver, rates);
  out.buffer_gain = buffer_gain(receiver, rates.size(), state.buffer_s);
  out.degradation_loss = degradation_loss(receiver, state.prev_bitrate, rates);
  out.cost = cost_total(downloader, rates);
  out.welfare = out.quality_gain + out.buffer_gain - out.degradation_loss - out.cost;
  return out;
}

}  // namespace crowdstream
