#include "crowdstream/model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "instances.hpp"

namespace crowdstream {
namespace {

UserProfile profile_with(double theta, double cost, double gamma, double rho, double lambda) {
  UserProfile p{UserId{0}, "u", BitrateLadder({0.2, 0.4, 0.7, 1.3, 2.3}, 10.0, 40.0)};
  p.theta = theta;
  p.cost_per_mbit = cost;
  p.buffer_gain_scale = gamma;
  p.buffer_gain_decay = rho;
  p.degradation_slope = lambda;
  return p;
}

TEST(BitrateLadder, RejectsBadRates) {
  EXPECT_THROW(BitrateLadder({}, 10.0, 40.0), std::invalid_argument);
  EXPECT_THROW(BitrateLadder({0.4, 0.2}, 10.0, 40.0), std::invalid_argument);
  EXPECT_THROW(BitrateLadder({0.0, 0.2}, 10.0, 40.0), std::invalid_argument);
  EXPECT_THROW(BitrateLadder({0.2}, 0.0, 40.0), std::invalid_argument);
  EXPECT_THROW(BitrateLadder({0.2}, 10.0, 5.0), std::invalid_argument);
  EXPECT_NO_THROW(BitrateLadder({0.2}, 10.0, 10.0));
}

TEST(UserProfile, ValidateRanges) {
  auto p = profile_with(1, 0, 0, 0.5, 0);
  EXPECT_NO_THROW(p.validate());
  p.buffer_gain_decay = 1.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.buffer_gain_decay = 0.5;
  p.theta = -1;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.theta = NAN;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(UserState, ValidateAgainstLadder) {
  const auto p = profile_with(1, 0, 0, 0.5, 0);
  UserState s{20.0, 1.3, {}};
  EXPECT_NO_THROW(s.validate(p));
  s.prev_bitrate = 1.0;
  EXPECT_THROW(s.validate(p), std::invalid_argument);
  s.prev_bitrate = 0.0;
  s.buffer_s = 41.0;
  EXPECT_THROW(s.validate(p), std::invalid_argument);
}

TEST(Cost, LinearInVolume) {
  const auto free = profile_with(1, 0.0, 0, 0.5, 0);
  EXPECT_EQ(cost_total(free, std::vector<double>{2.3, 1.3}), 0.0);

  const auto d = profile_with(1, 0.1, 0, 0.5, 0);
  EXPECT_NEAR(cost_total(d, std::vector<double>{2.3}), 2.3, 1e-12);
  EXPECT_NEAR(cost_total(d, std::vector<double>{0.7, 1.3}), 2.0, 1e-12);
  EXPECT_EQ(cost_total(d, std::vector<double>{}), 0.0);
}

TEST(Cost, EstimatedCoefficientFoldsLinkTime) {
  auto d = profile_with(1, 0.05, 0, 0.5, 0);
  EXPECT_EQ(estimated_cost_per_mbit(d, 0.0), 0.05);
  d.time_cost_per_s = 0.3;
  // Busy seconds per Mbit are 1/h.
  EXPECT_NEAR(estimated_cost_per_mbit(d, 3.0), 0.05 + 0.1, 1e-12);
  EXPECT_THROW(estimated_cost_per_mbit(d, 0.0), std::invalid_argument);
}

TEST(QualityGain, Examples) {
  EXPECT_EQ(quality_gain(profile_with(0, 0, 0, 0.5, 0), std::vector<double>{2.3}), 0.0);
  const auto p = profile_with(1, 0, 0, 0.5, 0);
  EXPECT_EQ(segment_quality(p, 0.0), 0.0);
  EXPECT_NEAR(quality_gain(p, std::vector<double>{2.3}), 11.939, 5e-4);
  EXPECT_NEAR(quality_gain(p, std::vector<double>{2.3}), 10.0 * std::log(3.3), 1e-12);
}

TEST(QualityGain, DiscreteConcavityOnLadder) {
  const auto p = profile_with(1.7, 0, 0, 0.5, 0);
  const auto& r = p.ladder.rates();
  for (std::size_t i = 0; i + 2 < r.size(); ++i) {
    const double left = (segment_quality(p, r[i + 1]) - segment_quality(p, r[i])) / (r[i + 1] - r[i]);
    const double right =
        (segment_quality(p, r[i + 2]) - segment_quality(p, r[i + 1])) / (r[i + 2] - r[i + 1]);
    EXPECT_GE(left, right);
    EXPECT_GT(segment_quality(p, r[i + 1]), segment_quality(p, r[i]));
  }
}

TEST(BufferGain, Examples) {
  const auto p = profile_with(1, 0, 10, 0.5, 0);
  EXPECT_EQ(buffer_gain(p, 0, 0.0), 0.0);
  EXPECT_EQ(buffer_gain(profile_with(1, 0, 0, 0.5, 0), 3, 12.0), 0.0);
  EXPECT_NEAR(buffer_gain(p, 2, 0.0), 15.0, 1e-12);
}

TEST(BufferGain, MarginalIsPositiveAndDecreasing) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = profile_with(1, 0, testing::uniform(rng, 0.1, 10), testing::uniform(rng, 0.05, 0.95), 0);
    for (std::size_t k = 0; k < 4; ++k) {
      for (double B = 0.0; B <= 40.0; B += 2.5) {
        const double gap = buffer_gain_gap(p, k, B);
        EXPECT_NEAR(gap, buffer_gain(p, k + 1, B) - buffer_gain(p, k, B), 1e-9);
        EXPECT_GE(gap, 0.0);
        EXPECT_LT(buffer_gain_gap(p, k + 1, B), gap);
        EXPECT_LE(buffer_gain(p, k + 1, B + 2.5), buffer_gain(p, k + 1, B));
      }
    }
  }
}

TEST(DegradationLoss, Examples) {
  const auto p = profile_with(1, 0, 0, 0.5, 1.0);
  EXPECT_EQ(degradation_loss(p, 0.7, std::vector<double>{1.3}), 0.0);
  EXPECT_EQ(degradation_loss(p, 1.3, std::vector<double>{1.3, 1.3}), 0.0);
  EXPECT_NEAR(degradation_loss(p, 2.3, std::vector<double>{0.7, 1.3}), 1.6, 1e-12);
}

TEST(DegradationLoss, NonnegativeAndZeroOnNondecreasing) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 500; ++trial) {
    const auto p = profile_with(1, 0, 0, 0.5, testing::uniform(rng, 0, 3));
    const auto& ladder = p.ladder.rates();
    std::vector<double> rates;
    for (std::size_t i = 0, n = testing::pick(rng, 1, 4); i < n; ++i) {
      rates.push_back(ladder[testing::pick(rng, 0, ladder.size() - 1)]);
    }
    const double prev = ladder[testing::pick(rng, 0, ladder.size() - 1)];
    EXPECT_GE(degradation_loss(p, prev, rates), 0.0);
    std::sort(rates.begin(), rates.end());
    EXPECT_EQ(degradation_loss(p, std::min(prev, rates.front()), rates), 0.0);
  }
}

TEST(Utility, Examples) {
  const auto p = profile_with(1, 0, 10, 0.5, 1.0);
  const UserState s{0.0, 0.0, {}};
  EXPECT_EQ(utility_total(p, s, std::vector<double>{}), 0.0);
  // One segment at B = 0 earns the full gamma * rho^0 = 10 of buffer gain.
  EXPECT_NEAR(utility_total(p, s, std::vector<double>{2.3}), 21.939, 5e-4);
  EXPECT_NEAR(utility_total(p, s, std::vector<double>{2.3}), 10.0 * std::log(3.3) + 10.0, 1e-12);
}

TEST(Welfare, Examples) {
  const auto receiver = profile_with(1, 0, 10, 0.5, 1.0);
  const UserState s{0.0, 0.0, {}};
  const auto zero = welfare(profile_with(1, 0.1, 0, 0.5, 0), receiver, s, std::vector<double>{});
  EXPECT_EQ(zero.welfare, 0.0);
  EXPECT_EQ(zero.cost, 0.0);
  EXPECT_EQ(zero.quality_gain, 0.0);

  const std::vector<double> r{2.3};
  const auto free = welfare(profile_with(1, 0.0, 0, 0.5, 0), receiver, s, r);
  EXPECT_EQ(free.welfare, utility_total(receiver, s, r));

  const auto w = welfare(profile_with(1, 0.1, 0, 0.5, 0), receiver, s, r);
  EXPECT_NEAR(w.welfare, 19.639, 5e-4);
  EXPECT_NEAR(w.cost, 2.3, 1e-12);
}

TEST(Welfare, BreakdownIdentityAndAdditiveCost) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto parts = testing::random_participants(rng, 2, {});
    const auto& d = parts[0].profile;
    const auto& m = parts[1];
    const auto& ladder = m.profile.ladder.rates();
    std::vector<double> a, b;
    for (std::size_t i = 0, n = testing::pick(rng, 0, 3); i < n; ++i) {
      a.push_back(ladder[testing::pick(rng, 0, ladder.size() - 1)]);
    }
    for (std::size_t i = 0, n = testing::pick(rng, 0, 3); i < n; ++i) {
      b.push_back(ladder[testing::pick(rng, 0, ladder.size() - 1)]);
    }
    std::vector<double> ab = a;
    ab.insert(ab.end(), b.begin(), b.end());

    const auto w = welfare(d, m.profile, m.state, ab);
    EXPECT_EQ(w.welfare, w.quality_gain + w.buffer_gain - w.degradation_loss - w.cost);
    EXPECT_NEAR(w.quality_gain + w.buffer_gain - w.degradation_loss,
                utility_total(m.profile, m.state, ab), 1e-12);
    EXPECT_NEAR(cost_total(d, ab), cost_total(d, a) + cost_total(d, b), 1e-12);
  }
}

}  // namespace
}  // namespace crowdstream
