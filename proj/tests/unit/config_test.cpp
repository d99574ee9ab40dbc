#include "crowdstream/config.hpp"

#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "crowdstream/errors.hpp"

namespace crowdstream {
namespace {

const std::filesystem::path kConfigs = CROWDSTREAM_CONFIG_DIR;

TEST(Scenario, LoadsShippedConfigs) {
  const Scenario two = load_scenario(kConfigs / "two_user.json");
  ASSERT_EQ(two.sim.users.size(), 2u);
  EXPECT_EQ(two.sim.users[0].profile.name, "A");
  EXPECT_EQ(two.sim.users[1].profile.id, UserId{1});
  EXPECT_EQ(two.sim.users[1].profile.ladder.rates(), (std::vector<double>{0.2, 0.4, 0.7, 1.3, 2.3}));
  EXPECT_EQ(two.sim.segments_per_video(), 10u);
  ASSERT_EQ(two.capacity.size(), 2u);
  EXPECT_EQ(two.capacity[1].phases.size(), 2u);
  EXPECT_EQ(two.capacity[1].phases[1].start_s, 100.0);
  EXPECT_EQ(two.grid.participation, (std::vector<bool>{false, true}));

  const Scenario three = load_scenario(kConfigs / "three_user.json");
  EXPECT_EQ(three.sim.users.size(), 3u);
  EXPECT_TRUE(three.sim.participation_enabled);
}

TEST(Scenario, DumpRoundTrips) {
  const Scenario sc = load_scenario(kConfigs / "three_user.json");
  const std::string once = dump_scenario(sc);
  const std::string twice = dump_scenario(parse_scenario(once));
  EXPECT_EQ(once, twice);
}

TEST(Scenario, RejectsMistakes) {
  EXPECT_THROW(parse_scenario("{"), ConfigError);
  EXPECT_THROW(parse_scenario(R"({"video_length_s": 100, "bogus": 1})"), ConfigError);
  EXPECT_THROW(parse_scenario(R"({"K": 0})"), ConfigError);
  EXPECT_THROW(parse_scenario(R"({"mechanism": "dutch"})"), ConfigError);
  EXPECT_THROW(parse_scenario(R"({"users": [{"name": "A"}, {"name": "A"}]})"), ConfigError);
  try {
    parse_scenario(R"({"participation": {"alpha_bufff": 1}})");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("alpha_bufff"), std::string::npos);
  }
  EXPECT_THROW(load_scenario("/nonexistent/scenario.json"), ConfigError);
}

TEST(Scenario, EmptyUserListIsValid) {
  const Scenario sc = parse_scenario(R"({"users": []})");
  EXPECT_TRUE(sc.sim.users.empty());
}

TEST(Scenario, GridExpansionSkipsSingleObjectMultiK) {
  Scenario sc = load_scenario(kConfigs / "three_user.json");
  const auto cells = expand_grid(sc);
  // momd: 4 adaptations x 3 K x 3 energies; vickrey_1d and noncooperative only at K = 1.
  std::size_t momd = 0, single = 0;
  for (const auto& c : cells) {
    EXPECT_NO_THROW(c.config.validate()) << c.label;
    EXPECT_FALSE(c.config.record_events);
    (c.config.mechanism == Mechanism::momd ? momd : single) += 1;
  }
  EXPECT_EQ(momd, 4u * 3u * 3u);
  EXPECT_EQ(single, 2u * 4u * 3u);
}

TEST(Scenario, TracesFollowSeedPlusReplication) {
  const Scenario sc = load_scenario(kConfigs / "two_user.json");
  EXPECT_EQ(synthesize_traces(sc, 3).capacity, synthesize_traces(sc, 3).capacity);
  EXPECT_NE(synthesize_traces(sc, 3).capacity, synthesize_traces(sc, 4).capacity);
  Scenario shifted = sc;
  shifted.sim.seed += 1;
  EXPECT_EQ(synthesize_traces(shifted, 3).capacity, synthesize_traces(sc, 4).capacity);
}

TEST(OracleInstance, ParsesBothForms) {
  const auto ex1 = parse_oracle_instance(R"({"K": 4, "marginal_scores": [[8,7,5,2],[9,6,3,2]]})");
  EXPECT_EQ(ex1.K, 4u);
  EXPECT_EQ(ex1.marginal_scores.size(), 2u);
  EXPECT_FALSE(ex1.downloader.has_value());

  const auto inst = parse_oracle_instance(R"({
    "K": 2,
    "ladder": {"rates": [0.7, 1.3], "segment_length_s": 10, "max_buffer_s": 40},
    "downloader": {"name": "D", "cost_per_mbit": 0.1},
    "bidders": [{"name": "A", "theta": 1.5, "buffer_s": 20, "prev_bitrate": 1.3}]
  })");
  ASSERT_TRUE(inst.downloader.has_value());
  EXPECT_EQ(inst.downloader->cost_per_mbit, 0.1);
  ASSERT_EQ(inst.bidders.size(), 1u);
  EXPECT_EQ(inst.bidders[0].profile.theta, 1.5);
  EXPECT_EQ(inst.bidders[0].state.buffer_s, 20.0);
  EXPECT_EQ(inst.bidders[0].state.prev_bitrate, 1.3);
  EXPECT_THROW(parse_oracle_instance(R"({"K": 1, "bidders": [{"name": "A", "prev_bitrate": 0.5}]})"),
               ConfigError);
}

}  // namespace
}  // namespace crowdstream
