#include "crowdstream/io.hpp"

#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "crowdstream/errors.hpp"
#include "crowdstream/metrics.hpp"
#include "crowdstream/trace.hpp"
#include "instances.hpp"

namespace crowdstream {
namespace {

namespace fs = std::filesystem;

std::string error_of(auto&& fn) {
  try {
    fn();
  } catch (const TraceError& e) {
    return e.what();
  }
  return "";
}

TEST(CapacityTraceFormat, ParsesExamples) {
  const auto a = parse_capacity_trace("0,A,3.0");
  EXPECT_EQ(a.capacity_at("A", 0.0), 3.0);
  EXPECT_EQ(a.capacity_at("A", 1e6), 3.0);

  const auto b = parse_capacity_trace("time_s,user_id,capacity_mbps\n0,B,0.3\n100,B,3.0\n");
  EXPECT_EQ(b.capacity_at("B", 99.999), 0.3);
  EXPECT_EQ(b.capacity_at("B", 100.0), 3.0);
  EXPECT_EQ(b.series("B").size(), 2u);

  const auto commented = parse_capacity_trace("# warmup\n\n0,A,1\n# more\n5,A,2\n");
  EXPECT_EQ(commented.capacity_at("A", 6.0), 2.0);
}

TEST(CapacityTraceFormat, RejectsBadRowsWithLineNumbers) {
  EXPECT_NE(error_of([] { parse_capacity_trace("5,A,2.0"); }).find("line 1"), std::string::npos);
  EXPECT_NE(error_of([] { parse_capacity_trace("0,A,1\n0,A,2"); }).find("line 2"), std::string::npos);
  EXPECT_NE(error_of([] { parse_capacity_trace("0,A,1\n3,A,-2"); }).find("line 2"), std::string::npos);
  EXPECT_NE(error_of([] { parse_capacity_trace("0,A"); }).find("line 1"), std::string::npos);
  EXPECT_NE(error_of([] { parse_capacity_trace("0,A,abc"); }).find("line 1"), std::string::npos);
  const std::vector<std::string> known{"A"};
  EXPECT_NE(error_of([&] { parse_capacity_trace("0,A,1\n0,Z,1", known); }).find("line 2"),
            std::string::npos);
}

TEST(EncounterTraceFormat, ParsesAndValidates) {
  const auto e = parse_encounter_trace("time_s,user_a,user_b,connected\n0,A,B,1\n50,B,A,0\n");
  EXPECT_TRUE(e.connected("A", "B", 10.0));
  EXPECT_TRUE(e.connected("B", "A", 49.0));
  EXPECT_FALSE(e.connected("A", "B", 50.0));
  EXPECT_TRUE(e.connected("C", "C", 0.0));
  EXPECT_FALSE(e.connected("A", "C", 0.0));
  EXPECT_THROW(parse_encounter_trace("0,A,B,2"), TraceError);
  EXPECT_THROW(parse_encounter_trace("0,A,A,1"), TraceError);
  EXPECT_THROW(parse_encounter_trace("0,A,B,1\n5,A,B,1"), TraceError);
  EXPECT_THROW(parse_encounter_trace("5,A,B,1\n2,A,B,0"), TraceError);
}

TEST(TraceFormat, RoundTrip) {
  std::mt19937_64 rng(51);
  const std::vector<CapacityStats> stats{{"A", {{0, 3.0, 1.0}}}, {"B", {{0, 0.3, 0.1}, {100, 3.0, 1.0}}}};
  const auto cap = generate_synthetic_traces(stats, 300, 0.7, 99);
  EXPECT_EQ(parse_capacity_trace(format_capacity_trace(cap)), cap);

  EncounterTrace enc;
  enc.set_toggles("A", "B", {{0, true}, {12.345678901234, false}, {40, true}});
  enc.set_toggles("B", "C", {{3.25, true}});
  EXPECT_EQ(parse_encounter_trace(format_encounter_trace(enc)), enc);

  const std::vector<std::string> users{"A", "B", "C"};
  const auto full = EncounterTrace::fully_connected(users);
  EXPECT_EQ(parse_encounter_trace(format_encounter_trace(full)), full);
  EXPECT_TRUE(full.connected("A", "C", 1e9));
}

TEST(SyntheticTraces, ZeroSpreadIsConstant) {
  const std::vector<CapacityStats> stats{{"A", {{0, 2.5, 0.0}}}};
  const auto t = generate_synthetic_traces(stats, 50, 1, 7);
  for (const auto& p : t.series("A")) EXPECT_EQ(p.capacity_mbps, 2.5);
}

TEST(SyntheticTraces, SeedDeterminesTrace) {
  const std::vector<CapacityStats> stats{{"A", {{0, 3, 1}}}, {"B", {{0, 1, 0.5}}}};
  EXPECT_EQ(generate_synthetic_traces(stats, 100, 1, 5), generate_synthetic_traces(stats, 100, 1, 5));
  EXPECT_NE(generate_synthetic_traces(stats, 100, 1, 5), generate_synthetic_traces(stats, 100, 1, 6));
}

TEST(SyntheticTraces, SampleMeanMatchesTruncatedNormal) {
  const double mu = 3.0, sigma = 1.0;
  const std::vector<CapacityStats> stats{{"A", {{0, mu, sigma}}}};
  // Mean of N(mu, sigma) truncated below at 0: mu + sigma * pdf(a) / (1 - cdf(a)), a = -mu/sigma.
  const double a = -mu / sigma;
  const double pdf = std::exp(-0.5 * a * a) / std::sqrt(2.0 * M_PI);
  const double tail = 0.5 * std::erfc(a / std::sqrt(2.0));
  const double expected = mu + sigma * pdf / tail;
  const double bound = 3.0 * sigma / std::sqrt(1000.0);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto t = generate_synthetic_traces(stats, 1000, 1, seed);
    const auto s = t.series("A");
    ASSERT_EQ(s.size(), 1000u);
    double sum = 0.0;
    for (const auto& p : s) {
      EXPECT_GE(p.capacity_mbps, 0.0);
      sum += p.capacity_mbps;
    }
    EXPECT_NEAR(sum / 1000.0, expected, bound) << "seed " << seed;
  }
}

TEST(SyntheticTraces, PhasesSwitchMeans) {
  const std::vector<CapacityStats> stats{{"B", {{0, 0.3, 0.0}, {100, 3.0, 0.0}}}};
  const auto t = generate_synthetic_traces(stats, 200, 1, 1);
  EXPECT_EQ(t.capacity_at("B", 99.5), 0.3);
  EXPECT_EQ(t.capacity_at("B", 100.0), 3.0);
}

TEST(Metrics, DegradationRatioExample) {
  const std::vector<double> r{1.3, 0.7, 1.3};
  EXPECT_NEAR(degradation_ratio(r), 0.6 / 3.3, 1e-12);
  EXPECT_EQ(std::round(degradation_ratio(r) * 1000.0) / 10.0, 18.2);
  EXPECT_EQ(degradation_ratio(std::vector<double>{}), 0.0);
  EXPECT_NEAR(degradation_volume(std::vector<double>{2.3, 0.7, 1.3, 0.2}), 1.6 + 1.1, 1e-12);
}

TEST(Metrics, RebufferRatioExample) {
  EXPECT_NEAR(rebuffer_ratio(0.26, 100.0) * 100.0, 0.26, 1e-12);
  EXPECT_EQ(rebuffer_ratio(0.0, 100.0), 0.0);
}

TEST(Tables, EmptyRunHasHeaderOnly) {
  const SimResult empty;
  const auto users = users_table(empty);
  EXPECT_TRUE(users.rows.empty());
  const std::string csv = to_csv(users);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "user,utility,cost,overhead,payments_made,payments_received,"
                                            "welfare,segments,average_bitrate,rebuffer_s,stall_count,"
                                            "degradation_volume,degradation_events,degradation_ratio,"
                                            "rebuffer_ratio,completion_time_s");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1);
  EXPECT_TRUE(aggregate_table(empty).rows.empty());
  EXPECT_EQ(to_jsonl(users), "");
}

TEST(Tables, FormatMetric) {
  EXPECT_EQ(format_metric(0.0), "0");
  EXPECT_EQ(format_metric(0.181818181818), "0.181818");
  EXPECT_EQ(format_metric(1234567.0), "1.23457e+06");
  EXPECT_EQ(format_metric(-2.5), "-2.5");
}

TEST(Tables, CsvRoundTripKeepsSixDigits) {
  SimResult r;
  UserMetrics u;
  u.name = "A";
  u.utility = 123.456789012;
  u.cost = 0.000123456789;
  u.welfare = -98.7654321;
  u.segments = 10;
  u.average_bitrate = 1.9;
  u.degradation_ratio = 0.6 / 3.3;
  r.users.push_back(u);
  const Table t = users_table(r);
  const Table back = parse_csv(to_csv(t));
  EXPECT_EQ(back.header, t.header);
  ASSERT_EQ(back.rows.size(), 1u);
  EXPECT_EQ(back.rows, t.rows);
  const std::vector<double> originals{u.utility, u.cost, u.welfare};
  const std::vector<std::size_t> columns{1, 2, 6};
  for (std::size_t i = 0; i < columns.size(); ++i) {
    const double parsed = std::stod(back.rows[0][columns[i]]);
    EXPECT_NEAR(parsed, originals[i], std::fabs(originals[i]) * 5e-6);
  }
  EXPECT_EQ(back.rows[0][7], "10");

  const std::string jsonl = to_jsonl(t);
  EXPECT_NE(jsonl.find("\"user\":\"A\""), std::string::npos);
  EXPECT_NE(jsonl.find("\"segments\":10"), std::string::npos);
}

TEST(Files, ErrorsNameThePath) {
  try {
    read_text_file("/nonexistent/dir/capacity.csv");
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/capacity.csv"), std::string::npos);
  }
  const fs::path dir = fs::temp_directory_path() / "crowdstream_io_test";
  fs::create_directories(dir);
  write_text_file(dir / "x.txt", "hello\n");
  EXPECT_EQ(read_text_file(dir / "x.txt"), "hello\n");
  fs::remove_all(dir);
}

TEST(Files, EmitResultsWritesTables) {
  const fs::path dir = fs::temp_directory_path() / "crowdstream_emit_test";
  fs::remove_all(dir);
  SimResult r;
  r.users.push_back(UserMetrics{.name = "A"});
  emit_results(r, dir, ResultFormat::csv, true);
  EXPECT_TRUE(fs::exists(dir / "users.csv"));
  EXPECT_TRUE(fs::exists(dir / "aggregate.csv"));
  EXPECT_TRUE(fs::exists(dir / "events.csv"));
  emit_results(r, dir / "j", ResultFormat::jsonl, false);
  EXPECT_TRUE(fs::exists(dir / "j" / "users.jsonl"));
  EXPECT_FALSE(fs::exists(dir / "j" / "events.jsonl"));
  EXPECT_EQ(parse_result_format("jsonl"), ResultFormat::jsonl);
  EXPECT_THROW(parse_result_format("xml"), ConfigError);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace crowdstream
