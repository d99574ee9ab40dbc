// crowdstream: run auction-driven cooperative streaming simulations and oracles.
//
// Exit codes: 0 ok, 1 other failure, 2 config error, 3 trace error, 4 size guard.
// Set CROWDSTREAM_VERBOSE=1 for progress on stderr.

#include <array>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "crowdstream/config.hpp"
#include "crowdstream/engine.hpp"
#include "crowdstream/errors.hpp"
#include "crowdstream/io.hpp"
#include "crowdstream/momd.hpp"
#include "crowdstream/somd.hpp"
#include "crowdstream/strategy.hpp"

namespace fs = std::filesystem;
using namespace crowdstream;

namespace {

bool verbose() {
  const char* v = std::getenv("CROWDSTREAM_VERBOSE");
  return v != nullptr && *v != '\0' && std::string(v) != "0";
}

void note(const std::string& msg) {
  if (verbose()) std::cerr << "crowdstream: " << msg << "\n";
}

int report(const char* kind, int code, const std::string& message) {
  nlohmann::json err = {{"error", kind}, {"message", message}};
  std::cerr << err.dump() << "\n";
  return code;
}

TraceSet load_traces(const fs::path& dir, const SimConfig& cfg) {
  const auto names = user_names(cfg);
  TraceSet set;
  std::string text;
  try {
    text = read_text_file(dir / "capacity.csv");
  } catch (const IoError& e) {
    throw TraceError(e.what());
  }
  try {
    set.capacity = parse_capacity_trace(text, names);
  } catch (const TraceError& e) {
    throw TraceError((dir / "capacity.csv").string() + ": " + e.what());
  }
  for (const auto& n : names) {
    if (!set.capacity.has_user(n)) {
      throw TraceError("trace underrun: no capacity trace for user '" + n + "' at t=0");
    }
  }
  const fs::path enc = dir / "encounters.csv";
  if (fs::exists(enc)) {
    try {
      set.encounters = parse_encounter_trace(read_text_file(enc), names);
    } catch (const TraceError& e) {
      throw TraceError(enc.string() + ": " + e.what());
    }
  } else {
    set.encounters = EncounterTrace::fully_connected(names);
  }
  return set;
}

void write_traces(const fs::path& dir, const TraceSet& traces) {
  fs::create_directories(dir);
  write_text_file(dir / "capacity.csv", format_capacity_trace(traces.capacity));
  write_text_file(dir / "encounters.csv", format_encounter_trace(traces.encounters));
}

struct SimulateArgs {
  std::string config;
  std::string traces;
  std::string mechanism;
  std::size_t K = 0;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out = "out";
  std::string format = "csv";
};

int run_simulate(const SimulateArgs& a) {
  Scenario sc = load_scenario(a.config);
  if (!a.mechanism.empty()) sc.sim.mechanism = parse_mechanism(a.mechanism);
  if (a.K) sc.sim.K = a.K;
  if (a.seed_given) sc.sim.seed = a.seed;
  sc.sim.validate();
  const ResultFormat format = parse_result_format(a.format);

  TraceSet traces = a.traces.empty() ? synthesize_traces(sc, 0) : load_traces(a.traces, sc.sim);
  note("simulating " + std::to_string(sc.sim.users.size()) + " users with " +
       std::string(to_string(sc.sim.mechanism)));
  const SimResult result = run_simulation(sc.sim, traces.capacity, traces.encounters);

  const fs::path out(a.out);
  emit_results(result, out, format, sc.sim.record_events);
  write_traces(out / "traces", traces);
  // Traces are stored next to the snapshot, so replaying uses them verbatim.
  write_text_file(out / "effective_config.json", dump_scenario(sc));
  std::cout << to_csv(aggregate_table(result));
  return 0;
}

struct CompareArgs {
  std::string config;
  std::string traces;
  std::string out = "out";
  std::size_t replications = 0;
  std::size_t threads = 0;
  std::string format = "csv";
};

int run_compare(const CompareArgs& a) {
  Scenario sc = load_scenario(a.config);
  if (a.replications) sc.grid.replications = a.replications;
  if (a.threads) sc.grid.threads = a.threads;
  const ResultFormat format = parse_result_format(a.format);
  const auto cells = expand_grid(sc);

  TraceFactory factory;
  if (a.traces.empty()) {
    factory = [&sc](std::size_t rep) { return synthesize_traces(sc, rep); };
  } else {
    const TraceSet fixed = load_traces(a.traces, sc.sim);
    factory = [fixed](std::size_t) { return fixed; };
  }
  note("comparing " + std::to_string(cells.size()) + " cells x " +
       std::to_string(sc.grid.replications) + " replications");
  ComparisonOptions options{sc.grid.replications, sc.grid.threads, false};
  const auto summary = run_comparison(cells, factory, options);
  emit_comparison(summary, a.out, format);
  write_text_file(fs::path(a.out) / "effective_config.json", dump_scenario(sc));
  std::cout << to_csv(comparison_table(summary));
  return 0;
}

int run_verify(const std::string& config) {
  const Scenario sc = load_scenario(config);
  const auto& users = sc.sim.users;
  std::size_t pairs = 0;
  std::size_t passed = 0;
  for (const auto& du : users) {
    // Time cost enters at the downloader's mean capacity, as an auctioneer would price it.
    UserProfile d = du.profile;
    for (const auto& stats : sc.capacity) {
      if (stats.user != d.name || stats.phases.empty()) continue;
      double mean = 0.0;
      for (const auto& ph : stats.phases) mean += ph.mean_mbps;
      mean /= static_cast<double>(stats.phases.size());
      d.cost_per_mbit = estimated_cost_per_mbit(d, mean);
      d.time_cost_per_s = 0.0;
    }
    for (const auto& b : users) {
      const auto r = check_sufficient_conditions(d, b.profile, sc.sim.K);
      ++pairs;
      if (r.ok()) ++passed;
      std::cout << "pair " << d.name << "->" << b.profile.name << ": (a) "
                << (r.nonnegative_ok ? "pass" : "fail");
      if (r.violating_rate) std::cout << " [quality below cost at " << format_metric(*r.violating_rate) << " Mbps]";
      std::cout << " (b) " << (r.nonincreasing_ok ? "pass" : "fail") << " [need |gap| >= "
                << format_metric(r.required_gap);
      if (r.tightest_gap) {
        std::cout << ", have " << format_metric(*r.tightest_gap);
      } else {
        std::cout << ", K=1 vacuous";
      }
      std::cout << "]\n";
    }
  }
  std::cout << "summary: " << passed << " of " << pairs << " pairs pass\n";
  return 0;
}

std::string rates_text(std::span<const double> rates) {
  std::string s = "(";
  for (std::size_t i = 0; i < rates.size(); ++i) {
    if (i) s += ",";
    s += format_metric(rates[i]);
  }
  return s + ")";
}

ScoreFunction instance_score(const OracleInstance& inst) {
  return inst.downloader_capacity_mbps
             ? ScoreFunction::efficient(*inst.downloader, *inst.downloader_capacity_mbps)
             : ScoreFunction::efficient(*inst.downloader);
}

UserProfile cost_profile(const OracleInstance& inst) {
  UserProfile d = *inst.downloader;
  if (inst.downloader_capacity_mbps) {
    d.cost_per_mbit = estimated_cost_per_mbit(d, *inst.downloader_capacity_mbps);
  }
  d.time_cost_per_s = 0.0;
  return d;
}

int run_oracle(const std::string& path, const std::string& kind) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  const OracleInstance inst = parse_oracle_instance(text);
  if (kind == "momd" && !inst.marginal_scores.empty()) {
    std::vector<ScoredBidder> scored;
    for (std::size_t i = 0; i < inst.marginal_scores.size(); ++i) {
      scored.push_back({UserId{static_cast<std::uint32_t>(i)}, {inst.marginal_scores[i]}});
    }
    const auto alloc = allocate_marginal_scores(scored, inst.K);
    for (std::size_t i = 0; i < scored.size(); ++i) {
      std::cout << "bidder " << i + 1 << ": segments " << alloc.counts[i] << ", score damage "
                << format_metric(alloc.score_damage[i]) << "\n";
    }
    return 0;
  }
  if (!inst.downloader) throw ConfigError("instance needs a downloader and bidders");
  const ScoreFunction sf = instance_score(inst);
  const UserProfile downloader = cost_profile(inst);

  if (kind == "somd") {
    if (inst.bidders.size() > kMaxOracleBidders + 1) {
      throw SizeGuardError("brute-force SOMD instance exceeds 5 bidders");
    }
    const auto best = brute_force_somd_optimum(inst.bidders, downloader);
    std::cout << "optimum: bidder " << inst.bidders[best.bidder.value].profile.name << " at "
              << format_metric(best.bitrate) << " Mbps, welfare " << format_metric(best.welfare) << "\n";
    if (inst.bidders.size() >= 2) {
      std::vector<SomdBid> bids;
      for (const auto& p : inst.bidders) bids.push_back(optimal_somd_bid(p.profile, p.state, sf));
      const auto out = resolve_second_score(bids, sf);
      const auto& w = inst.bidders[out.winner.value];
      const std::array<double, 1> row{out.winning_bitrate};
      const double mech = utility_total(w.profile, w.state, row) - segment_cost(downloader, out.winning_bitrate);
      std::cout << "mechanism: bidder " << w.profile.name << " at " << format_metric(out.winning_bitrate)
                << " Mbps, payment " << format_metric(out.payment) << ", welfare " << format_metric(mech) << "\n";
      std::cout << "verdict: " << (std::fabs(mech - best.welfare) <= 1e-9 ? "equal" : "DIFFERENT") << "\n";
    }
    return 0;
  }
  if (kind == "momd") {
    const auto best = brute_force_momd_optimum(inst.bidders, downloader, inst.K);
    std::cout << "optimum welfare " << format_metric(best.welfare) << "\n";
    for (std::size_t i = 0; i < inst.bidders.size(); ++i) {
      std::cout << "  " << inst.bidders[i].profile.name << ": " << best.counts[i] << " segments "
                << rates_text(best.bitrates[i]) << "\n";
    }
    std::vector<MomdBid> bids;
    std::size_t rows = 0;
    for (const auto& p : inst.bidders) {
      bids.push_back(truthful_bid(p.profile, p.state, optimal_bitrate_matrix(p.profile, p.state, sf, inst.K)));
      rows += inst.K;
    }
    if (rows >= inst.K) {
      const auto out = resolve_vickrey_score(bids, sf, inst.K);
      const double mech = outcome_welfare(out, inst.bidders, downloader);
      std::cout << "mechanism welfare " << format_metric(mech) << "\n";
      for (std::size_t i = 0; i < out.awards.size(); ++i) {
        const auto& aw = out.awards[i];
        std::cout << "  " << inst.bidders[i].profile.name << ": " << aw.segments << " segments "
                  << rates_text(aw.bitrates) << ", payment " << format_metric(aw.payment) << "\n";
      }
      if (!out.guaranteed()) std::cout << "note: Assumption 1 violated, equality not guaranteed\n";
      std::cout << "verdict: " << (std::fabs(mech - best.welfare) <= 1e-9 ? "equal" : "DIFFERENT") << "\n";
    }
    return 0;
  }
  if (kind == "matrix") {
    if (inst.bidders.empty()) throw ConfigError("matrix oracle needs one bidder");
    const auto& p = inst.bidders.front();
    const auto brute = brute_force_bitrate_matrix(p.profile, p.state, sf, inst.K);
    const auto reduced = optimal_bitrate_matrix(p.profile, p.state, sf, inst.K);
    bool equal = true;
    for (std::size_t k = 1; k <= inst.K; ++k) {
      const double ob = row_objective(p.profile, p.state, sf, brute.row(k));
      const double orr = row_objective(p.profile, p.state, sf, reduced.row(k));
      if (std::fabs(ob - orr) > 1e-9) equal = false;
      std::cout << "row " << k << ": brute " << rates_text(brute.row(k)) << " = " << format_metric(ob)
                << ", reduced " << rates_text(reduced.row(k)) << " = " << format_metric(orr) << "\n";
    }
    std::cout << "verdict: " << (equal ? "equal" : "DIFFERENT") << "\n";
    return 0;
  }
  throw ConfigError("unknown oracle kind '" + kind + "'");
}

int run_gen_traces(const std::string& config, const std::string& out, std::size_t replication) {
  const Scenario sc = load_scenario(config);
  write_traces(out, synthesize_traces(sc, replication));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Auction-based cooperative video streaming simulator"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run one simulation");
  simulate->add_option("--config", sim.config, "Scenario JSON")->required();
  simulate->add_option("--traces", sim.traces, "Directory with capacity.csv [and encounters.csv]");
  simulate->add_option("--mechanism", sim.mechanism, "somd | momd | vickrey_1d | noncooperative");
  simulate->add_option("--K", sim.K, "Segments per auction");
  simulate->add_option("--seed", sim.seed, "Random seed");
  simulate->add_option("--out", sim.out, "Output directory");
  simulate->add_option("--format", sim.format, "csv | jsonl");

  CompareArgs cmp;
  auto* compare = app.add_subcommand("compare", "Run the scenario's comparison grid");
  compare->add_option("--config", cmp.config, "Scenario JSON")->required();
  compare->add_option("--traces", cmp.traces, "Fixed trace directory instead of synthesized traces");
  compare->add_option("--out", cmp.out, "Output directory");
  compare->add_option("--replications", cmp.replications, "Override compare.replications");
  compare->add_option("--threads", cmp.threads, "Worker threads");
  compare->add_option("--format", cmp.format, "csv | jsonl");

  std::string verify_config;
  auto* verify = app.add_subcommand("verify", "Check the sufficient conditions for every user pair");
  verify->add_option("--config", verify_config, "Scenario JSON")->required();

  std::string instance;
  std::string kind;
  auto* oracle = app.add_subcommand("oracle", "Brute-force optimum of a small auction instance");
  oracle->add_option("--instance", instance, "Instance JSON")->required();
  oracle->add_option("--kind", kind, "somd | momd | matrix")
      ->required()
      ->check(CLI::IsMember({"somd", "momd", "matrix"}));

  std::string gen_config;
  std::string gen_out = "traces";
  std::size_t gen_rep = 0;
  auto* gen = app.add_subcommand("gen-traces", "Write synthesized traces");
  gen->add_option("--config", gen_config, "Scenario JSON")->required();
  gen->add_option("--out", gen_out, "Output directory");
  gen->add_option("--replication", gen_rep, "Replication index");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report("usage", 2, e.what());
  }

  try {
    if (*simulate) {
      sim.seed_given = simulate->count("--seed") > 0;
      return run_simulate(sim);
    }
    if (*compare) return run_compare(cmp);
    if (*verify) return run_verify(verify_config);
    if (*oracle) return run_oracle(instance, kind);
    if (*gen) return run_gen_traces(gen_config, gen_out, gen_rep);
  } catch (const ConfigError& e) {
    return report("config", 2, e.what());
  } catch (const TraceError& e) {
    return report("trace", 3, e.what());
  } catch (const SizeGuardError& e) {
    return report("size_guard", 4, e.what());
  } catch (const std::exception& e) {
    return report("failure", 1, e.what());
  }
  return 1;
}
