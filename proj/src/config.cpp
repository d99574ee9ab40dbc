#include "crowdstream/config.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "crowdstream/errors.hpp"
#include "crowdstream/io.hpp"

namespace crowdstream {

namespace {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : obj.items()) {
    if (!allowed.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
  }
}

template <typename T>
T get_or(const json& obj, const char* key, const std::string& where, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

const json& object_at(const json& obj, const char* key, const std::string& where) {
  const json& v = obj.at(key);
  if (!v.is_object()) throw ConfigError(where + "." + key + " must be an object");
  return v;
}

// Used when neither the document nor the user names a ladder.
BitrateLadder standard_ladder() { return BitrateLadder({0.2, 0.4, 0.7, 1.3, 2.3}, 10.0, 40.0); }

BitrateLadder parse_ladder(const json& j, const std::string& where) {
  reject_unknown(j, where, {"rates", "segment_length_s", "max_buffer_s"});
  if (!j.contains("rates")) throw ConfigError(where + ".rates is required");
  try {
    return BitrateLadder(get_or<std::vector<double>>(j, "rates", where, {}),
                         get_or<double>(j, "segment_length_s", where, 10.0),
                         get_or<double>(j, "max_buffer_s", where, 40.0));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

constexpr std::initializer_list<const char*> kProfileKeys = {
    "theta", "cost_per_mbit", "time_cost_per_s", "buffer_gain_scale", "buffer_gain_decay",
    "degradation_slope"};

void apply_profile(const json& j, const std::string& where, UserProfile& p) {
  p.theta = get_or<double>(j, "theta", where, p.theta);
  p.cost_per_mbit = get_or<double>(j, "cost_per_mbit", where, p.cost_per_mbit);
  p.time_cost_per_s = get_or<double>(j, "time_cost_per_s", where, p.time_cost_per_s);
  p.buffer_gain_scale = get_or<double>(j, "buffer_gain_scale", where, p.buffer_gain_scale);
  p.buffer_gain_decay = get_or<double>(j, "buffer_gain_decay", where, p.buffer_gain_decay);
  p.degradation_slope = get_or<double>(j, "degradation_slope", where, p.degradation_slope);
}

CapacityStats parse_capacity(const json& j, const std::string& user, const std::string& where) {
  reject_unknown(j, where, {"mean_mbps", "std_mbps", "phases"});
  CapacityStats stats{user, {}};
  if (j.contains("phases")) {
    if (j.contains("mean_mbps") || j.contains("std_mbps")) {
      throw ConfigError(where + ": give either phases or mean_mbps/std_mbps");
    }
    for (std::size_t i = 0; i < j.at("phases").size(); ++i) {
      const json& ph = j.at("phases").at(i);
      const std::string w = where + ".phases[" + std::to_string(i) + "]";
      reject_unknown(ph, w, {"start_s", "mean_mbps", "std_mbps"});
      stats.phases.push_back({get_or<double>(ph, "start_s", w, 0.0),
                              get_or<double>(ph, "mean_mbps", w, 1.0),
                              get_or<double>(ph, "std_mbps", w, 0.0)});
    }
  } else {
    stats.phases.push_back(
        {0.0, get_or<double>(j, "mean_mbps", where, 1.0), get_or<double>(j, "std_mbps", where, 0.0)});
  }
  if (stats.phases.empty() || stats.phases.front().start_s != 0.0) {
    throw ConfigError(where + ": the first capacity phase must start at 0");
  }
  for (std::size_t i = 0; i < stats.phases.size(); ++i) {
    const auto& ph = stats.phases[i];
    if (!(ph.mean_mbps > 0.0) || ph.std_mbps < 0.0) {
      throw ConfigError(where + ": capacity mean must be positive and std nonnegative");
    }
    if (i && !(ph.start_s > stats.phases[i - 1].start_s)) {
      throw ConfigError(where + ": capacity phases must start at increasing times");
    }
  }
  return stats;
}

CompareGrid parse_grid(const json& j) {
  const std::string where = "compare";
  reject_unknown(j, where,
                 {"mechanisms", "adaptations", "K", "overhead_energy", "overhead_time_s",
                  "participation", "replications", "threads"});
  CompareGrid g;
  for (const auto& m : get_or<std::vector<std::string>>(j, "mechanisms", where, {})) {
    g.mechanisms.push_back(parse_mechanism(m));
  }
  for (const auto& a : get_or<std::vector<std::string>>(j, "adaptations", where, {})) {
    try {
      g.adaptations.push_back(parse_adaptation(a));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  g.K = get_or<std::vector<std::size_t>>(j, "K", where, {});
  g.overhead_energy = get_or<std::vector<double>>(j, "overhead_energy", where, {});
  g.overhead_time_s = get_or<std::vector<double>>(j, "overhead_time_s", where, {});
  g.participation = get_or<std::vector<bool>>(j, "participation", where, {});
  g.replications = get_or<std::size_t>(j, "replications", where, 1);
  g.threads = get_or<std::size_t>(j, "threads", where, 1);
  if (g.replications < 1) throw ConfigError("compare.replications must be at least 1");
  return g;
}

}  // namespace

Scenario parse_scenario(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(root, "config",
                 {"video_length_s", "K", "mechanism", "adaptation", "bandwidth_safety",
                  "participation", "overhead_energy_per_auction", "overhead_time_per_auction_s",
                  "d2d_delay_s", "idle_retry_s", "capacity_window", "max_time_s", "seed",
                  "record_events", "ladder", "profile_defaults", "users", "traces", "encounters",
                  "compare", "description"});

  Scenario sc;
  SimConfig& cfg = sc.sim;
  const std::string w = "config";
  cfg.video_length_s = get_or<double>(root, "video_length_s", w, cfg.video_length_s);
  cfg.K = get_or<std::size_t>(root, "K", w, cfg.K);
  cfg.mechanism = parse_mechanism(get_or<std::string>(root, "mechanism", w, "momd"));
  try {
    cfg.adaptation.kind = parse_adaptation(get_or<std::string>(root, "adaptation", w, "optimal"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  cfg.adaptation.bandwidth_safety =
      get_or<double>(root, "bandwidth_safety", w, cfg.adaptation.bandwidth_safety);
  if (root.contains("participation")) {
    const json& p = object_at(root, "participation", w);
    reject_unknown(p, "participation", {"enabled", "alpha_buf", "alpha_link"});
    cfg.participation_enabled = get_or<bool>(p, "enabled", "participation", false);
    cfg.participation.alpha_buf = get_or<double>(p, "alpha_buf", "participation", 1.0);
    cfg.participation.alpha_link = get_or<double>(p, "alpha_link", "participation", 0.5);
  }
  cfg.overhead_energy_per_auction = get_or<double>(root, "overhead_energy_per_auction", w, 0.0);
  cfg.overhead_time_per_auction_s = get_or<double>(root, "overhead_time_per_auction_s", w, 0.0);
  cfg.d2d_delay_s = get_or<double>(root, "d2d_delay_s", w, 0.0);
  cfg.idle_retry_s = get_or<double>(root, "idle_retry_s", w, cfg.idle_retry_s);
  cfg.capacity_window = get_or<std::size_t>(root, "capacity_window", w, cfg.capacity_window);
  cfg.max_time_s = get_or<double>(root, "max_time_s", w, 0.0);
  cfg.seed = get_or<std::uint64_t>(root, "seed", w, cfg.seed);
  cfg.record_events = get_or<bool>(root, "record_events", w, true);

  std::optional<BitrateLadder> shared_ladder = standard_ladder();
  if (root.contains("ladder")) shared_ladder = parse_ladder(object_at(root, "ladder", w), "ladder");
  json defaults = json::object();
  if (root.contains("profile_defaults")) {
    defaults = object_at(root, "profile_defaults", w);
    reject_unknown(defaults, "profile_defaults", kProfileKeys);
  }

  const json users = root.value("users", json::array());
  if (!users.is_array()) throw ConfigError("config.users must be an array");
  std::set<std::string> names;
  for (std::size_t i = 0; i < users.size(); ++i) {
    const json& u = users.at(i);
    const std::string where = "users[" + std::to_string(i) + "]";
    if (!u.is_object()) throw ConfigError(where + " must be an object");
    reject_unknown(u, where,
                   {"name", "theta", "cost_per_mbit", "time_cost_per_s", "buffer_gain_scale",
                    "buffer_gain_decay", "degradation_slope", "helper", "ladder", "capacity"});
    const std::string name = get_or<std::string>(u, "name", where, "u" + std::to_string(i));
    if (name.empty() || name.find_first_of(",\n\r") != std::string::npos) {
      throw ConfigError(where + ".name must be non-empty without commas or newlines");
    }
    if (!names.insert(name).second) throw ConfigError(where + ": duplicate user name '" + name + "'");
    std::optional<BitrateLadder> ladder = shared_ladder;
    if (u.contains("ladder")) ladder = parse_ladder(object_at(u, "ladder", where), where + ".ladder");
    if (!ladder) throw ConfigError(where + ": no ladder given and no shared ladder");
    UserProfile p{UserId{static_cast<std::uint32_t>(i)}, name, *ladder};
    apply_profile(defaults, "profile_defaults", p);
    apply_profile(u, where, p);
    cfg.users.push_back({std::move(p), get_or<bool>(u, "helper", where, true)});
    if (u.contains("capacity")) {
      sc.capacity.push_back(parse_capacity(object_at(u, "capacity", where), name, where + ".capacity"));
    }
  }

  if (root.contains("traces")) {
    const json& t = object_at(root, "traces", w);
    reject_unknown(t, "traces", {"horizon_s", "step_s"});
    sc.trace_horizon_s = get_or<double>(t, "horizon_s", "traces", 0.0);
    sc.trace_step_s = get_or<double>(t, "step_s", "traces", 1.0);
    if (sc.trace_horizon_s < 0.0 || !(sc.trace_step_s > 0.0)) {
      throw ConfigError("traces: horizon_s must be nonnegative and step_s positive");
    }
  }

  if (root.contains("encounters")) {
    const json& list = root.at("encounters");
    if (!list.is_array()) throw ConfigError("config.encounters must be an array");
    EncounterTrace enc;
    for (std::size_t i = 0; i < list.size(); ++i) {
      const json& e = list.at(i);
      const std::string where = "encounters[" + std::to_string(i) + "]";
      reject_unknown(e, where, {"a", "b", "toggles"});
      const auto a = get_or<std::string>(e, "a", where, "");
      const auto b = get_or<std::string>(e, "b", where, "");
      if (!names.count(a) || !names.count(b)) throw ConfigError(where + ": unknown user");
      std::vector<EncounterToggle> toggles;
      for (const auto& pair : get_or<std::vector<std::pair<double, int>>>(e, "toggles", where, {})) {
        toggles.push_back({pair.first, pair.second != 0});
      }
      try {
        enc.set_toggles(a, b, std::move(toggles));
      } catch (const TraceError& err) {
        throw ConfigError(where + ": " + err.what());
      }
    }
    sc.encounters = std::move(enc);
  }

  if (root.contains("compare")) sc.grid = parse_grid(object_at(root, "compare", w));
  cfg.validate();
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  return parse_scenario(text);
}

std::string dump_scenario(const Scenario& sc) {
  const SimConfig& cfg = sc.sim;
  ojson root;
  root["video_length_s"] = cfg.video_length_s;
  root["K"] = cfg.K;
  root["mechanism"] = std::string(to_string(cfg.mechanism));
  root["adaptation"] = std::string(to_string(cfg.adaptation.kind));
  root["bandwidth_safety"] = cfg.adaptation.bandwidth_safety;
  root["participation"] = {{"enabled", cfg.participation_enabled},
                           {"alpha_buf", cfg.participation.alpha_buf},
                           {"alpha_link", cfg.participation.alpha_link}};
  root["overhead_energy_per_auction"] = cfg.overhead_energy_per_auction;
  root["overhead_time_per_auction_s"] = cfg.overhead_time_per_auction_s;
  root["d2d_delay_s"] = cfg.d2d_delay_s;
  root["idle_retry_s"] = cfg.idle_retry_s;
  root["capacity_window"] = cfg.capacity_window;
  root["max_time_s"] = cfg.max_time_s;
  root["seed"] = cfg.seed;
  root["record_events"] = cfg.record_events;

  ojson users = ojson::array();
  for (const SimUser& su : cfg.users) {
    const UserProfile& p = su.profile;
    ojson u;
    u["name"] = p.name;
    u["theta"] = p.theta;
    u["cost_per_mbit"] = p.cost_per_mbit;
    u["time_cost_per_s"] = p.time_cost_per_s;
    u["buffer_gain_scale"] = p.buffer_gain_scale;
    u["buffer_gain_decay"] = p.buffer_gain_decay;
    u["degradation_slope"] = p.degradation_slope;
    u["helper"] = su.helper;
    u["ladder"] = {{"rates", p.ladder.rates()},
                   {"segment_length_s", p.ladder.segment_length_s()},
                   {"max_buffer_s", p.ladder.max_buffer_s()}};
    const auto stats = std::find_if(sc.capacity.begin(), sc.capacity.end(),
                                    [&](const CapacityStats& s) { return s.user == p.name; });
    if (stats != sc.capacity.end()) {
      ojson phases = ojson::array();
      for (const auto& ph : stats->phases) {
        phases.push_back({{"start_s", ph.start_s}, {"mean_mbps", ph.mean_mbps}, {"std_mbps", ph.std_mbps}});
      }
      u["capacity"] = {{"phases", phases}};
    }
    users.push_back(u);
  }
  root["users"] = users;
  root["traces"] = {{"horizon_s", sc.trace_horizon_s}, {"step_s", sc.trace_step_s}};
  if (sc.encounters) {
    ojson list = ojson::array();
    for (const auto& [pair, toggles] : sc.encounters->all()) {
      ojson t = ojson::array();
      for (const auto& tg : toggles) t.push_back({tg.time_s, tg.connected ? 1 : 0});
      list.push_back({{"a", pair.first}, {"b", pair.second}, {"toggles", t}});
    }
    root["encounters"] = list;
  }
  const CompareGrid& g = sc.grid;
  ojson grid;
  ojson mechs = ojson::array();
  for (auto m : g.mechanisms) mechs.push_back(std::string(to_string(m)));
  ojson adapts = ojson::array();
  for (auto a : g.adaptations) adapts.push_back(std::string(to_string(a)));
  grid["mechanisms"] = mechs;
  grid["adaptations"] = adapts;
  grid["K"] = g.K;
  grid["overhead_energy"] = g.overhead_energy;
  grid["overhead_time_s"] = g.overhead_time_s;
  grid["participation"] = g.participation;
  grid["replications"] = g.replications;
  grid["threads"] = g.threads;
  root["compare"] = grid;
  return root.dump(2) + "\n";
}

std::vector<std::string> user_names(const SimConfig& cfg) {
  std::vector<std::string> out;
  for (const auto& u : cfg.users) out.push_back(u.profile.name);
  return out;
}

TraceSet synthesize_traces(const Scenario& sc, std::size_t replication) {
  for (const auto& u : sc.sim.users) {
    const bool has = std::any_of(sc.capacity.begin(), sc.capacity.end(),
                                 [&](const CapacityStats& s) { return s.user == u.profile.name; });
    if (!has) {
      throw ConfigError("no capacity statistics for user '" + u.profile.name +
                        "'; give users[].capacity or a trace directory");
    }
  }
  const double horizon = sc.trace_horizon_s > 0.0 ? sc.trace_horizon_s : 5.0 * sc.sim.video_length_s;
  TraceSet out;
  out.capacity = generate_synthetic_traces(sc.capacity, horizon, sc.trace_step_s,
                                           sc.sim.seed + replication);
  const auto names = user_names(sc.sim);
  out.encounters = sc.encounters ? *sc.encounters : EncounterTrace::fully_connected(names);
  return out;
}

namespace {

std::string number_label(double v) { return format_metric(v); }

}  // namespace

std::vector<ComparisonCell> expand_grid(const Scenario& sc) {
  const SimConfig& base = sc.sim;
  const CompareGrid& g = sc.grid;
  auto or_base = []<typename T>(const std::vector<T>& axis, T fallback) {
    return axis.empty() ? std::vector<T>{fallback} : axis;
  };
  std::vector<ComparisonCell> cells;
  for (Mechanism m : or_base(g.mechanisms, base.mechanism)) {
    for (AdaptationKind a : or_base(g.adaptations, base.adaptation.kind)) {
      for (std::size_t K : or_base(g.K, base.K)) {
        if (m != Mechanism::momd && K != 1) continue;
        for (double oe : or_base(g.overhead_energy, base.overhead_energy_per_auction)) {
          for (double ot : or_base(g.overhead_time_s, base.overhead_time_per_auction_s)) {
            for (bool p : or_base(g.participation, base.participation_enabled)) {
              SimConfig cfg = base;
              cfg.mechanism = m;
              cfg.adaptation.kind = a;
              cfg.K = K;
              cfg.overhead_energy_per_auction = oe;
              cfg.overhead_time_per_auction_s = ot;
              cfg.participation_enabled = p;
              cfg.record_events = false;
              std::string label = std::string(to_string(m)) + "/" + std::string(to_string(a)) +
                                  "/K=" + std::to_string(K) + "/energy=" + number_label(oe) +
                                  "/time=" + number_label(ot) + "/filter=" + (p ? "on" : "off");
              cells.push_back({std::move(label), std::move(cfg)});
            }
          }
        }
      }
    }
  }
  return cells;
}

OracleInstance parse_oracle_instance(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("instance is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("instance must be a JSON object");
  const std::string w = "instance";
  reject_unknown(root, w,
                 {"K", "marginal_scores", "ladder", "profile_defaults", "downloader",
                  "downloader_capacity_mbps", "bidders", "description"});
  OracleInstance inst;
  inst.K = get_or<std::size_t>(root, "K", w, 1);
  if (inst.K < 1) throw ConfigError("instance.K must be at least 1");
  inst.marginal_scores = get_or<std::vector<std::vector<double>>>(root, "marginal_scores", w, {});
  if (!inst.marginal_scores.empty()) return inst;

  std::optional<BitrateLadder> ladder = standard_ladder();
  if (root.contains("ladder")) ladder = parse_ladder(object_at(root, "ladder", w), "ladder");
  json defaults = json::object();
  if (root.contains("profile_defaults")) {
    defaults = object_at(root, "profile_defaults", w);
    reject_unknown(defaults, "profile_defaults", kProfileKeys);
  }
  auto profile = [&](const json& j, const std::string& where, std::uint32_t id) {
    std::optional<BitrateLadder> own = ladder;
    if (j.contains("ladder")) own = parse_ladder(object_at(j, "ladder", where), where + ".ladder");
    if (!own) throw ConfigError(where + ": no ladder given and no shared ladder");
    UserProfile p{UserId{id}, get_or<std::string>(j, "name", where, "u" + std::to_string(id)), *own};
    apply_profile(defaults, "profile_defaults", p);
    apply_profile(j, where, p);
    try {
      p.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(where + ": " + e.what());
    }
    return p;
  };

  if (!root.contains("downloader")) throw ConfigError("instance.downloader is required");
  const json& d = object_at(root, "downloader", w);
  reject_unknown(d, "downloader",
                 {"name", "theta", "cost_per_mbit", "time_cost_per_s", "buffer_gain_scale",
                  "buffer_gain_decay", "degradation_slope", "ladder"});
  inst.downloader = profile(d, "downloader", 0);
  if (root.contains("downloader_capacity_mbps")) {
    inst.downloader_capacity_mbps = get_or<double>(root, "downloader_capacity_mbps", w, 1.0);
  }
  const json bidders = root.value("bidders", json::array());
  for (std::size_t i = 0; i < bidders.size(); ++i) {
    const json& b = bidders.at(i);
    const std::string where = "bidders[" + std::to_string(i) + "]";
    reject_unknown(b, where,
                   {"name", "theta", "cost_per_mbit", "time_cost_per_s", "buffer_gain_scale",
                    "buffer_gain_decay", "degradation_slope", "ladder", "buffer_s", "prev_bitrate"});
    Participant part{profile(b, where, static_cast<std::uint32_t>(i)), UserState{}};
    part.state.buffer_s = get_or<double>(b, "buffer_s", where, 0.0);
    part.state.prev_bitrate = get_or<double>(b, "prev_bitrate", where, 0.0);
    try {
      part.state.validate(part.profile);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(where + ": " + e.what());
    }
    inst.bidders.push_back(std::move(part));
  }
  return inst;
}

}  // namespace crowdstream
