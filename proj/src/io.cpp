#include "crowdstream/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "crowdstream/errors.hpp"

namespace crowdstream {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) return out;
    start = comma + 1;
  }
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string shortest(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

struct Line {
  std::size_t number;
  std::vector<std::string_view> fields;
};

// Data rows of a trace file, with the optional header checked and removed.
std::vector<Line> data_lines(std::string_view text, std::string_view header, std::size_t width) {
  std::vector<Line> out;
  std::size_t number = 0;
  bool first = true;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view raw = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++number;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto fields = split(line);
    double probe = 0.0;
    if (first && !parse_double(fields.front(), probe)) {
      if (line != header) {
        throw TraceError("line " + std::to_string(number) + ": expected header '" +
                         std::string(header) + "'");
      }
      first = false;
      continue;
    }
    first = false;
    if (fields.size() != width) {
      throw TraceError("line " + std::to_string(number) + ": expected " + std::to_string(width) +
                       " fields, got " + std::to_string(fields.size()));
    }
    out.push_back({number, std::move(fields)});
  }
  return out;
}

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw TraceError("line " + std::to_string(line) + ": " + what);
}

void check_known(std::size_t line, std::string_view user, std::span<const std::string> known) {
  if (user.empty()) fail(line, "empty user id");
  if (!known.empty() && std::find(known.begin(), known.end(), user) == known.end()) {
    fail(line, "unknown user '" + std::string(user) + "'");
  }
}

}  // namespace

CapacityTrace parse_capacity_trace(std::string_view text, std::span<const std::string> known_users) {
  std::map<std::string, std::vector<CapacityPoint>> series;
  for (const Line& line : data_lines(text, "time_s,user_id,capacity_mbps", 3)) {
    double t = 0.0;
    double cap = 0.0;
    if (!parse_double(line.fields[0], t)) fail(line.number, "bad time '" + std::string(line.fields[0]) + "'");
    if (!parse_double(line.fields[2], cap)) {
      fail(line.number, "bad capacity '" + std::string(line.fields[2]) + "'");
    }
    const std::string user(line.fields[1]);
    check_known(line.number, user, known_users);
    if (cap < 0.0) fail(line.number, "negative capacity");
    auto& points = series[user];
    if (points.empty() && t != 0.0) fail(line.number, "first row for '" + user + "' must be at time 0");
    if (!points.empty() && !(t > points.back().time_s)) {
      fail(line.number, "times for '" + user + "' must be strictly increasing");
    }
    points.push_back({t, cap});
  }
  CapacityTrace out;
  for (auto& [user, points] : series) out.set_series(user, std::move(points));
  return out;
}

EncounterTrace parse_encounter_trace(std::string_view text,
                                     std::span<const std::string> known_users) {
  std::map<EncounterTrace::PairKey, std::vector<EncounterToggle>> toggles;
  for (const Line& line : data_lines(text, "time_s,user_a,user_b,connected", 4)) {
    double t = 0.0;
    if (!parse_double(line.fields[0], t)) fail(line.number, "bad time '" + std::string(line.fields[0]) + "'");
    const std::string a(line.fields[1]);
    const std::string b(line.fields[2]);
    check_known(line.number, a, known_users);
    check_known(line.number, b, known_users);
    if (a == b) fail(line.number, "self-pair '" + a + "'");
    const auto flag = line.fields[3];
    if (flag != "0" && flag != "1") fail(line.number, "connected must be 0 or 1");
    auto& list = toggles[a < b ? EncounterTrace::PairKey{a, b} : EncounterTrace::PairKey{b, a}];
    const bool connected = flag == "1";
    if (!list.empty()) {
      if (!(t > list.back().time_s)) fail(line.number, "toggle times must be strictly increasing");
      if (list.back().connected == connected) fail(line.number, "toggles must alternate");
    }
    list.push_back({t, connected});
  }
  EncounterTrace out;
  for (auto& [pair, list] : toggles) out.set_toggles(pair.first, pair.second, std::move(list));
  return out;
}

std::string format_capacity_trace(const CapacityTrace& trace) {
  std::string out = "time_s,user_id,capacity_mbps\n";
  for (const auto& [user, points] : trace.all()) {
    for (const auto& p : points) {
      out += shortest(p.time_s) + "," + user + "," + shortest(p.capacity_mbps) + "\n";
    }
  }
  return out;
}

std::string format_encounter_trace(const EncounterTrace& trace) {
  std::string out = "time_s,user_a,user_b,connected\n";
  for (const auto& [pair, toggles] : trace.all()) {
    for (const auto& t : toggles) {
      out += shortest(t.time_s) + "," + pair.first + "," + pair.second + "," +
             (t.connected ? "1" : "0") + "\n";
    }
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

std::string format_metric(double value) {
  if (value == 0.0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", value);
  return buf;
}

namespace {

std::string count(std::size_t n) { return std::to_string(n); }

Table make_table(std::initializer_list<std::pair<const char*, bool>> columns) {
  Table t;
  for (const auto& [name, numeric] : columns) {
    t.header.emplace_back(name);
    t.numeric.push_back(numeric);
  }
  return t;
}

}  // namespace

Table users_table(const SimResult& result) {
  Table t = make_table({{"user", false},
                        {"utility", true},
                        {"cost", true},
                        {"overhead", true},
                        {"payments_made", true},
                        {"payments_received", true},
                        {"welfare", true},
                        {"segments", true},
                        {"average_bitrate", true},
                        {"rebuffer_s", true},
                        {"stall_count", true},
                        {"degradation_volume", true},
                        {"degradation_events", true},
                        {"degradation_ratio", true},
                        {"rebuffer_ratio", true},
                        {"completion_time_s", true}});
  for (const auto& u : result.users) {
    t.rows.push_back({u.name, format_metric(u.utility), format_metric(u.cost),
                      format_metric(u.overhead), format_metric(u.payments_made),
                      format_metric(u.payments_received), format_metric(u.welfare),
                      count(u.segments), format_metric(u.average_bitrate),
                      format_metric(u.rebuffer_s), count(u.stall_count),
                      format_metric(u.degradation_volume), count(u.degradation_events),
                      format_metric(u.degradation_ratio), format_metric(u.rebuffer_ratio),
                      format_metric(u.completion_time_s)});
  }
  return t;
}

Table aggregate_table(const SimResult& result) {
  Table t = make_table({{"social_welfare", true},
                        {"total_utility", true},
                        {"total_cost", true},
                        {"overhead_energy", true},
                        {"rebuffer_ratio", true},
                        {"degradation_ratio", true},
                        {"average_bitrate", true},
                        {"auction_count", true},
                        {"assumption1_violations", true},
                        {"end_time_s", true}});
  if (result.users.empty()) return t;
  const auto& a = result.aggregate;
  t.rows.push_back({format_metric(a.social_welfare), format_metric(a.total_utility),
                    format_metric(a.total_cost), format_metric(a.overhead_energy),
                    format_metric(a.rebuffer_ratio), format_metric(a.degradation_ratio),
                    format_metric(a.average_bitrate), count(a.auction_count),
                    count(a.assumption1_violations), format_metric(a.end_time_s)});
  return t;
}

Table events_table(const SimResult& result) {
  Table t = make_table({{"sequence", true},
                        {"time_s", true},
                        {"kind", false},
                        {"user", true},
                        {"peer", true},
                        {"segment", true},
                        {"bitrate", true},
                        {"value", true}});
  for (const auto& e : result.events) {
    t.rows.push_back({count(e.sequence), format_metric(e.time_s), std::string(to_string(e.kind)),
                      count(e.user.value), count(e.peer.value), count(e.segment),
                      format_metric(e.bitrate), format_metric(e.value)});
  }
  return t;
}

Table comparison_table(std::span<const CellSummary> cells) {
  Table t = make_table({{"cell", false},
                        {"replications", true},
                        {"social_welfare", true},
                        {"rebuffer_ratio", true},
                        {"degradation_ratio", true},
                        {"average_bitrate", true},
                        {"auction_count", true},
                        {"assumption1_violations", true},
                        {"invariant_violations", true},
                        {"determinism_failures", true}});
  for (const auto& c : cells) {
    t.rows.push_back({c.label, count(c.replications), format_metric(c.social_welfare),
                      format_metric(c.rebuffer_ratio), format_metric(c.degradation_ratio),
                      format_metric(c.average_bitrate), format_metric(c.auction_count),
                      format_metric(c.assumption1_violations), count(c.invariant_violations),
                      count(c.determinism_failures)});
  }
  return t;
}

std::string to_csv(const Table& table) {
  std::string out;
  auto row = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  row(table.header);
  for (const auto& r : table.rows) row(r);
  return out;
}

std::string to_jsonl(const Table& table) {
  std::string out;
  for (const auto& r : table.rows) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < table.header.size(); ++i) {
      const std::string& cell = r[i];
      if (!table.numeric[i]) {
        obj[table.header[i]] = cell;
      } else if (cell.find_first_of(".eEn") == std::string::npos) {
        obj[table.header[i]] = std::stoll(cell);
      } else {
        obj[table.header[i]] = std::stod(cell);
      }
    }
    out += obj.dump() + "\n";
  }
  return out;
}

Table parse_csv(std::string_view text) {
  Table t;
  bool header = true;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (line.empty()) continue;
    std::vector<std::string> cells;
    for (auto f : split(line)) cells.emplace_back(f);
    if (header) {
      t.header = std::move(cells);
      header = false;
    } else {
      if (cells.size() != t.header.size()) throw IoError("csv row width does not match header");
      t.rows.push_back(std::move(cells));
    }
  }
  t.numeric.assign(t.header.size(), true);
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    for (const auto& r : t.rows) {
      double v = 0.0;
      if (!parse_double(r[c], v)) t.numeric[c] = false;
    }
  }
  return t;
}

ResultFormat parse_result_format(std::string_view name) {
  if (name == "csv") return ResultFormat::csv;
  if (name == "jsonl" || name == "json-lines") return ResultFormat::jsonl;
  throw ConfigError("unknown result format '" + std::string(name) + "'");
}

namespace {

void write_table(const Table& table, const std::filesystem::path& dir, const std::string& stem,
                 ResultFormat format) {
  if (format == ResultFormat::csv) {
    write_text_file(dir / (stem + ".csv"), to_csv(table));
  } else {
    write_text_file(dir / (stem + ".jsonl"), to_jsonl(table));
  }
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

}  // namespace

void emit_results(const SimResult& result, const std::filesystem::path& dir, ResultFormat format,
                  bool include_events) {
  ensure_dir(dir);
  write_table(users_table(result), dir, "users", format);
  write_table(aggregate_table(result), dir, "aggregate", format);
  if (include_events) write_table(events_table(result), dir, "events", format);
}

void emit_comparison(std::span<const CellSummary> cells, const std::filesystem::path& dir,
                     ResultFormat format) {
  ensure_dir(dir);
  write_table(comparison_table(cells), dir, "comparison", format);
}

}  // namespace crowdstream
