#include "crowdstream/engine.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <queue>
#include <stdexcept>
#include <thread>
#include <atomic>
#include <exception>
#include <mutex>

#include "crowdstream/errors.hpp"
#include "crowdstream/metrics.hpp"
#include "crowdstream/momd.hpp"
#include "crowdstream/somd.hpp"

namespace crowdstream {

std::string_view to_string(Mechanism m) {
  switch (m) {
    case Mechanism::somd:
      return "somd";
    case Mechanism::momd:
      return "momd";
    case Mechanism::vickrey_1d:
      return "vickrey_1d";
    case Mechanism::noncooperative:
      return "noncooperative";
  }
  return "unknown";
}

Mechanism parse_mechanism(std::string_view name) {
  if (name == "somd") return Mechanism::somd;
  if (name == "momd") return Mechanism::momd;
  if (name == "vickrey_1d") return Mechanism::vickrey_1d;
  if (name == "noncooperative") return Mechanism::noncooperative;
  throw ConfigError("unknown mechanism '" + std::string(name) + "'");
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::auction_start:
      return "auction_start";
    case EventKind::auction_resolved:
      return "auction_resolved";
    case EventKind::segment_downloaded:
      return "segment_downloaded";
    case EventKind::segment_delivered:
      return "segment_delivered";
    case EventKind::playback_stall_start:
      return "playback_stall_start";
    case EventKind::playback_stall_end:
      return "playback_stall_end";
    case EventKind::video_complete:
      return "video_complete";
  }
  return "unknown";
}

std::size_t SimConfig::segments_per_video() const {
  if (users.empty()) return 0;
  const double beta = users.front().profile.ladder.segment_length_s();
  return static_cast<std::size_t>(std::llround(video_length_s / beta));
}

void SimConfig::validate() const {
  if (K < 1) throw ConfigError("K must be at least 1");
  if ((mechanism == Mechanism::somd || mechanism == Mechanism::vickrey_1d) && K != 1) {
    throw ConfigError(std::string(to_string(mechanism)) + " is single-object and requires K = 1");
  }
  if (!(video_length_s > 0.0)) throw ConfigError("video_length_s must be positive");
  if (overhead_energy_per_auction < 0.0 || overhead_time_per_auction_s < 0.0 || d2d_delay_s < 0.0) {
    throw ConfigError("overheads and delays must be nonnegative");
  }
  if (!(idle_retry_s > 0.0)) throw ConfigError("idle_retry_s must be positive");
  if (capacity_window < 1) throw ConfigError("capacity_window must be at least 1");
  if (participation.alpha_buf < 0.0 || participation.alpha_link < 0.0) {
    throw ConfigError("participation coefficients must be nonnegative");
  }
  for (std::size_t i = 0; i < users.size(); ++i) {
    const auto& p = users[i].profile;
    if (p.id.value != i) throw ConfigError("user ids must match their position in the config");
    try {
      p.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    const double beta = p.ladder.segment_length_s();
    if (beta != users.front().profile.ladder.segment_length_s()) {
      throw ConfigError("all users must share one segment length");
    }
    const double segments = video_length_s / beta;
    if (std::fabs(segments - std::round(segments)) > 1e-9) {
      throw ConfigError("video_length_s must be a multiple of the segment length");
    }
  }
}

double download_duration(std::span<const CapacityPoint> series, double start_s, double rate,
                         double beta) {
  double volume = rate * beta;
  if (volume <= 0.0) return 0.0;
  if (series.empty()) throw TraceError("trace underrun: empty capacity series");

  auto it = std::upper_bound(series.begin(), series.end(), start_s,
                             [](double t, const CapacityPoint& p) { return t < p.time_s; });
  std::size_t idx = it == series.begin() ? 0 : static_cast<std::size_t>(it - series.begin()) - 1;
  double t = start_s;
  for (;;) {
    const double h = series[idx].capacity_mbps;
    const bool last = idx + 1 == series.size();
    if (last) {
      if (h <= 0.0) throw TraceError("unreachable completion: capacity stays at zero");
      return t + volume / h - start_s;
    }
    const double piece_end = series[idx + 1].time_s;
    const double available = h * (piece_end - t);
    if (available >= volume && h > 0.0) return t + volume / h - start_s;
    volume -= available;
    t = piece_end;
    ++idx;
  }
}

PriceOutcome single_dimensional_vickrey(std::span<const PriceBid> bids) {
  if (bids.size() < 2) throw AuctionError("insufficient bidders");
  std::size_t best = 0;
  for (std::size_t i = 1; i < bids.size(); ++i) {
    if (bids[i].price > bids[best].price ||
        (bids[i].price == bids[best].price && bids[i].bidder < bids[best].bidder)) {
      best = i;
    }
  }
  double second = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < bids.size(); ++i) {
    if (i != best) second = std::max(second, bids[i].price);
  }
  return {bids[best].bidder, second};
}

namespace {

constexpr double kSlack = 1e-9;
// Floor for a capacity estimate; a dead link is priced as very expensive
// rather than infinitely so.
constexpr double kMinCapacityEstimate = 1e-3;

enum class Action { link_free, auction_resolve, download_done, delivery, buffer_empty };

struct Pending {
  double time;
  std::uint64_t order;
  Action action;
  std::size_t user;
  std::size_t job;
  std::uint64_t epoch;
};

struct Later {
  bool operator()(const Pending& a, const Pending& b) const {
    if (a.time != b.time) return a.time > b.time;
    return a.order > b.order;
  }
};

struct Job {
  std::size_t downloader;
  std::size_t receiver;
  std::size_t segment;
  double bitrate;
  double duration = 0.0;
};

struct Runtime {
  const SimUser* user = nullptr;
  std::span<const CapacityPoint> capacity;
  std::size_t total = 0;
  std::size_t assigned = 0;
  std::size_t delivered = 0;
  double buffer = 0.0;
  double last_assigned_rate = 0.0;
  std::deque<double> history;
  bool started = false;
  bool stalled = false;
  bool complete = false;
  double last_update = 0.0;
  double stall_start = 0.0;
  std::uint64_t epoch = 0;
  std::deque<std::size_t> queue;
  std::vector<double> by_segment;
  UserMetrics metrics;

  const UserProfile& profile() const { return user->profile; }
  std::size_t remaining() const { return total - assigned; }
  std::size_t in_flight() const { return assigned - delivered; }
};

// Receiver and bitrates of one auction award, in download order.
struct Award {
  std::size_t receiver;
  BitrateVector rates;
  double payment;
};

class Simulator {
 public:
  Simulator(const SimConfig& cfg, const CapacityTrace& capacity, const EncounterTrace& encounters)
      : cfg_(cfg) {
    cfg_.validate();
    const std::size_t n = cfg_.users.size();
    users_.resize(n);
    beta_ = n ? cfg_.users.front().profile.ladder.segment_length_s() : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      Runtime& u = users_[i];
      u.user = &cfg_.users[i];
      u.capacity = capacity.series(u.profile().name);
      u.total = cfg_.segments_per_video();
      u.by_segment.assign(u.total, 0.0);
      u.metrics.name = u.profile().name;
    }
    contacts_.assign(n, std::vector<const std::vector<EncounterToggle>*>(n, nullptr));
    for (const auto& [pair, toggles] : encounters.all()) {
      const auto a = index_of(pair.first);
      const auto b = index_of(pair.second);
      if (a < n && b < n) {
        contacts_[a][b] = &toggles;
        contacts_[b][a] = &toggles;
      }
    }
    max_time_ = cfg_.max_time_s > 0.0 ? cfg_.max_time_s : 20.0 * cfg_.video_length_s + 1000.0;
  }

  SimResult run() {
    for (std::size_t i = 0; i < users_.size(); ++i) schedule(0.0, Action::link_free, i);
    while (!pending_.empty()) {
      const Pending p = pending_.top();
      pending_.pop();
      if (p.time > max_time_) {
        throw std::runtime_error("simulation exceeded its time limit at t=" +
                                 std::to_string(p.time));
      }
      now_ = p.time;
      switch (p.action) {
        case Action::link_free:
          link_free(p.user);
          break;
        case Action::auction_resolve:
          resolve_auction(p.user, true);
          break;
        case Action::download_done:
          download_done(p.job);
          break;
        case Action::delivery:
          delivery(p.job);
          break;
        case Action::buffer_empty:
          buffer_empty(p.user, p.epoch);
          break;
      }
    }
    for (const Runtime& u : users_) {
      if (!u.complete) {
        throw std::runtime_error("simulation stalled: user '" + u.metrics.name +
                                 "' did not finish its video");
      }
    }
    return finish();
  }

 private:
  std::size_t index_of(const std::string& name) const {
    for (std::size_t i = 0; i < cfg_.users.size(); ++i) {
      if (cfg_.users[i].profile.name == name) return i;
    }
    return cfg_.users.size();
  }

  void schedule(double time, Action action, std::size_t user, std::size_t job = 0,
                std::uint64_t epoch = 0) {
    pending_.push({time, order_++, action, user, job, epoch});
  }

  void log(EventKind kind, std::size_t user, std::size_t peer, std::size_t segment = 0,
           double bitrate = 0.0, double value = 0.0) {
    if (!cfg_.record_events) return;
    events_.push_back({now_, events_.size(), kind, UserId{static_cast<std::uint32_t>(user)},
                       UserId{static_cast<std::uint32_t>(peer)}, segment, bitrate, value});
  }

  void observe_buffer(Runtime& u, double level) {
    u.metrics.min_buffer_s = std::min(u.metrics.min_buffer_s, level);
    u.metrics.max_buffer_s = std::max(u.metrics.max_buffer_s, level);
  }

  void advance(Runtime& u) {
    if (u.started && !u.stalled && !u.complete) {
      u.buffer = std::max(0.0, u.buffer - (now_ - u.last_update));
    }
    u.last_update = now_;
    observe_buffer(u, u.buffer);
  }

  double headroom_s(const Runtime& u) const {
    return u.profile().ladder.max_buffer_s() - u.buffer - static_cast<double>(u.in_flight()) * beta_;
  }

  // Segments `u` may still request without overflowing its buffer.
  std::size_t capacity_for(const Runtime& u, std::size_t per_auction) const {
    if (u.remaining() == 0) return 0;
    const double room = std::floor(headroom_s(u) / beta_ + kSlack);
    if (room < 1.0) return 0;
    return std::min({u.remaining(), static_cast<std::size_t>(room), per_auction});
  }

  // Buffer counts segments already on their way.
  UserState bidding_state(const Runtime& u) const {
    UserState s;
    s.buffer_s = std::min(u.profile().ladder.max_buffer_s(),
                          u.buffer + static_cast<double>(u.in_flight()) * beta_);
    s.prev_bitrate = u.last_assigned_rate;
    s.capacity_history = u.history;
    return s;
  }

  double estimate(const Runtime& u) const {
    double h = 0.0;
    if (u.history.empty()) {
      h = capacity_at(u.capacity, now_);
    } else {
      for (double x : u.history) h += x;
      h /= static_cast<double>(u.history.size());
    }
    return std::max(h, kMinCapacityEstimate);
  }

  bool encountered(std::size_t a, std::size_t b) const {
    if (a == b) return true;
    const auto* toggles = contacts_[a][b];
    return toggles != nullptr && connected_at(*toggles, now_);
  }

  std::vector<std::size_t> neighbors(std::size_t a) const {
    std::vector<std::size_t> out;
    for (std::size_t b = 0; b < users_.size(); ++b) {
      if (encountered(a, b)) out.push_back(b);
    }
    return out;
  }

  bool any_demand() const {
    return std::any_of(users_.begin(), users_.end(), [](const Runtime& u) { return u.remaining() > 0; });
  }

  std::size_t per_auction() const { return cfg_.mechanism == Mechanism::momd ? cfg_.K : 1; }

  struct Eligible {
    std::size_t user;
    std::size_t cap;
    UserState state;
  };

  std::vector<Eligible> eligible_bidders(std::size_t n) {
    std::vector<Eligible> out;
    const double h_n = estimate(users_[n]);
    for (std::size_t m : neighbors(n)) {
      Runtime& u = users_[m];
      advance(u);
      const std::size_t cap = capacity_for(u, per_auction());
      if (cap == 0) continue;
      UserState state = bidding_state(u);
      if (cfg_.participation_enabled) {
        std::vector<double> shares;
        for (std::size_t i : neighbors(m)) {
          shares.push_back(estimate(users_[i]) / static_cast<double>(neighbors(i).size()));
        }
        if (!should_participate(u.profile(), state, h_n, shares, cfg_.participation)) continue;
      }
      out.push_back({m, cap, std::move(state)});
    }
    return out;
  }

  void retry_later(std::size_t n) {
    if (any_demand()) schedule(now_ + cfg_.idle_retry_s, Action::link_free, n);
  }

  void link_free(std::size_t n) {
    Runtime& u = users_[n];
    advance(u);
    if (link_busy_.size() != users_.size()) link_busy_.assign(users_.size(), false);
    if (link_busy_[n]) return;
    if (!u.queue.empty()) {
      start_next(n);
      return;
    }
    if (cfg_.mechanism == Mechanism::noncooperative) {
      self_download(n);
      return;
    }
    if (!u.user->helper && u.remaining() == 0) return;
    if (cfg_.overhead_time_per_auction_s > 0.0) {
      const auto bidders = eligible_bidders(n);
      if (bidders.empty()) {
        retry_later(n);
        return;
      }
      log(EventKind::auction_start, n, n, 0, 0.0, static_cast<double>(bidders.size()));
      link_busy_[n] = true;
      schedule(now_ + cfg_.overhead_time_per_auction_s, Action::auction_resolve, n);
      return;
    }
    resolve_auction(n, false);
  }

  void self_download(std::size_t n) {
    Runtime& u = users_[n];
    if (capacity_for(u, 1) == 0) {
      if (u.remaining() > 0) schedule(now_ + cfg_.idle_retry_s, Action::link_free, n);
      return;
    }
    const UserState state = bidding_state(u);
    const double h = estimate(u);
    double rate = 0.0;
    if (cfg_.adaptation.kind == AdaptationKind::optimal) {
      rate = optimal_somd_bid(u.profile(), state, ScoreFunction::efficient(u.profile(), h)).bitrate;
    } else {
      rate = baseline_bitrate(cfg_.adaptation, state, h, u.profile().ladder);
    }
    assign(n, n, state, BitrateVector{rate});
    start_next(n);
  }

  std::vector<Award> run_momd(std::size_t n, const std::vector<Eligible>& bidders, double h_n,
                              std::size_t& violations, bool& guaranteed) {
    const ScoreFunction sf = ScoreFunction::efficient(users_[n].profile(), h_n);
    std::vector<MomdBid> bids;
    std::size_t rows = 0;
    for (const Eligible& e : bidders) {
      const UserProfile& profile = users_[e.user].profile();
      BitrateMatrix matrix;
      if (cfg_.adaptation.kind == AdaptationKind::optimal) {
        matrix = optimal_bitrate_matrix(profile, e.state, sf, e.cap);
      } else {
        const double r = baseline_bitrate(cfg_.adaptation, e.state, h_n, profile.ladder);
        matrix = BitrateMatrix::uniform(std::vector<double>(e.cap, r));
      }
      bids.push_back(truthful_bid(profile, e.state, std::move(matrix)));
      rows += e.cap;
    }
    const MomdOutcome outcome = resolve_vickrey_score(bids, sf, std::min(cfg_.K, rows));
    violations = outcome.assumption1_violations;
    guaranteed = outcome.guaranteed();

    std::vector<Award> awards;
    for (UserId winner : outcome.per_segment_winners) {
      const auto it = std::find_if(awards.begin(), awards.end(),
                                   [&](const Award& a) { return a.receiver == winner.value; });
      if (it != awards.end()) continue;
      for (const BidderAward& a : outcome.awards) {
        if (a.bidder == winner) awards.push_back({winner.value, a.bitrates, a.payment});
      }
    }
    return awards;
  }

  std::vector<Award> run_somd(std::size_t n, const std::vector<Eligible>& bidders, double h_n) {
    const ScoreFunction sf = ScoreFunction::efficient(users_[n].profile(), h_n);
    std::vector<SomdBid> bids;
    for (const Eligible& e : bidders) {
      const UserProfile& profile = users_[e.user].profile();
      if (cfg_.adaptation.kind == AdaptationKind::optimal) {
        bids.push_back(optimal_somd_bid(profile, e.state, sf));
      } else {
        const double r = baseline_bitrate(cfg_.adaptation, e.state, h_n, profile.ladder);
        const std::array<double, 1> row{r};
        bids.push_back({profile.id, r, utility_total(profile, e.state, row)});
      }
    }
    if (bids.size() == 1) {
      const SomdBid& only = bids.front();
      const double payment = only.bidder.value == n ? 0.0 : sf(only.bitrate);
      return {{only.bidder.value, {only.bitrate}, payment}};
    }
    const SomdOutcome out = resolve_second_score(bids, sf);
    return {{out.winner.value, {out.winning_bitrate}, out.payment}};
  }

  std::vector<Award> run_vickrey_1d(const std::vector<Eligible>& bidders, double h_n) {
    std::vector<PriceBid> bids;
    std::vector<double> rates;
    for (const Eligible& e : bidders) {
      const Runtime& u = users_[e.user];
      double r = 0.0;
      if (cfg_.adaptation.kind == AdaptationKind::optimal) {
        const auto own = ScoreFunction::efficient(u.profile(), estimate(u));
        r = optimal_somd_bid(u.profile(), e.state, own).bitrate;
      } else {
        r = baseline_bitrate(cfg_.adaptation, e.state, h_n, u.profile().ladder);
      }
      const std::array<double, 1> row{r};
      bids.push_back({u.profile().id, utility_total(u.profile(), e.state, row)});
      rates.push_back(r);
    }
    if (bids.size() == 1) return {{bids.front().bidder.value, {rates.front()}, 0.0}};
    const PriceOutcome out = single_dimensional_vickrey(bids);
    for (std::size_t i = 0; i < bids.size(); ++i) {
      if (bids[i].bidder == out.winner) return {{out.winner.value, {rates[i]}, out.payment}};
    }
    return {};
  }

  void resolve_auction(std::size_t n, bool announced) {
    if (link_busy_.size() != users_.size()) link_busy_.assign(users_.size(), false);
    link_busy_[n] = false;
    Runtime& auctioneer = users_[n];
    advance(auctioneer);
    const auto bidders = eligible_bidders(n);
    if (bidders.empty()) {
      retry_later(n);
      return;
    }
    if (!announced) {
      log(EventKind::auction_start, n, n, 0, 0.0, static_cast<double>(bidders.size()));
    }
    const double h_n = estimate(auctioneer);

    std::size_t violations = 0;
    bool guaranteed = true;
    std::vector<Award> awards;
    switch (cfg_.mechanism) {
      case Mechanism::momd:
        awards = run_momd(n, bidders, h_n, violations, guaranteed);
        break;
      case Mechanism::somd:
        awards = run_somd(n, bidders, h_n);
        break;
      case Mechanism::vickrey_1d:
        awards = run_vickrey_1d(bidders, h_n);
        break;
      case Mechanism::noncooperative:
        break;
    }

    AuctionRecord record;
    record.time_s = now_;
    record.auctioneer = auctioneer.profile().id;
    record.participants = bidders.size();
    record.guaranteed = guaranteed;
    for (const Award& a : awards) {
      const auto state = std::find_if(bidders.begin(), bidders.end(),
                                      [&](const Eligible& e) { return e.user == a.receiver; });
      assign(n, a.receiver, state->state, a.rates);
      record.segments += a.rates.size();
      if (a.receiver != n) {
        users_[a.receiver].metrics.payments_made += a.payment;
        auctioneer.metrics.payments_received += a.payment;
        record.paid.push_back({UserId{static_cast<std::uint32_t>(a.receiver)}, a.payment});
        record.received += a.payment;
      }
    }
    auctioneer.metrics.overhead += cfg_.overhead_energy_per_auction;
    violations_ += violations;
    auctions_.push_back(std::move(record));
    log(EventKind::auction_resolved, n, n, 0, 0.0, static_cast<double>(auctions_.back().segments));
    start_next(n);
  }

  void assign(std::size_t n, std::size_t m, const UserState& state, const BitrateVector& rates) {
    Runtime& receiver = users_[m];
    receiver.metrics.utility += utility_total(receiver.profile(), state, rates);
    for (double r : rates) {
      jobs_.push_back({n, m, receiver.assigned++, r});
      users_[n].queue.push_back(jobs_.size() - 1);
    }
    receiver.last_assigned_rate = rates.back();
  }

  void start_next(std::size_t n) {
    Runtime& u = users_[n];
    if (u.queue.empty()) return;
    const std::size_t id = u.queue.front();
    u.queue.pop_front();
    Job& job = jobs_[id];
    job.duration = download_duration(u.capacity, now_, job.bitrate, beta_);
    link_busy_[n] = true;
    schedule(now_ + job.duration, Action::download_done, n, id);
  }

  void download_done(std::size_t id) {
    const Job& job = jobs_[id];
    Runtime& u = users_[job.downloader];
    link_busy_[job.downloader] = false;
    u.metrics.cost += segment_cost(u.profile(), job.bitrate) + u.profile().time_cost_per_s * job.duration;
    if (job.duration > 0.0) {
      u.history.push_back(job.bitrate * beta_ / job.duration);
      while (u.history.size() > cfg_.capacity_window) u.history.pop_front();
    }
    log(EventKind::segment_downloaded, job.downloader, job.receiver, job.segment, job.bitrate,
        job.duration);
    const double hop = job.receiver == job.downloader ? 0.0 : cfg_.d2d_delay_s;
    schedule(now_ + hop, Action::delivery, job.receiver, id);
    link_free(job.downloader);
  }

  void delivery(std::size_t id) {
    const Job& job = jobs_[id];
    Runtime& u = users_[job.receiver];
    advance(u);
    u.by_segment[job.segment] = job.bitrate;
    ++u.delivered;
    const double raw = u.buffer + beta_;
    observe_buffer(u, raw);
    u.buffer = std::min(raw, u.profile().ladder.max_buffer_s());
    log(EventKind::segment_delivered, job.downloader, job.receiver, job.segment, job.bitrate);
    if (u.stalled) {
      const double length = now_ - u.stall_start;
      u.metrics.rebuffer_s += length;
      u.stalled = false;
      log(EventKind::playback_stall_end, job.receiver, job.receiver, 0, 0.0, length);
    }
    u.started = true;
    ++u.epoch;
    schedule(now_ + u.buffer, Action::buffer_empty, job.receiver, 0, u.epoch);
  }

  void buffer_empty(std::size_t m, std::uint64_t epoch) {
    Runtime& u = users_[m];
    if (epoch != u.epoch || u.stalled || u.complete) return;
    advance(u);
    u.buffer = 0.0;
    if (u.delivered == u.total) {
      u.complete = true;
      u.metrics.completion_time_s = now_;
      log(EventKind::video_complete, m, m);
    } else {
      u.stalled = true;
      u.stall_start = now_;
      ++u.metrics.stall_count;
      log(EventKind::playback_stall_start, m, m);
    }
  }

  SimResult finish() {
    SimResult result;
    double bitrate_sum = 0.0;
    double volume_sum = 0.0;
    double stall_sum = 0.0;
    std::size_t segment_sum = 0;
    for (Runtime& u : users_) {
      UserMetrics& m = u.metrics;
      m.bitrates = u.by_segment;
      m.segments = u.delivered;
      double sum = 0.0;
      for (double r : m.bitrates) sum += r;
      m.average_bitrate = m.segments ? sum / static_cast<double>(m.segments) : 0.0;
      m.degradation_volume = degradation_volume(m.bitrates);
      m.degradation_ratio = degradation_ratio(m.bitrates);
      for (std::size_t i = 1; i < m.bitrates.size(); ++i) {
        if (m.bitrates[i] < m.bitrates[i - 1]) ++m.degradation_events;
      }
      m.rebuffer_ratio = rebuffer_ratio(m.rebuffer_s, cfg_.video_length_s);
      m.welfare = m.utility - m.cost - m.overhead - m.payments_made + m.payments_received;

      result.aggregate.total_utility += m.utility;
      result.aggregate.total_cost += m.cost;
      bitrate_sum += sum;
      volume_sum += m.degradation_volume;
      stall_sum += m.rebuffer_s;
      segment_sum += m.segments;
      result.users.push_back(m);
    }
    AggregateMetrics& agg = result.aggregate;
    agg.auction_count = auctions_.size();
    agg.overhead_energy = static_cast<double>(agg.auction_count) * cfg_.overhead_energy_per_auction;
    agg.social_welfare = agg.total_utility - agg.total_cost - agg.overhead_energy;
    agg.rebuffer_ratio =
        rebuffer_ratio(stall_sum, cfg_.video_length_s * static_cast<double>(users_.size()));
    agg.degradation_ratio = bitrate_sum > 0.0 ? volume_sum / bitrate_sum : 0.0;
    agg.average_bitrate = segment_sum ? bitrate_sum / static_cast<double>(segment_sum) : 0.0;
    agg.assumption1_violations = violations_;
    agg.end_time_s = now_;
    result.auctions = std::move(auctions_);
    result.events = std::move(events_);
    return result;
  }

  SimConfig cfg_;
  double beta_ = 0.0;
  double now_ = 0.0;
  double max_time_ = 0.0;
  std::uint64_t order_ = 0;
  std::size_t violations_ = 0;
  std::vector<Runtime> users_;
  std::vector<bool> link_busy_;
  std::vector<std::vector<const std::vector<EncounterToggle>*>> contacts_;
  std::vector<Job> jobs_;
  std::vector<AuctionRecord> auctions_;
  std::vector<SimEvent> events_;
  std::priority_queue<Pending, std::vector<Pending>, Later> pending_;
};

}  // namespace

SimResult run_simulation(const SimConfig& cfg, const CapacityTrace& capacity,
                         const EncounterTrace& encounters) {
  Simulator sim(cfg, capacity, encounters);
  return sim.run();
}

namespace {

bool close(double a, double b) {
  return std::fabs(a - b) <= 1e-9 * std::max({1.0, std::fabs(a), std::fabs(b)});
}

}  // namespace

InvariantReport check_invariants(const SimConfig& cfg, const SimResult& result) {
  InvariantReport report;

  double made = 0.0;
  double received = 0.0;
  for (const auto& u : result.users) {
    made += u.payments_made;
    received += u.payments_received;
  }
  if (!close(made, received)) ++report.payment_violations;
  for (const auto& a : result.auctions) {
    double paid = 0.0;
    for (const auto& t : a.paid) paid += t.amount;
    if (!close(paid, a.received)) ++report.payment_violations;
  }

  for (std::size_t i = 0; i < result.users.size(); ++i) {
    const auto& u = result.users[i];
    const double cap = cfg.users.at(i).profile.ladder.max_buffer_s();
    if (u.min_buffer_s < -1e-9 || u.max_buffer_s > cap + 1e-9) ++report.buffer_violations;
  }

  const auto& agg = result.aggregate;
  double utility = 0.0;
  double cost = 0.0;
  double per_user = 0.0;
  for (const auto& u : result.users) {
    utility += u.utility;
    cost += u.cost;
    per_user += u.welfare;
  }
  const double expected = utility - cost -
                          static_cast<double>(agg.auction_count) * cfg.overhead_energy_per_auction;
  if (!close(agg.social_welfare, expected)) ++report.welfare_violations;
  if (!close(per_user, agg.social_welfare)) ++report.welfare_violations;

  if (cfg.record_events) {
    std::vector<double> stalls(result.users.size(), 0.0);
    for (const auto& e : result.events) {
      if (e.kind == EventKind::playback_stall_end) stalls.at(e.user.value) += e.value;
    }
    for (std::size_t i = 0; i < result.users.size(); ++i) {
      if (!close(stalls[i], result.users[i].rebuffer_s)) ++report.rebuffer_violations;
    }
  }
  return report;
}

std::vector<CellSummary> run_comparison(std::span<const ComparisonCell> cells,
                                        const TraceFactory& traces,
                                        const ComparisonOptions& options) {
  const std::size_t reps = options.replications;
  std::vector<TraceSet> sets;
  sets.reserve(reps);
  for (std::size_t r = 0; r < reps; ++r) sets.push_back(traces(r));

  struct Slot {
    AggregateMetrics aggregate;
    std::size_t violations = 0;
    bool deterministic = true;
  };
  std::vector<Slot> slots(cells.size() * reps);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t task = next.fetch_add(1);
      if (task >= slots.size()) return;
      const std::size_t cell = task / reps;
      const std::size_t rep = task % reps;
      try {
        SimConfig cfg = cells[cell].config;
        cfg.seed = cfg.seed + rep;
        const SimResult result = run_simulation(cfg, sets[rep].capacity, sets[rep].encounters);
        Slot& slot = slots[task];
        slot.aggregate = result.aggregate;
        slot.violations = check_invariants(cfg, result).total();
        if (options.check_determinism) {
          slot.deterministic =
              run_simulation(cfg, sets[rep].capacity, sets[rep].encounters) == result;
        }
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(slots.size());
      }
    }
  };

  const std::size_t threads = std::max<std::size_t>(1, std::min(options.threads, slots.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<CellSummary> out;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    CellSummary s;
    s.label = cells[c].label;
    s.replications = reps;
    for (std::size_t r = 0; r < reps; ++r) {
      const Slot& slot = slots[c * reps + r];
      const AggregateMetrics& a = slot.aggregate;
      s.social_welfare += a.social_welfare;
      s.rebuffer_ratio += a.rebuffer_ratio;
      s.degradation_ratio += a.degradation_ratio;
      s.average_bitrate += a.average_bitrate;
      s.auction_count += static_cast<double>(a.auction_count);
      s.assumption1_violations += static_cast<double>(a.assumption1_violations);
      s.invariant_violations += slot.violations;
      if (!slot.deterministic) ++s.determinism_failures;
      s.runs.push_back(a);
    }
    if (reps > 0) {
      const double n = static_cast<double>(reps);
      s.social_welfare /= n;
      s.rebuffer_ratio /= n;
      s.degradation_ratio /= n;
      s.average_bitrate /= n;
      s.auction_count /= n;
      s.assumption1_violations /= n;
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace crowdstream
