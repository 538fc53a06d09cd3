#pragma once

// Zero-intelligence order flow in event time.
//
// Every step draws one action: a unit limit order deposited uniformly on the
// integer ticks of [m - D, m] (buy) or [m, m + D] (sell), a unit market order,
// or a cancelation of a uniformly chosen resting order. Sides are fair coins.
// Large price changes are injected by clearing every resting order within
// depth J of the best price on one side.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "lobrelax/error.hpp"
#include "lobrelax/orderbook.hpp"

namespace lobrelax {

enum class ShockDirection : std::uint8_t { drop, rise };

enum class ShockSchedule : std::uint8_t { alternating, random };

struct FlowConfig {
  double p_lo = 0.5;
  double p_mo = 0.16;
  double p_c = 0.34;
  Price depth = 1000;        // D, deposition band width
  Price shock_depth = 1000;  // J, clearing depth
  double shock_frequency = 1.0 / 5e4;  // f, shocks per step; 0 disables
  std::uint64_t warmup_steps = 100'000;
  double warmup_fill = 0.5;  // leading fraction of warm-up that only deposits
  std::uint64_t total_steps = 5'000'000;  // measured steps after warm-up
  std::uint64_t seed = 1;
  Price initial_price = 1'000'000;
  std::uint64_t pre_window = 50;
  std::uint64_t post_window = 10'000;
  ShockSchedule schedule = ShockSchedule::alternating;

  /// Steps between shocks, 0 when shocks are disabled.
  std::uint64_t shock_period() const {
    if (shock_frequency <= 0.0) return 0;
    return static_cast<std::uint64_t>(std::llround(1.0 / shock_frequency));
  }

  void validate() const {
    if (p_lo < 0 || p_mo < 0 || p_c < 0) throw ConfigError("rates must be non-negative");
    if (std::abs(p_lo + p_mo + p_c - 1.0) > 1e-12) throw ConfigError("p_lo + p_mo + p_c must equal 1");
    if (depth < 1) throw ConfigError("depth D must be >= 1");
    if (shock_depth < 1) throw ConfigError("shock depth J must be >= 1");
    if (warmup_fill < 0 || warmup_fill > 1) throw ConfigError("warmup_fill must lie in [0, 1]");
    if (shock_frequency < 0) throw ConfigError("shock frequency must be >= 0");
    if (total_steps <= warmup_steps) throw ConfigError("total_steps must exceed warmup_steps");
    if (initial_price <= depth) throw ConfigError("initial_price must exceed depth D");
    if (const auto period = shock_period(); period != 0 && period < pre_window + post_window + 1)
      throw ConfigError("shock period 1/f shorter than pre_window + post_window");
  }
};

enum class Action : std::uint8_t { lo_buy, lo_sell, mo_buy, mo_sell, c_buy, c_sell, skip, shock };

constexpr std::string_view to_string(Action a) noexcept {
  switch (a) {
    case Action::lo_buy: return "LO-buy";
    case Action::lo_sell: return "LO-sell";
    case Action::mo_buy: return "MO-buy";
    case Action::mo_sell: return "MO-sell";
    case Action::c_buy: return "C-buy";
    case Action::c_sell: return "C-sell";
    case Action::skip: return "skip";
    case Action::shock: return "shock";
  }
  return "?";
}

struct StepRecord {
  std::uint64_t t = 0;
  Action action = Action::skip;
  double mid = 0.0;                  // last valid mid when the book is one-sided
  std::optional<BookStats> stats;    // absent while a side is empty
};

struct ShockReport {
  ShockDirection direction = ShockDirection::drop;
  std::size_t orders_removed = 0;
  double mid_before = 0.0;
  double mid_after = 0.0;  // last valid mid if the side was emptied
  bool side_emptied = false;
};

/// Integer tick band on which a limit order of `side` is deposited for mid `m`:
/// {ceil(m - D) .. floor(m)} for buys and {ceil(m) .. floor(m + D)} for sells.
struct TickBand {
  Price lo;
  Price hi;
};

inline TickBand deposition_band(Side side, double mid, Price depth) {
  const double d = static_cast<double>(depth);
  if (side == Side::buy) return {static_cast<Price>(std::ceil(mid - d)), static_cast<Price>(std::floor(mid))};
  return {static_cast<Price>(std::ceil(mid)), static_cast<Price>(std::floor(mid + d))};
}

class FlowEngine {
 public:
  explicit FlowEngine(FlowConfig config) : config_(config), rng_(config.seed), mid_(static_cast<double>(config.initial_price)) {
    config_.validate();
  }

  /// Engine continuing from an existing book; the mid is taken from it.
  FlowEngine(FlowConfig config, OrderBook book) : FlowEngine(config) {
    book_ = std::move(book);
    next_id_ = 1;
    for (Side side : {Side::buy, Side::sell})
      for (Price p : book_.occupied_prices(side))
        for (const auto& o : book_.level_orders(side, p)) next_id_ = std::max(next_id_, o.id + 1);
    if (!book_.two_sided()) throw ConfigError("initial book must be two-sided");
    refresh_mid();
  }

  const FlowConfig& config() const noexcept { return config_; }
  const OrderBook& book() const noexcept { return book_; }
  std::uint64_t now() const noexcept { return t_; }
  double last_mid() const noexcept { return mid_; }

  /// Runs the configured number of warm-up steps from an empty book. The
  /// leading `warmup_fill` share of them, and any step taken while the book
  /// is still one-sided, only deposit limit orders.
  void warm_up() {
    const auto fill = static_cast<std::uint64_t>(config_.warmup_fill * static_cast<double>(config_.warmup_steps));
    for (std::uint64_t i = 0; i < config_.warmup_steps; ++i) {
      if (i < fill || !book_.two_sided())
        deposit(coin() ? Side::buy : Side::sell);
      else
        step();
    }
  }

  StepRecord step() {
    const double u = unit_(rng_);
    const Side side = coin() ? Side::buy : Side::sell;
    Action action = Action::skip;
    if (u < config_.p_lo) {
      deposit(side);
      action = side == Side::buy ? Action::lo_buy : Action::lo_sell;
    } else if (u < config_.p_lo + config_.p_mo) {
      if (!book_.empty(opposite(side))) {
        book_.execute_market(side, 1);
        action = side == Side::buy ? Action::mo_buy : Action::mo_sell;
      }
    } else {
      if (!book_.empty(side)) {
        book_.cancel_uniform(side, rng_);
        action = side == Side::buy ? Action::c_buy : Action::c_sell;
      }
    }
    return record(action);
  }

  /// Clears [b - J, b] on the bid side (drop) or [a, a + J] on the ask side
  /// (rise). When the band held the whole side, the far edge of the band
  /// (b - J or a + J) stands in for the missing best price until the side
  /// refills, so the reference mid still moves by J/2.
  ShockReport inject_shock(ShockDirection direction, Price depth) {
    if (depth < 1) throw ConfigError("shock depth must be >= 1");
    const Side side = direction == ShockDirection::drop ? Side::buy : Side::sell;
    const auto top = book_.best(side);
    if (!top) throw BookError(BookError::Code::empty_side, "shock on an empty side");
    ShockReport report;
    report.direction = direction;
    report.mid_before = mid_;
    const Price edge = side == Side::buy ? *top - depth : *top + depth;
    const auto removed = side == Side::buy ? book_.clear_band(side, edge, *top) : book_.clear_band(side, *top, edge);
    report.orders_removed = removed.size();
    report.side_emptied = book_.empty(side);
    if (report.side_emptied) edge_ = Edge{side, edge};
    refresh_mid();
    report.mid_after = mid_;
    return report;
  }

  /// Record of the current state tagged with an action, without advancing time.
  StepRecord snapshot(Action action) const {
    StepRecord r;
    r.t = t_;
    r.action = action;
    r.mid = mid_;
    if (book_.two_sided()) r.stats = book_.stats();
    return r;
  }

  /// Records a shock as its own event-time step.
  StepRecord shock_step(ShockDirection direction, ShockReport* report = nullptr) {
    const auto rep = inject_shock(direction, config_.shock_depth);
    if (report) *report = rep;
    return record(Action::shock);
  }

  std::mt19937_64& rng() noexcept { return rng_; }

  /// Limit price for `side` drawn uniformly from the band around the current mid.
  Price draw_price(Side side) {
    const auto band = deposition_band(side, mid_, config_.depth);
    std::uniform_int_distribution<Price> tick(band.lo, band.hi);
    return tick(rng_);
  }

 private:
  bool coin() { return (rng_() >> 63) != 0; }

  void deposit(Side side) {
    book_.insert_limit(side, draw_price(side), 1, next_id_++);
    refresh_mid();
  }

  // Mid of the two bests; while a shock-emptied side is refilling, its band
  // edge replaces the missing best. Otherwise a one-sided book keeps the
  // last valid mid.
  void refresh_mid() {
    if (book_.two_sided()) {
      edge_.reset();
      mid_ = 0.5 * static_cast<double>(*book_.best_bid() + *book_.best_ask());
      return;
    }
    if (edge_ && book_.empty(edge_->side)) {
      if (const auto other = book_.best(opposite(edge_->side))) mid_ = 0.5 * static_cast<double>(edge_->price + *other);
    }
  }

  StepRecord record(Action action) {
    refresh_mid();
    ++t_;
    return snapshot(action);
  }

  FlowConfig config_;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  struct Edge {
    Side side;
    Price price;
  };

  OrderBook book_;
  std::optional<Edge> edge_;
  double mid_;
  std::uint64_t t_ = 0;
  OrderId next_id_ = 1;
};

/// Per-step observables of the model, in ticks or counts.
enum class ModelObservable : std::uint8_t {
  spread,
  volatility,  // |m_t - m_{t-1}|
  gap1_bid,
  gap1_ask,
  n_bid,
  n_ask,
  imbalance_buy,
  imbalance_sell,
  rate_limit,  // indicator of the action type; averages to a rate
  rate_market,
  rate_cancel,
};

inline constexpr std::size_t model_observable_count = 11;

inline constexpr std::array<std::string_view, model_observable_count> model_observable_names = {
    "spread", "volatility", "gap1_bid", "gap1_ask", "n_bid", "n_ask", "imbalance_buy", "imbalance_sell", "rate_limit", "rate_market", "rate_cancel"};

inline std::optional<ModelObservable> parse_model_observable(std::string_view name) {
  for (std::size_t i = 0; i < model_observable_count; ++i)
    if (model_observable_names[i] == name) return static_cast<ModelObservable>(i);
  return std::nullopt;
}

using ObservableValues = std::array<double, model_observable_count>;

/// Observable values of one record; NaN where undefined. `prev_mid` is the
/// mid of the preceding step, NaN when unknown.
inline ObservableValues observe(const StepRecord& r, double prev_mid) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  ObservableValues v;
  v.fill(nan);
  auto put = [&v](ModelObservable o, double x) { v[static_cast<std::size_t>(o)] = x; };
  put(ModelObservable::volatility, std::abs(r.mid - prev_mid));
  if (r.stats) {
    const BookStats& s = *r.stats;
    put(ModelObservable::spread, static_cast<double>(s.spread_ticks));
    if (s.gap1_bid) put(ModelObservable::gap1_bid, static_cast<double>(*s.gap1_bid));
    if (s.gap1_ask) put(ModelObservable::gap1_ask, static_cast<double>(*s.gap1_ask));
    put(ModelObservable::n_bid, static_cast<double>(s.n_bid_orders));
    put(ModelObservable::n_ask, static_cast<double>(s.n_ask_orders));
    put(ModelObservable::imbalance_buy, s.imbalance_buy);
    put(ModelObservable::imbalance_sell, s.imbalance_sell);
  }
  const bool lo = r.action == Action::lo_buy || r.action == Action::lo_sell;
  const bool mo = r.action == Action::mo_buy || r.action == Action::mo_sell;
  const bool c = r.action == Action::c_buy || r.action == Action::c_sell;
  if (lo || mo || c) {
    put(ModelObservable::rate_limit, lo ? 1.0 : 0.0);
    put(ModelObservable::rate_market, mo ? 1.0 : 0.0);
    put(ModelObservable::rate_cancel, c ? 1.0 : 0.0);
  }
  return v;
}

/// Running sum / count of one observable.
struct Accumulator {
  double sum = 0.0;
  std::uint64_t n = 0;

  void add(double x) {
    if (std::isnan(x)) return;
    sum += x;
    ++n;
  }
  double mean() const { return n ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN(); }
};

/// Long-run means of every model observable over the accumulated steps.
struct Baseline {
  std::array<Accumulator, model_observable_count> obs{};
  Accumulator spread_sq;  // second moment of the spread
  Accumulator orders;     // resident order count, every step

  void add(const StepRecord& r, double prev_mid, std::size_t order_count) {
    const auto v = observe(r, prev_mid);
    for (std::size_t i = 0; i < model_observable_count; ++i) obs[i].add(v[i]);
    const double s = v[static_cast<std::size_t>(ModelObservable::spread)];
    if (!std::isnan(s)) spread_sq.add(s * s);
    orders.add(static_cast<double>(order_count));
  }

  const Accumulator& operator[](ModelObservable o) const { return obs[static_cast<std::size_t>(o)]; }
  Accumulator& operator[](ModelObservable o) { return obs[static_cast<std::size_t>(o)]; }

  double mean(ModelObservable o) const { return (*this)[o].mean(); }
  double mean_spread() const { return mean(ModelObservable::spread); }
  double mean_spread_sq() const { return spread_sq.mean(); }
  double mean_volatility() const { return mean(ModelObservable::volatility); }
  /// First gap pooled over both sides.
  double mean_gap1() const {
    const auto& b = (*this)[ModelObservable::gap1_bid];
    const auto& a = (*this)[ModelObservable::gap1_ask];
    return (a.n + b.n) ? (a.sum + b.sum) / static_cast<double>(a.n + b.n) : std::numeric_limits<double>::quiet_NaN();
  }
  double mean_orders() const { return orders.mean(); }
  std::uint64_t steps() const { return orders.n; }

  /// Sums of independent runs; order of merging does not matter.
  void merge(const Baseline& o) {
    for (std::size_t i = 0; i < model_observable_count; ++i) {
      obs[i].sum += o.obs[i].sum;
      obs[i].n += o.obs[i].n;
    }
    spread_sq.sum += o.spread_sq.sum;
    spread_sq.n += o.spread_sq.n;
    orders.sum += o.orders.sum;
    orders.n += o.orders.n;
  }
};

/// One shock with the records around it. `records[i]` sits at relative
/// time `i - pre_window`; the shock itself is the record at relative time 0.
struct ShockWindow {
  std::size_t run_id = 0;
  std::size_t event_id = 0;
  ShockReport report;
  std::uint64_t pre_window = 0;
  std::vector<StepRecord> records;

  std::int64_t rel_t(std::size_t i) const { return static_cast<std::int64_t>(i) - static_cast<std::int64_t>(pre_window); }
};

struct ExperimentResult {
  std::vector<ShockWindow> windows;
  Baseline baseline;
  std::size_t skipped_shocks = 0;  // targeted side was empty at shock time
  std::vector<double> order_count_trace;  // resident orders, sampled every trace_stride steps
  std::uint64_t trace_stride = 0;
};

/// Warm-up followed by `total_steps` measured steps. Shock k is injected at
/// measured step k / f + pre_window, so every window fits inside its own
/// period; baseline means come from steps outside every post-shock window.
inline ExperimentResult run_experiment(const FlowConfig& config, std::uint64_t trace_stride = 0) {
  FlowEngine engine(config);
  engine.warm_up();

  ExperimentResult result;
  result.trace_stride = trace_stride;
  const std::uint64_t period = config.shock_period();
  const std::uint64_t pre = config.pre_window;
  const std::uint64_t post = config.post_window;

  std::optional<ShockWindow> open;
  std::uint64_t post_end = 0;
  double prev_mid = engine.last_mid();
  std::deque<StepRecord> history;
  ShockDirection next_direction = ShockDirection::drop;

  for (std::uint64_t s = 0; s < config.total_steps; ++s) {
    const bool shock_due = period != 0 && s % period == pre && s + post < config.total_steps;
    StepRecord rec;
    bool shocked = false;
    if (shock_due) {
      ShockDirection dir = next_direction;
      if (config.schedule == ShockSchedule::random) dir = (engine.rng()() >> 63) ? ShockDirection::drop : ShockDirection::rise;
      next_direction = dir == ShockDirection::drop ? ShockDirection::rise : ShockDirection::drop;
      if (engine.book().empty(dir == ShockDirection::drop ? Side::buy : Side::sell)) {
        ++result.skipped_shocks;
      } else {
        ShockWindow w;
        w.event_id = result.windows.size();
        w.pre_window = history.size();
        for (const auto& r : history) w.records.push_back(r);
        rec = engine.shock_step(dir, &w.report);
        w.records.push_back(rec);
        open = std::move(w);
        post_end = s + post;
        shocked = true;
      }
    }
    if (!shocked) rec = engine.step();

    if (!open) result.baseline.add(rec, prev_mid, engine.book().order_count());
    if (open) {
      if (!shocked) open->records.push_back(rec);
      if (s == post_end) {
        result.windows.push_back(std::move(*open));
        open.reset();
      }
    }

    if (pre > 0) {
      if (history.size() == pre) history.pop_front();
      history.push_back(rec);
    }
    if (trace_stride && s % trace_stride == 0) result.order_count_trace.push_back(static_cast<double>(engine.book().order_count()));
    prev_mid = rec.mid;
  }
  return result;
}

/// |m_t - m_{t-1}| in ticks for consecutive records.
inline std::vector<double> model_volatility(const std::vector<StepRecord>& records) {
  std::vector<double> out;
  if (records.size() < 2) return out;
  out.reserve(records.size() - 1);
  for (std::size_t i = 1; i < records.size(); ++i) out.push_back(std::abs(records[i].mid - records[i - 1].mid));
  return out;
}

/// Seed of run `i` in an ensemble; a single run uses the base seed itself.
inline std::uint64_t derive_seed(std::uint64_t base, std::size_t i, std::size_t runs) {
  if (runs == 1) return base;
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(i) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Independent runs with derived seeds on up to `threads` workers. Windows
/// are concatenated in run order and baselines summed, so the result does
/// not depend on the thread count.
inline ExperimentResult run_ensemble(const FlowConfig& config, std::size_t runs, std::size_t threads = 1) {
  if (runs == 0) throw ConfigError("runs must be >= 1");
  config.validate();
  std::vector<ExperimentResult> parts(runs);
  auto work = [&](std::size_t i) {
    FlowConfig c = config;
    c.seed = derive_seed(config.seed, i, runs);
    parts[i] = run_experiment(c);
    for (auto& w : parts[i].windows) w.run_id = i;
  };
  threads = std::max<std::size_t>(1, std::min(threads, runs));
  if (threads == 1) {
    for (std::size_t i = 0; i < runs; ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex guard;
    std::size_t next = 0;
    for (std::size_t k = 0; k < threads; ++k)
      pool.emplace_back([&] {
        while (true) {
          std::size_t i;
          {
            std::lock_guard lock(guard);
            if (next == runs || failure) return;
            i = next++;
          }
          try {
            work(i);
          } catch (...) {
            std::lock_guard lock(guard);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }
  ExperimentResult all;
  for (auto& p : parts) {
    for (auto& w : p.windows) all.windows.push_back(std::move(w));
    all.baseline.merge(p.baseline);
    all.skipped_shocks += p.skipped_shocks;
  }
  return all;
}

}  // namespace lobrelax
