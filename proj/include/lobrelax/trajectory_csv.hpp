#pragma once

// Trajectory dump of shock windows and the baseline report written next to it.
//
// Trajectory columns:
//   run_id, event_id, rel_t, mid, spread_ticks, action, n_bid, n_ask, vbuy, vsell, g1_bid, g1_ask
// Stats of a one-sided book are written as empty fields.

#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "lobrelax/csv.hpp"
#include "lobrelax/ziflow.hpp"

namespace lobrelax {

inline constexpr std::string_view trajectory_header = "run_id,event_id,rel_t,mid,spread_ticks,action,n_bid,n_ask,vbuy,vsell,g1_bid,g1_ask";

inline void write_trajectories(std::ostream& out, const std::vector<ShockWindow>& windows) {
  out << trajectory_header << '\n';
  for (const auto& w : windows) {
    for (std::size_t i = 0; i < w.records.size(); ++i) {
      const StepRecord& r = w.records[i];
      out << w.run_id << ',' << w.event_id << ',' << w.rel_t(i) << ',' << csv::format(r.mid) << ',';
      if (r.stats) {
        const BookStats& s = *r.stats;
        out << s.spread_ticks << ',' << to_string(r.action) << ',' << s.n_bid_orders << ',' << s.n_ask_orders << ',' << s.buy_volume << ','
            << s.sell_volume << ',';
        if (s.gap1_bid) out << *s.gap1_bid;
        out << ',';
        if (s.gap1_ask) out << *s.gap1_ask;
      } else {
        out << ',' << to_string(r.action) << ",,,,,,";
      }
      out << '\n';
    }
  }
}

inline Action parse_action(std::string_view s) {
  for (Action a : {Action::lo_buy, Action::lo_sell, Action::mo_buy, Action::mo_sell, Action::c_buy, Action::c_sell, Action::skip, Action::shock})
    if (to_string(a) == s) return a;
  throw DataError("unknown action '" + std::string(s) + "'");
}

/// Rebuilds windows from a trajectory dump. Reconstructed stats carry the
/// dumped fields only; the second gaps are absent.
inline std::vector<ShockWindow> read_trajectories(std::istream& in) {
  const auto table = csv::read_table(in);
  csv::expect_header(table, {"run_id", "event_id", "rel_t", "mid", "spread_ticks", "action", "n_bid", "n_ask", "vbuy", "vsell", "g1_bid", "g1_ask"});
  std::vector<ShockWindow> windows;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> slot;
  for (const auto& row : table.rows) {
    const auto run = csv::parse_number<std::size_t>(row[0], "run_id");
    const auto event = csv::parse_number<std::size_t>(row[1], "event_id");
    const auto rel = csv::parse_number<std::int64_t>(row[2], "rel_t");
    auto [it, fresh] = slot.try_emplace({run, event}, windows.size());
    if (fresh) {
      ShockWindow w;
      w.run_id = run;
      w.event_id = event;
      if (rel > 0) throw DataError("window must start at or before the shock");
      w.pre_window = static_cast<std::uint64_t>(-rel);
      windows.push_back(std::move(w));
    }
    ShockWindow& w = windows[it->second];
    if (w.rel_t(w.records.size()) != rel) throw DataError("rel_t not contiguous in event " + std::to_string(event));

    StepRecord r;
    r.t = w.records.size();
    r.mid = csv::parse_double(row[3], "mid");
    r.action = parse_action(row[5]);
    if (!row[4].empty()) {
      BookStats s;
      s.spread_ticks = csv::parse_number<Price>(row[4], "spread_ticks");
      s.mid = r.mid;
      s.best_bid = static_cast<Price>(std::llround(r.mid - 0.5 * static_cast<double>(s.spread_ticks)));
      s.best_ask = s.best_bid + s.spread_ticks;
      s.log_spread = s.best_bid > 0 ? std::log(static_cast<double>(s.best_ask)) - std::log(static_cast<double>(s.best_bid)) : std::nan("");
      s.n_bid_orders = csv::parse_number<std::size_t>(row[6], "n_bid");
      s.n_ask_orders = csv::parse_number<std::size_t>(row[7], "n_ask");
      s.buy_volume = csv::parse_number<Volume>(row[8], "vbuy");
      s.sell_volume = csv::parse_number<Volume>(row[9], "vsell");
      const double total = static_cast<double>(s.buy_volume + s.sell_volume);
      s.imbalance_buy = static_cast<double>(s.buy_volume) / total;
      s.imbalance_sell = static_cast<double>(s.sell_volume) / total;
      if (!row[10].empty()) s.gap1_bid = csv::parse_number<Price>(row[10], "g1_bid");
      if (!row[11].empty()) s.gap1_ask = csv::parse_number<Price>(row[11], "g1_ask");
      r.stats = s;
    }
    if (r.action == Action::shock && rel != 0) throw DataError("shock record away from rel_t 0");
    w.records.push_back(std::move(r));
  }
  return windows;
}

/// Baseline report: one `key,value` line per quantity.
inline void write_baseline(std::ostream& out, const Baseline& b) {
  out << "key,sum,count\n";
  for (std::size_t i = 0; i < model_observable_count; ++i)
    out << model_observable_names[i] << ',' << csv::format(b.obs[i].sum) << ',' << b.obs[i].n << '\n';
  out << "spread_sq," << csv::format(b.spread_sq.sum) << ',' << b.spread_sq.n << '\n';
  out << "orders," << csv::format(b.orders.sum) << ',' << b.orders.n << '\n';
}

inline Baseline read_baseline(std::istream& in) {
  const auto table = csv::read_table(in);
  csv::expect_header(table, {"key", "sum", "count"});
  Baseline b;
  for (const auto& row : table.rows) {
    Accumulator acc{csv::parse_double(row[1], "sum"), csv::parse_number<std::uint64_t>(row[2], "count")};
    if (row[0] == "spread_sq") b.spread_sq = acc;
    else if (row[0] == "orders") b.orders = acc;
    else if (auto o = parse_model_observable(row[0])) b[*o] = acc;
    else throw DataError("unknown baseline key '" + row[0] + "'");
  }
  return b;
}

}  // namespace lobrelax
