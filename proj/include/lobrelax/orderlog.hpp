#pragma once

// Replay of a raw order log through the order book into per-minute observables.
//
// Log rows: timestamp,event_type,side,price,volume,order_id with event_type
// in {limit, market, cancel}, prices in integer ticks and timestamps as
// YYYY-MM-DD HH:MM:SS[.fff] (a 'T' separator is accepted). The book starts
// empty on every date. Sides name the order's own side: a market buy trades
// against the asks.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "lobrelax/csv.hpp"
#include "lobrelax/error.hpp"
#include "lobrelax/events.hpp"
#include "lobrelax/orderbook.hpp"

namespace lobrelax::orderlog {

enum class EventType : std::uint8_t { limit, market, cancel };

struct LogEvent {
  std::string date;
  double seconds = 0.0;  // since midnight
  EventType type = EventType::limit;
  Side side = Side::buy;
  Price price = 0;
  Volume volume = 1;
  OrderId id = 0;
};

struct Timestamp {
  std::string date;
  double seconds = 0.0;
};

inline Timestamp parse_timestamp(std::string_view s) {
  if (s.size() < 19 || (s[10] != ' ' && s[10] != 'T') || s[13] != ':' || s[16] != ':')
    throw DataError("bad timestamp '" + std::string(s) + "', want YYYY-MM-DD HH:MM:SS");
  Timestamp t;
  t.date = std::string(s.substr(0, 10));
  events::parse_date(t.date);
  const auto h = csv::parse_number<int>(s.substr(11, 2), "hour");
  const auto m = csv::parse_number<int>(s.substr(14, 2), "minute");
  const double sec = csv::parse_double(s.substr(17), "seconds");
  if (h < 0 || h > 23 || m < 0 || m > 59 || sec < 0 || sec >= 61) throw DataError("bad timestamp '" + std::string(s) + "'");
  t.seconds = 3600.0 * h + 60.0 * m + sec;
  return t;
}

inline std::string format_timestamp(const std::string& date, double seconds) {
  const auto whole = static_cast<int>(seconds);
  const int h = whole / 3600, m = whole / 60 % 60;
  const double sec = seconds - 60.0 * static_cast<double>(whole / 60);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s %02d:%02d:%06.3f", date.c_str(), h, m, sec);
  return buf;
}

inline std::vector<LogEvent> read_log(std::istream& in) {
  const auto table = csv::read_table(in);
  if (table.header.empty()) return {};
  csv::expect_header(table, {"timestamp", "event_type", "side", "price", "volume", "order_id"});
  std::vector<LogEvent> out;
  out.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::string where = "line " + std::to_string(table.line_numbers[i]) + ": ";
    try {
      LogEvent e;
      const auto ts = parse_timestamp(row[0]);
      e.date = ts.date;
      e.seconds = ts.seconds;
      if (row[1] == "limit") e.type = EventType::limit;
      else if (row[1] == "market") e.type = EventType::market;
      else if (row[1] == "cancel") e.type = EventType::cancel;
      else throw DataError("unknown event_type '" + row[1] + "'");
      if (row[2] == "buy") e.side = Side::buy;
      else if (row[2] == "sell") e.side = Side::sell;
      else throw DataError("unknown side '" + row[2] + "'");
      e.price = e.type == EventType::limit || !row[3].empty() ? csv::parse_number<Price>(row[3], "price") : 0;
      e.volume = csv::parse_number<Volume>(row[4], "volume");
      e.id = csv::parse_number<OrderId>(row[5], "order_id");
      out.push_back(std::move(e));
    } catch (const DataError& err) {
      std::string msg = err.what();
      if (msg.rfind("data: ", 0) == 0) msg.erase(0, 6);
      throw DataError(where + msg);
    }
  }
  return out;
}

inline void write_log(std::ostream& out, const std::vector<LogEvent>& log) {
  out << "timestamp,event_type,side,price,volume,order_id\n";
  for (const auto& e : log) {
    const char* type = e.type == EventType::limit ? "limit" : e.type == EventType::market ? "market" : "cancel";
    out << format_timestamp(e.date, e.seconds) << ',' << type << ',' << to_string(e.side) << ',' << e.price << ',' << e.volume << ',' << e.id << '\n';
  }
}

/// Per-minute observables derived from a log.
enum class Observable : std::uint8_t {
  volatility,  // |log m_t - log m_{t-1}| of end-of-minute mids
  log_spread,
  limit_count_buy,
  limit_count_sell,
  limit_volume_buy,
  limit_volume_sell,
  cancel_count_buy,
  cancel_count_sell,
  market_count_buy,
  market_count_sell,
  imbalance_buy,
  imbalance_sell,
  queue_buy,  // resting orders on the bid side
  queue_sell,
  rate_limit,  // share of all orders in the minute
  rate_market,
  rate_cancel,
};

inline constexpr std::size_t observable_count = 17;

inline constexpr std::array<std::string_view, observable_count> observable_names = {
    "volatility",       "log_spread",        "limit_count_buy",  "limit_count_sell", "limit_volume_buy", "limit_volume_sell",
    "cancel_count_buy", "cancel_count_sell", "market_count_buy", "market_count_sell", "imbalance_buy",    "imbalance_sell",
    "queue_buy",        "queue_sell",        "rate_limit",       "rate_market",       "rate_cancel"};

inline std::optional<Observable> parse_observable(std::string_view name) {
  for (std::size_t i = 0; i < observable_count; ++i)
    if (observable_names[i] == name) return static_cast<Observable>(i);
  return std::nullopt;
}

struct Replay {
  events::MinuteSeries prices;  // last trade price per minute
  std::array<events::ObservableSeries, observable_count> observables;

  const events::ObservableSeries& operator[](Observable o) const { return observables[static_cast<std::size_t>(o)]; }
};

/// Replays `log` (sorted by time) into minute bars and observables. Minutes
/// outside [open, close] are absent; counts are zero in quiet minutes and
/// book-state observables hold the end-of-minute state.
inline Replay replay(const std::string& instrument, const std::vector<LogEvent>& log, const events::SessionConfig& session = {}) {
  using events::DayValues;
  using events::minutes_per_day;
  Replay out;
  out.prices.instrument = instrument;
  for (std::size_t i = 0; i < observable_count; ++i) out.observables[i].label = std::string(observable_names[i]);

  auto put = [&](Observable o, int m, double v) { out.observables[static_cast<std::size_t>(o)].days.back()[m] = v; };

  std::size_t k = 0;
  while (k < log.size()) {
    const std::string date = log[k].date;
    events::TradingDay day;
    day.date = date;
    day.day_number = events::parse_date(date);
    day.open_minute = session.open_minute;
    day.close_minute = session.close_minute;
    if (!out.prices.days.empty() && day.day_number <= out.prices.days.back().day_number) throw DataError("order log dates out of order at " + date);
    for (auto& s : out.observables) s.days.emplace_back(minutes_per_day, events::nan);

    OrderBook book;
    std::array<std::array<double, minutes_per_day>, 6> counts{};  // limit b/s, limit vol b/s, cancel b/s
    std::array<std::array<double, minutes_per_day>, 2> markets{};
    std::map<int, double> last_trade;
    double prev_seconds = -1.0;
    double prev_mid = events::nan;

    for (int m = 0; m < minutes_per_day; ++m) {
      for (; k < log.size() && log[k].date == date && static_cast<int>(log[k].seconds / 60.0) <= m; ++k) {
        const LogEvent& e = log[k];
        if (e.seconds < prev_seconds) throw DataError("order log not sorted by time on " + date);
        prev_seconds = e.seconds;
        const auto s = static_cast<std::size_t>(e.side == Side::buy ? 0 : 1);
        try {
          switch (e.type) {
            case EventType::limit:
              book.insert_limit(e.side, e.price, e.volume, e.id);
              counts[s][m] += 1;
              counts[2 + s][m] += static_cast<double>(e.volume);
              break;
            case EventType::market: {
              const auto fills = book.execute_market(e.side, e.volume);
              if (!fills.empty()) last_trade[m] = static_cast<double>(fills.back().price);
              markets[s][m] += 1;
              break;
            }
            case EventType::cancel: {
              const auto removed = book.cancel_by_id(e.id);
              counts[4 + static_cast<std::size_t>(removed.side == Side::buy ? 0 : 1)][m] += 1;
              break;
            }
          }
        } catch (const BookError& err) {
          throw DataError(format_timestamp(date, e.seconds) + ": " + err.what());
        }
      }
      if (m < session.open_minute || m > session.close_minute) continue;

      put(Observable::limit_count_buy, m, counts[0][m]);
      put(Observable::limit_count_sell, m, counts[1][m]);
      put(Observable::limit_volume_buy, m, counts[2][m]);
      put(Observable::limit_volume_sell, m, counts[3][m]);
      put(Observable::cancel_count_buy, m, counts[4][m]);
      put(Observable::cancel_count_sell, m, counts[5][m]);
      put(Observable::market_count_buy, m, markets[0][m]);
      put(Observable::market_count_sell, m, markets[1][m]);
      const double limits = counts[0][m] + counts[1][m];
      const double cancels = counts[4][m] + counts[5][m];
      const double mos = markets[0][m] + markets[1][m];
      const double total = limits + cancels + mos;
      if (total > 0) {
        put(Observable::rate_limit, m, limits / total);
        put(Observable::rate_market, m, mos / total);
        put(Observable::rate_cancel, m, cancels / total);
      }
      put(Observable::queue_buy, m, static_cast<double>(book.order_count(Side::buy)));
      put(Observable::queue_sell, m, static_cast<double>(book.order_count(Side::sell)));
      const double vb = static_cast<double>(book.total_volume(Side::buy));
      const double vs = static_cast<double>(book.total_volume(Side::sell));
      if (vb + vs > 0) {
        put(Observable::imbalance_buy, m, vb / (vb + vs));
        put(Observable::imbalance_sell, m, vs / (vb + vs));
      }
      double mid = events::nan;
      if (book.two_sided()) {
        const auto st = book.stats();
        mid = st.mid;
        put(Observable::log_spread, m, st.log_spread);
      }
      if (!std::isnan(mid) && !std::isnan(prev_mid) && mid > 0 && prev_mid > 0) put(Observable::volatility, m, std::abs(std::log(mid) - std::log(prev_mid)));
      prev_mid = mid;
    }
    if (k < log.size() && log[k].date == date) throw DataError("order log not sorted by time on " + date);
    for (const auto& [m, p] : last_trade)
      if (p > 0) day.prices.emplace_back(m, std::log(p));
    out.prices.days.push_back(std::move(day));
  }
  return out;
}

}  // namespace lobrelax::orderlog
