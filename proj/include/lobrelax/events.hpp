#pragma once

// Large intraday price changes in minute-resolution transaction prices.
//
// A window [t1, t2] of at most max_window minutes qualifies when the log-price
// change over it passes an absolute threshold and exceeds rel_mult times the
// summed normal volatility of the minutes (t1, t2]. Normal volatility at a
// minute of day is the mean absolute one-minute log return at that minute
// over the 60 preceding trading days. An event is localized at the earliest
// qualifying end minute, with the shortest window among those ending there.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "lobrelax/csv.hpp"
#include "lobrelax/error.hpp"
#include "lobrelax/relax.hpp"

namespace lobrelax::events {

inline constexpr int minutes_per_day = 1440;
inline constexpr double nan = std::numeric_limits<double>::quiet_NaN();

/// Days since 1970-01-01 of a proleptic Gregorian date.
constexpr std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) noexcept {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

/// Parses YYYY-MM-DD into a day number.
inline std::int64_t parse_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') throw DataError("bad date '" + std::string(s) + "', want YYYY-MM-DD");
  const auto y = csv::parse_number<int>(s.substr(0, 4), "year");
  const auto m = csv::parse_number<unsigned>(s.substr(5, 2), "month");
  const auto d = csv::parse_number<unsigned>(s.substr(8, 2), "day");
  if (m < 1 || m > 12 || d < 1 || d > 31) throw DataError("bad date '" + std::string(s) + "'");
  return days_from_civil(y, m, d);
}

struct TradingDay {
  std::string date;  // YYYY-MM-DD
  std::int64_t day_number = 0;
  int open_minute = 480;
  int close_minute = 990;
  std::vector<std::pair<int, double>> prices;  // (minute of day, log price), minutes increasing
};

struct MinuteSeries {
  std::string instrument;
  std::vector<TradingDay> days;  // increasing dates

  void validate() const {
    for (std::size_t d = 0; d < days.size(); ++d) {
      const auto& day = days[d];
      if (d && day.day_number <= days[d - 1].day_number) throw DataError(instrument + ": trading days out of order at " + day.date);
      if (day.open_minute < 0 || day.close_minute >= minutes_per_day || day.close_minute <= day.open_minute)
        throw DataError(instrument + ": bad session on " + day.date);
      for (std::size_t i = 0; i < day.prices.size(); ++i) {
        if (!std::isfinite(day.prices[i].second)) throw DataError(instrument + ": non-finite log price on " + day.date);
        if (day.prices[i].first < 0 || day.prices[i].first >= minutes_per_day) throw DataError(instrument + ": minute out of range on " + day.date);
        if (i && day.prices[i].first <= day.prices[i - 1].first) throw DataError(instrument + ": minutes not increasing on " + day.date);
      }
    }
  }
};

/// Per-minute values of one day, indexed by minute of day; NaN where absent.
using DayValues = std::vector<double>;

/// Log price carried forward from the last transaction at or before each
/// minute of the session; NaN before the first one.
inline DayValues carried_log_prices(const TradingDay& day) {
  DayValues lp(minutes_per_day, nan);
  std::size_t k = 0;
  double last = nan;
  for (int m = 0; m < minutes_per_day; ++m) {
    while (k < day.prices.size() && day.prices[k].first <= m) last = day.prices[k++].second;
    if (m >= day.open_minute && m <= day.close_minute) lp[m] = last;
  }
  return lp;
}

/// One-minute log returns inside the session; minutes without a trade return 0.
inline DayValues minute_returns(const TradingDay& day) {
  const auto lp = carried_log_prices(day);
  DayValues r(minutes_per_day, nan);
  for (int m = day.open_minute + 1; m <= day.close_minute; ++m)
    if (!std::isnan(lp[m]) && !std::isnan(lp[m - 1])) r[m] = lp[m] - lp[m - 1];
  return r;
}

class InsufficientHistory : public DataError {
 public:
  explicit InsufficientHistory(const std::string& what) : DataError("insufficient history: " + what) {}
};

struct HistoryConfig {
  std::size_t days = 60;              // preceding trading days in a baseline
  std::int64_t max_lookback = 120;    // calendar days searched back
};

/// Indices of the baseline days for `day`: the most recent preceding days
/// holding at least one return, at most max_lookback calendar days back.
inline std::vector<std::size_t> history_days(const MinuteSeries& s, std::size_t day, const HistoryConfig& h = {}) {
  std::vector<std::size_t> out;
  for (std::size_t k = day; k-- > 0 && out.size() < h.days;) {
    if (s.days[day].day_number - s.days[k].day_number > h.max_lookback) break;
    const auto r = minute_returns(s.days[k]);
    if (std::any_of(r.begin(), r.end(), [](double x) { return !std::isnan(x); })) out.push_back(k);
  }
  if (out.size() < h.days)
    throw InsufficientHistory(s.instrument + " " + s.days[day].date + ": " + std::to_string(out.size()) + " of " + std::to_string(h.days) +
                              " baseline days");
  return out;
}

/// Mean of per-minute values over the given days, skipping absent entries;
/// NaN where no day contributes.
inline DayValues minute_mean(const std::vector<DayValues>& per_day, const std::vector<std::size_t>& which) {
  DayValues sum(minutes_per_day, 0.0);
  std::vector<std::size_t> n(minutes_per_day, 0);
  for (auto k : which)
    for (int m = 0; m < minutes_per_day; ++m)
      if (!std::isnan(per_day[k][m])) {
        sum[m] += per_day[k][m];
        ++n[m];
      }
  for (int m = 0; m < minutes_per_day; ++m) sum[m] = n[m] ? sum[m] / static_cast<double>(n[m]) : nan;
  return sum;
}

inline std::vector<DayValues> absolute_returns(const MinuteSeries& s) {
  std::vector<DayValues> out;
  out.reserve(s.days.size());
  for (const auto& d : s.days) {
    auto r = minute_returns(d);
    for (auto& x : r) x = std::abs(x);
    out.push_back(std::move(r));
  }
  return out;
}

using VolatilityProfile = DayValues;

/// Normal volatility per minute of day for `day`, from preceding days only.
inline VolatilityProfile build_profile(const MinuteSeries& s, std::size_t day, const HistoryConfig& h = {}) {
  return minute_mean(absolute_returns(s), history_days(s, day, h));
}

enum class Direction : std::uint8_t { up, down };

constexpr std::string_view to_string(Direction d) noexcept { return d == Direction::up ? "up" : "down"; }

struct DetectedEvent {
  std::string instrument;
  std::string date;
  std::size_t day_index = 0;
  int t0 = 0;  // minute of day at the window end
  Direction direction = Direction::up;
  int window_length = 0;
  double magnitude = 0.0;  // log-price change over the window

  bool operator==(const DetectedEvent&) const = default;
};

struct DetectConfig {
  double abs_thresh = 0.02;
  double rel_mult = 6.0;
  int max_window = 120;
  int skip_open = 5;
  int skip_close = 60;
  int suppress = 120;  // minutes after t0 in which no new event is reported
  HistoryConfig history;

  void validate() const {
    if (!(abs_thresh >= 0)) throw ConfigError("abs_thresh must be >= 0");
    if (!(rel_mult >= 0)) throw ConfigError("rel_mult must be >= 0");
    if (max_window < 1) throw ConfigError("max_window must be >= 1");
    if (skip_open < 0 || skip_close < 0) throw ConfigError("skip margins must be >= 0");
    if (suppress < 0) throw ConfigError("suppress must be >= 0");
    if (history.days < 1) throw ConfigError("history days must be >= 1");
  }
};

/// Events of one day given its normal-volatility profile.
inline std::vector<DetectedEvent> detect_day(const MinuteSeries& s, std::size_t day, const VolatilityProfile& profile, const DetectConfig& c) {
  const TradingDay& d = s.days[day];
  const auto lp = carried_log_prices(d);
  // prefix[m] = sum of profile over minutes < m
  std::vector<double> prefix(minutes_per_day + 1, 0.0);
  for (int m = 0; m < minutes_per_day; ++m) prefix[m + 1] = prefix[m] + (std::isnan(profile[m]) ? 0.0 : profile[m]);

  std::vector<DetectedEvent> out;
  const int lo = d.open_minute + c.skip_open;
  const int hi = d.close_minute - c.skip_close;
  for (int t2 = lo + 1; t2 <= hi; ++t2) {
    if (std::isnan(lp[t2])) continue;
    for (int len = 1; len <= c.max_window && t2 - len >= lo; ++len) {
      const int t1 = t2 - len;
      if (std::isnan(lp[t1])) break;  // earlier starts are undefined too
      const double change = lp[t2] - lp[t1];
      const double normal = prefix[t2 + 1] - prefix[t1 + 1];
      if (std::abs(change) >= c.abs_thresh && std::abs(change) >= c.rel_mult * normal) {
        out.push_back({s.instrument, d.date, day, t2, change > 0 ? Direction::up : Direction::down, len, change});
        break;
      }
    }
    if (!out.empty() && out.back().t0 == t2) t2 += c.suppress;
  }
  return out;
}

/// Events over every day with a full baseline history; earlier days are not
/// candidates.
inline std::vector<DetectedEvent> detect_events(const MinuteSeries& s, const DetectConfig& c = {}) {
  c.validate();
  s.validate();
  const auto absret = absolute_returns(s);
  std::vector<DetectedEvent> out;
  for (std::size_t day = 0; day < s.days.size(); ++day) {
    std::vector<std::size_t> hist;
    try {
      hist = history_days(s, day, c.history);
    } catch (const InsufficientHistory&) {
      continue;
    }
    const auto found = detect_day(s, day, minute_mean(absret, hist), c);
    out.insert(out.end(), found.begin(), found.end());
  }
  return out;
}

/// Per-minute values of one observable, one entry per day of a MinuteSeries.
struct ObservableSeries {
  std::string label;
  std::vector<DayValues> days;
};

/// |one-minute log return| of the carried transaction price.
inline ObservableSeries volatility_observable(const MinuteSeries& s) { return {"volatility", absolute_returns(s)}; }

struct AlignConfig {
  int pre = 60;
  int post = 120;
  HistoryConfig history;
};

struct AlignedWindows {
  relax::EventMatrix ratio;      // value / baseline
  relax::EventMatrix values;     // raw value
  relax::EventMatrix baselines;  // baseline at the same minute of day
};

/// Event-aligned values of `obs` normalized by their own mean over the
/// baseline days at the same minute of day. Entries outside the session,
/// absent values and zero baselines are absent.
inline AlignedWindows align_windows(const std::vector<DetectedEvent>& events, const MinuteSeries& s, const ObservableSeries& obs,
                                    const AlignConfig& a = {}) {
  if (obs.days.size() != s.days.size()) throw DataError("observable " + obs.label + " does not cover the series days");
  AlignedWindows w;
  std::vector<std::int64_t> grid;
  for (int t = -a.pre; t <= a.post; ++t) grid.push_back(t);
  w.ratio = {obs.label, grid, {}};
  w.values = {obs.label, grid, {}};
  w.baselines = {obs.label, grid, {}};
  for (const auto& e : events) {
    if (e.day_index >= s.days.size() || s.days[e.day_index].date != e.date) throw DataError("event day " + e.date + " not in series");
    const auto base = minute_mean(obs.days, history_days(s, e.day_index, a.history));
    const TradingDay& d = s.days[e.day_index];
    std::vector<double> r, v, b;
    for (auto t : grid) {
      const int m = e.t0 + static_cast<int>(t);
      double value = nan, baseline = nan;
      if (m >= d.open_minute && m <= d.close_minute) {
        value = obs.days[e.day_index][m];
        baseline = base[m];
      }
      const bool ok = !std::isnan(value) && !std::isnan(baseline) && baseline != 0.0;
      r.push_back(ok ? value / baseline : nan);
      v.push_back(ok ? value : nan);
      b.push_back(ok ? baseline : nan);
    }
    w.ratio.rows.push_back(std::move(r));
    w.values.rows.push_back(std::move(v));
    w.baselines.rows.push_back(std::move(b));
  }
  return w;
}

// ---- files ----

struct SessionConfig {
  int open_minute = 480;
  int close_minute = 990;
};

/// Minute-bar CSV `instrument,date,minute,price`; prices must be positive.
/// Returns one series per instrument in order of first appearance.
inline std::vector<MinuteSeries> read_minute_bars(std::istream& in, const SessionConfig& session = {}) {
  const auto table = csv::read_table(in);
  if (table.header.empty()) return {};
  csv::expect_header(table, {"instrument", "date", "minute", "price"});
  std::vector<MinuteSeries> out;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::string where = "line " + std::to_string(table.line_numbers[i]) + ": ";
    auto [it, fresh] = index.try_emplace(row[0], out.size());
    if (fresh) out.push_back({row[0], {}});
    MinuteSeries& s = out[it->second];
    const auto minute = csv::parse_number<int>(row[2], "minute");
    const double price = csv::parse_double(row[3], "price");
    if (!(price > 0)) throw DataError(where + "price must be positive");
    if (s.days.empty() || s.days.back().date != row[1]) {
      TradingDay d;
      d.date = row[1];
      d.day_number = parse_date(row[1]);
      d.open_minute = session.open_minute;
      d.close_minute = session.close_minute;
      if (!s.days.empty() && d.day_number <= s.days.back().day_number) throw DataError(where + "dates out of order for " + s.instrument);
      s.days.push_back(std::move(d));
    }
    auto& prices = s.days.back().prices;
    if (!prices.empty() && minute <= prices.back().first) throw DataError(where + "minutes not increasing");
    prices.emplace_back(minute, std::log(price));
  }
  for (const auto& s : out) s.validate();
  return out;
}

inline constexpr std::string_view catalog_header = "instrument,date,t0_minute,direction,window_len,magnitude";

inline void write_catalog(std::ostream& out, const std::vector<DetectedEvent>& events) {
  out << catalog_header << '\n';
  for (const auto& e : events)
    out << e.instrument << ',' << e.date << ',' << e.t0 << ',' << to_string(e.direction) << ',' << e.window_length << ','
        << csv::format(e.magnitude) << '\n';
}

/// Reads a catalog and resolves each event's day against the given series.
inline std::vector<DetectedEvent> read_catalog(std::istream& in, const std::vector<MinuteSeries>& series) {
  const auto table = csv::read_table(in);
  if (table.header.empty()) return {};
  csv::expect_header(table, {"instrument", "date", "t0_minute", "direction", "window_len", "magnitude"});
  std::vector<DetectedEvent> out;
  for (const auto& row : table.rows) {
    DetectedEvent e;
    e.instrument = row[0];
    e.date = row[1];
    e.t0 = csv::parse_number<int>(row[2], "t0_minute");
    if (row[3] == "up") e.direction = Direction::up;
    else if (row[3] == "down") e.direction = Direction::down;
    else throw DataError("bad direction '" + row[3] + "'");
    e.window_length = csv::parse_number<int>(row[4], "window_len");
    e.magnitude = csv::parse_double(row[5], "magnitude");
    bool found = false;
    for (const auto& s : series) {
      if (s.instrument != e.instrument) continue;
      for (std::size_t d = 0; d < s.days.size(); ++d)
        if (s.days[d].date == e.date) {
          e.day_index = d;
          found = true;
        }
    }
    if (!found) throw DataError("catalog event " + e.instrument + " " + e.date + " has no matching series day");
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace lobrelax::events
