#pragma once

// Flat key = value settings grouped under [section] headers. Lines starting
// with '#' or ';' are comments. Every key has a default; unknown sections or
// keys are rejected.
//
//   [flow]      p_lo p_mo p_c depth shock_depth shock_frequency warmup_steps
//               warmup_fill total_steps seed initial_price pre_window
//               post_window schedule(alternating|random)
//   [run]       runs threads
//   [session]   open_minute close_minute
//   [detect]    abs_thresh rel_mult max_window skip_open skip_close suppress
//               history_days max_lookback
//   [align]     pre post
//   [relax]     fit_lo fit_hi log_bins bins_per_decade aggregation
//               (mean_of_ratios|ratio_of_means) bootstrap bootstrap_seed
//   [meanfield] sigma(0 = from baseline) spread0(0 = sigma + J) gap0(nan =
//               stationary) steps horizon far_step

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "lobrelax/csv.hpp"
#include "lobrelax/error.hpp"
#include "lobrelax/events.hpp"
#include "lobrelax/relax.hpp"
#include "lobrelax/ziflow.hpp"

namespace lobrelax {

enum class Aggregation : std::uint8_t { mean_of_ratios, ratio_of_means };

struct RunConfig {
  std::size_t runs = 1;
  std::size_t threads = 1;
};

struct RelaxConfig {
  std::int64_t fit_lo = 1;
  std::int64_t fit_hi = 100;
  relax::FitOptions fit;
  Aggregation aggregation = Aggregation::mean_of_ratios;
  std::size_t bootstrap = 0;  // resamples; 0 = regression standard error
  std::uint64_t bootstrap_seed = 1;
};

struct MeanFieldConfig {
  double sigma = 0.0;
  double spread0 = 0.0;
  double gap0 = std::numeric_limits<double>::quiet_NaN();
  std::size_t steps = 1000;
  std::size_t horizon = 50;
  std::size_t far_step = 1000;
};

struct Settings {
  FlowConfig flow;
  RunConfig run;
  events::SessionConfig session;
  events::DetectConfig detect;
  events::AlignConfig align;
  RelaxConfig relax;
  MeanFieldConfig meanfield;

  /// Every key with its effective value, in a fixed order.
  std::vector<std::pair<std::string, std::string>> entries() const {
    std::vector<std::pair<std::string, std::string>> out;
    const_cast<Settings*>(this)->visit([&](const std::string& key, Field& f) { out.emplace_back(key, f.get()); });
    return out;
  }

  void set(const std::string& key, const std::string& value) {
    bool found = false;
    visit([&](const std::string& k, Field& f) {
      if (k != key) return;
      found = true;
      try {
        f.set(value);
      } catch (const DataError&) {
        throw ConfigError("bad value '" + value + "' for " + key);
      }
    });
    if (!found) throw ConfigError("unknown key " + key);
  }

  void validate() const {
    flow.validate();
    detect.validate();
    if (run.runs < 1 || run.threads < 1) throw ConfigError("runs and threads must be >= 1");
    if (session.open_minute < 0 || session.close_minute >= events::minutes_per_day || session.close_minute <= session.open_minute)
      throw ConfigError("session must satisfy 0 <= open_minute < close_minute < 1440");
    if (align.pre < 0 || align.post < 1) throw ConfigError("align pre must be >= 0 and post >= 1");
    if (relax.fit_lo < 1 || relax.fit_hi <= relax.fit_lo) throw ConfigError("fit window must satisfy 1 <= fit_lo < fit_hi");
    if (!(relax.fit.bins_per_decade > 0)) throw ConfigError("bins_per_decade must be positive");
    if (meanfield.sigma < 0 || meanfield.spread0 < 0) throw ConfigError("meanfield sigma and spread0 must be >= 0");
    if (meanfield.horizon < 1 || meanfield.horizon > meanfield.steps || meanfield.far_step > meanfield.steps)
      throw ConfigError("meanfield horizon and far_step must not exceed steps");
  }

 private:
  struct Field {
    std::function<std::string()> get;
    std::function<void(const std::string&)> set;
  };

  template <class T>
  static Field number(T& v) {
    return {[&v] {
              if constexpr (std::is_floating_point_v<T>) return std::isnan(v) ? std::string("nan") : csv::format(v);
              else return std::to_string(v);
            },
            [&v](const std::string& s) {
              if constexpr (std::is_floating_point_v<T>) {
                if (s == "nan") {
                  v = std::numeric_limits<T>::quiet_NaN();
                  return;
                }
                // allow 1/5e4 style reciprocals
                if (const auto slash = s.find('/'); slash != std::string::npos) {
                  const double num = csv::parse_double(csv::trim(std::string_view(s).substr(0, slash)), "numerator");
                  const double den = csv::parse_double(csv::trim(std::string_view(s).substr(slash + 1)), "denominator");
                  if (den == 0) throw DataError("zero denominator");
                  v = static_cast<T>(num / den);
                  return;
                }
              }
              v = csv::parse_number<T>(s, "value");
            }};
  }

  static Field flag(bool& v) {
    return {[&v] { return std::string(v ? "true" : "false"); },
            [&v](const std::string& s) {
              if (s == "true" || s == "1") v = true;
              else if (s == "false" || s == "0") v = false;
              else throw DataError("not a boolean");
            }};
  }

  template <class E>
  static Field choice(E& v, std::vector<std::pair<std::string, E>> names) {
    return {[&v, names] {
              for (const auto& [n, e] : names)
                if (e == v) return n;
              return std::string("?");
            },
            [&v, names](const std::string& s) {
              for (const auto& [n, e] : names)
                if (n == s) {
                  v = e;
                  return;
                }
              throw DataError("unknown choice");
            }};
  }

  template <class F>
  void visit(F&& f) {
    auto go = [&](const char* key, Field field) { f(key, field); };
    go("flow.p_lo", number(flow.p_lo));
    go("flow.p_mo", number(flow.p_mo));
    go("flow.p_c", number(flow.p_c));
    go("flow.depth", number(flow.depth));
    go("flow.shock_depth", number(flow.shock_depth));
    go("flow.shock_frequency", number(flow.shock_frequency));
    go("flow.warmup_steps", number(flow.warmup_steps));
    go("flow.warmup_fill", number(flow.warmup_fill));
    go("flow.total_steps", number(flow.total_steps));
    go("flow.seed", number(flow.seed));
    go("flow.initial_price", number(flow.initial_price));
    go("flow.pre_window", number(flow.pre_window));
    go("flow.post_window", number(flow.post_window));
    go("flow.schedule", choice(flow.schedule, {{"alternating", ShockSchedule::alternating}, {"random", ShockSchedule::random}}));
    go("run.runs", number(run.runs));
    go("run.threads", number(run.threads));
    go("session.open_minute", number(session.open_minute));
    go("session.close_minute", number(session.close_minute));
    go("detect.abs_thresh", number(detect.abs_thresh));
    go("detect.rel_mult", number(detect.rel_mult));
    go("detect.max_window", number(detect.max_window));
    go("detect.skip_open", number(detect.skip_open));
    go("detect.skip_close", number(detect.skip_close));
    go("detect.suppress", number(detect.suppress));
    go("detect.history_days", number(detect.history.days));
    go("detect.max_lookback", number(detect.history.max_lookback));
    go("align.pre", number(align.pre));
    go("align.post", number(align.post));
    go("relax.fit_lo", number(relax.fit_lo));
    go("relax.fit_hi", number(relax.fit_hi));
    go("relax.log_bins", flag(relax.fit.log_bins));
    go("relax.bins_per_decade", number(relax.fit.bins_per_decade));
    go("relax.aggregation",
       choice(relax.aggregation, {{"mean_of_ratios", Aggregation::mean_of_ratios}, {"ratio_of_means", Aggregation::ratio_of_means}}));
    go("relax.bootstrap", number(relax.bootstrap));
    go("relax.bootstrap_seed", number(relax.bootstrap_seed));
    go("meanfield.sigma", number(meanfield.sigma));
    go("meanfield.spread0", number(meanfield.spread0));
    go("meanfield.gap0", number(meanfield.gap0));
    go("meanfield.steps", number(meanfield.steps));
    go("meanfield.horizon", number(meanfield.horizon));
    go("meanfield.far_step", number(meanfield.far_step));
  }
};

/// Applies a settings file on top of the defaults.
inline void parse_settings(std::istream& in, Settings& s) {
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = csv::trim(line);
    if (t.empty() || t.front() == '#' || t.front() == ';') continue;
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError(where + "unterminated section header");
      section = std::string(csv::trim(t.substr(1, t.size() - 2)));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected key = value");
    if (section.empty()) throw ConfigError(where + "key outside any section");
    const std::string key = section + "." + std::string(csv::trim(t.substr(0, eq)));
    std::string value(csv::trim(t.substr(eq + 1)));
    if (const auto hash = value.find(" #"); hash != std::string::npos) value = std::string(csv::trim(value.substr(0, hash)));
    try {
      s.set(key, value);
    } catch (const ConfigError& e) {
      std::string msg = e.what();
      if (msg.rfind("config: ", 0) == 0) msg.erase(0, 8);
      throw ConfigError(where + msg);
    }
  }
}

inline Settings load_settings(const std::string& path) {
  Settings s;
  if (path.empty()) return s;
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  parse_settings(in, s);
  return s;
}

inline std::string dump_settings(const Settings& s) {
  std::ostringstream out;
  std::string section;
  for (const auto& [key, value] : s.entries()) {
    const auto dot = key.find('.');
    if (key.substr(0, dot) != section) {
      if (!section.empty()) out << '\n';
      section = key.substr(0, dot);
      out << '[' << section << "]\n";
    }
    out << key.substr(dot + 1) << " = " << value << '\n';
  }
  return out.str();
}

}  // namespace lobrelax
