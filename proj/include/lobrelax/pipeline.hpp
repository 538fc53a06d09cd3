#pragma once

// End-to-end analysis steps shared by the command-line tool and the tests.

#include <string>
#include <vector>

#include "lobrelax/config.hpp"
#include "lobrelax/events.hpp"
#include "lobrelax/extract.hpp"
#include "lobrelax/meanfield.hpp"
#include "lobrelax/orderlog.hpp"
#include "lobrelax/report.hpp"
#include "lobrelax/ziflow.hpp"

namespace lobrelax {

inline const std::vector<std::string> default_model_observables = {"spread", "volatility"};
inline const std::vector<std::string> default_empirical_observables = {"volatility",      "log_spread",       "limit_count_buy",
                                                                      "limit_count_sell", "cancel_count_buy", "cancel_count_sell"};

class UnknownObservable : public ConfigError {
 public:
  explicit UnknownObservable(const std::string& name) : ConfigError("unknown observable '" + name + "'") {}
};

/// Relaxation curves and fits of model observables over shock windows.
inline std::vector<CurveResult> model_curves(const std::vector<ShockWindow>& windows, const Baseline& baseline, const std::vector<std::string>& names,
                                              const RelaxConfig& c) {
  std::vector<CurveResult> out;
  for (const auto& name : names) {
    const auto o = parse_model_observable(name);
    if (!o) throw UnknownObservable(name);
    const auto values = relax::model_values(windows, *o);
    out.push_back(analyze(relax::model_ratio(windows, baseline, *o), values, relax::constant_baseline(values, baseline.mean(*o)), c));
  }
  return out;
}

/// One instrument's data: transaction prices plus per-minute observables.
struct InstrumentData {
  events::MinuteSeries prices;
  std::vector<events::ObservableSeries> observables;

  const events::ObservableSeries* find(const std::string& label) const {
    for (const auto& o : observables)
      if (o.label == label) return &o;
    return nullptr;
  }
};

inline InstrumentData from_replay(orderlog::Replay r) {
  InstrumentData d;
  d.prices = std::move(r.prices);
  for (auto& o : r.observables) d.observables.push_back(std::move(o));
  return d;
}

/// Minute bars alone support only the transaction-price volatility.
inline InstrumentData from_bars(events::MinuteSeries s) {
  InstrumentData d;
  d.observables.push_back(events::volatility_observable(s));
  d.prices = std::move(s);
  return d;
}

inline std::vector<events::DetectedEvent> detect_all(const std::vector<InstrumentData>& data, const events::DetectConfig& c) {
  std::vector<events::DetectedEvent> out;
  for (const auto& d : data) {
    auto found = events::detect_events(d.prices, c);
    out.insert(out.end(), found.begin(), found.end());
  }
  return out;
}

/// Relaxation curves of empirical observables around the given events.
inline std::vector<CurveResult> empirical_curves(const std::vector<events::DetectedEvent>& evs, const std::vector<InstrumentData>& data,
                                                  const std::vector<std::string>& names, const events::AlignConfig& a, const RelaxConfig& c) {
  std::vector<CurveResult> out;
  for (const auto& name : names) {
    if (!orderlog::parse_observable(name)) throw UnknownObservable(name);
    events::AlignedWindows all;
    bool first = true;
    for (const auto& d : data) {
      std::vector<events::DetectedEvent> mine;
      for (const auto& e : evs)
        if (e.instrument == d.prices.instrument) mine.push_back(e);
      if (mine.empty()) continue;
      const auto* obs = d.find(name);
      if (!obs) throw DataError("observable " + name + " is not available for " + d.prices.instrument + " from minute bars");
      auto w = events::align_windows(mine, d.prices, *obs, a);
      if (first) {
        all = std::move(w);
        first = false;
        continue;
      }
      for (auto& r : w.ratio.rows) all.ratio.rows.push_back(std::move(r));
      for (auto& r : w.values.rows) all.values.rows.push_back(std::move(r));
      for (auto& r : w.baselines.rows) all.baselines.rows.push_back(std::move(r));
    }
    if (first) throw relax::EmptyEnsemble();
    out.push_back(analyze(all.ratio, all.values, all.baselines, c));
  }
  return out;
}

inline meanfield::Params meanfield_params(const Settings& s, double sigma) {
  meanfield::Params p;
  p.depth = static_cast<double>(s.flow.depth);
  p.p_lo = s.flow.p_lo;
  p.p_mo = s.flow.p_mo;
  p.p_c = s.flow.p_c;
  p.sigma = sigma;
  p.spread0 = s.meanfield.spread0 > 0 ? s.meanfield.spread0 : sigma + static_cast<double>(s.flow.shock_depth);
  p.steps = s.meanfield.steps;
  return p;
}

}  // namespace lobrelax
