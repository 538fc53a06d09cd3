#pragma once

// CSV outputs of the relaxation and mean-field analyses.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "lobrelax/config.hpp"
#include "lobrelax/csv.hpp"
#include "lobrelax/meanfield.hpp"
#include "lobrelax/relax.hpp"

namespace lobrelax {

struct CurveResult {
  relax::RelaxationCurve curve;
  relax::ExcessSeries excess;
  relax::PowerLawFit fit;
};

/// Aggregates one observable and fits its excess over the configured window.
/// `baselines` is needed only for ratio-of-means aggregation.
inline CurveResult analyze(const relax::EventMatrix& ratio, const relax::EventMatrix& values, const relax::EventMatrix& baselines,
                           const RelaxConfig& c) {
  CurveResult r;
  r.curve = c.aggregation == Aggregation::mean_of_ratios ? relax::aggregate(ratio) : relax::aggregate_ratio_of_means(values, baselines);
  r.excess = relax::excess(r.curve);
  if (c.bootstrap >= 2 && c.aggregation == Aggregation::mean_of_ratios)
    r.fit = relax::bootstrap_fit(ratio, c.fit_lo, c.fit_hi, c.bootstrap, c.bootstrap_seed, c.fit);
  else
    r.fit = relax::fit_power_law(r.excess, c.fit_lo, c.fit_hi, c.fit);
  return r;
}

inline void write_curve(std::ostream& out, const CurveResult& r) {
  out << "rel_t,mean_ratio,n_events,excess\n";
  for (std::size_t i = 0; i < r.curve.rel_t.size(); ++i)
    out << r.curve.rel_t[i] << ',' << csv::format(r.curve.mean[i]) << ',' << r.curve.count[i] << ',' << csv::format(r.excess.value[i]) << '\n';
}

/// log(t), log(excess) pairs for t >= 1 and positive excess.
inline void write_plot_data(std::ostream& out, const CurveResult& r) {
  out << "rel_t,log_t,log_excess\n";
  for (std::size_t i = 0; i < r.excess.rel_t.size(); ++i) {
    const auto t = r.excess.rel_t[i];
    const double e = r.excess.value[i];
    if (t < 1 || relax::is_absent(e) || e <= 0) continue;
    out << t << ',' << csv::format(std::log(static_cast<double>(t))) << ',' << csv::format(std::log(e)) << '\n';
  }
}

/// Splits a trailing _buy/_sell/_bid/_ask off an observable label.
inline std::pair<std::string, std::string> split_side(const std::string& label) {
  for (const char* suffix : {"_buy", "_sell", "_bid", "_ask"}) {
    const std::string s(suffix);
    if (label.size() > s.size() && label.compare(label.size() - s.size(), s.size(), s) == 0)
      return {label.substr(0, label.size() - s.size()), s.substr(1)};
  }
  return {label, ""};
}

inline void write_fit_report(std::ostream& out, const std::vector<CurveResult>& results) {
  out << "observable,side,beta,stderr,amplitude,t_lo,t_hi,n_points\n";
  for (const auto& r : results) {
    const auto [name, side] = split_side(r.curve.label);
    out << name << ',' << side << ',' << csv::format(r.fit.beta) << ',' << csv::format(r.fit.stderr_beta) << ',' << csv::format(r.fit.amplitude)
        << ',' << r.fit.t_lo << ',' << r.fit.t_hi << ',' << r.fit.n_points << '\n';
  }
}

inline void write_meanfield_trajectory(std::ostream& out, const meanfield::Trajectory& tr) {
  out << "t,spread,gap1\n";
  for (std::size_t t = 0; t < tr.spread.size(); ++t)
    out << t << ',' << csv::format(tr.spread[t]) << ',' << (t < tr.gap1.size() ? csv::format(tr.gap1[t]) : std::string()) << '\n';
}

/// Simulated excess spread read back from a curve file, indexed by step.
inline std::vector<double> read_curve_excess(std::istream& in, std::size_t steps) {
  const auto table = csv::read_table(in);
  csv::expect_header(table, {"rel_t", "mean_ratio", "n_events", "excess"});
  std::vector<double> out(steps + 1, relax::absent);
  for (const auto& row : table.rows) {
    const auto t = csv::parse_number<std::int64_t>(row[0], "rel_t");
    if (t < 0 || static_cast<std::size_t>(t) > steps) continue;
    out[static_cast<std::size_t>(t)] = row[3].empty() ? relax::absent : csv::parse_double(row[3], "excess");
  }
  return out;
}

struct MeanFieldComparison {
  std::vector<double> model_excess;
  std::vector<double> sim_excess;
  meanfield::Comparison near;  // steps 1..horizon
  double error_far = 0.0;      // relative error at far_step
};

inline MeanFieldComparison compare_excess(const std::vector<double>& model_spread, double sigma, const std::vector<double>& sim_excess,
                                          std::size_t horizon, std::size_t far_step) {
  MeanFieldComparison c;
  c.model_excess = meanfield::excess_spread(model_spread, sigma);
  c.sim_excess = sim_excess;
  if (c.sim_excess.size() != c.model_excess.size()) throw DataError("grid mismatch: simulated curve does not cover the model steps");
  for (std::size_t t = 1; t <= std::max(horizon, far_step); ++t)
    if (t < c.sim_excess.size() && relax::is_absent(c.sim_excess[t])) throw DataError("grid mismatch: simulated curve misses step " + std::to_string(t));
  c.near = meanfield::compare(c.model_excess, c.sim_excess, horizon);
  c.error_far = meanfield::compare(c.model_excess, c.sim_excess, far_step).relative_error.back();
  return c;
}

inline void write_comparison(std::ostream& out, const MeanFieldComparison& c) {
  out << "t,model_excess,sim_excess,relative_error\n";
  for (std::size_t t = 1; t < c.model_excess.size(); ++t) {
    const double err = std::abs(c.model_excess[t] - c.sim_excess[t]) / std::abs(c.sim_excess[t]);
    out << t << ',' << csv::format(c.model_excess[t]) << ',' << csv::format(c.sim_excess[t]) << ',' << csv::format(err) << '\n';
  }
}

inline void write_key_values(std::ostream& out, const std::vector<std::pair<std::string, std::string>>& kv) {
  out << "key,value\n";
  for (const auto& [k, v] : kv) out << k << ',' << v << '\n';
}

}  // namespace lobrelax
