#pragma once

// Event-aligned aggregation and power-law relaxation fits.
//
// Per-event rows hold baseline-normalized values on a shared relative-time
// grid; NaN marks an absent entry. Aggregation is a pointwise mean over the
// events present at each grid point.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "lobrelax/error.hpp"

namespace lobrelax::relax {

inline constexpr double absent = std::numeric_limits<double>::quiet_NaN();

inline bool is_absent(double v) noexcept { return std::isnan(v); }

/// Rows of event-aligned values, one row per event, columns on `rel_t`.
struct EventMatrix {
  std::string label;
  std::vector<std::int64_t> rel_t;
  std::vector<std::vector<double>> rows;

  std::size_t column(std::int64_t t) const {
    auto it = std::lower_bound(rel_t.begin(), rel_t.end(), t);
    if (it == rel_t.end() || *it != t) throw DataError("relative time " + std::to_string(t) + " is not on the grid");
    return static_cast<std::size_t>(it - rel_t.begin());
  }
};

struct RelaxationCurve {
  std::string label;
  std::vector<std::int64_t> rel_t;
  std::vector<double> mean;        // NaN where no event contributes
  std::vector<std::size_t> count;  // events contributing per point
};

class EmptyEnsemble : public DataError {
 public:
  EmptyEnsemble() : DataError("no events to aggregate") {}
};

inline void check_grid(const std::vector<std::int64_t>& grid) {
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (grid[i] <= grid[i - 1]) throw DataError("relative time grid must be strictly increasing");
}

/// Pointwise mean of the rows, skipping absent entries.
inline RelaxationCurve aggregate(const EventMatrix& m) {
  if (m.rows.empty()) throw EmptyEnsemble();
  check_grid(m.rel_t);
  RelaxationCurve c{m.label, m.rel_t, std::vector<double>(m.rel_t.size(), 0.0), std::vector<std::size_t>(m.rel_t.size(), 0)};
  for (const auto& row : m.rows) {
    if (row.size() != m.rel_t.size()) throw DataError("event row length differs from the grid");
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (is_absent(row[j])) continue;
      c.mean[j] += row[j];
      ++c.count[j];
    }
  }
  for (std::size_t j = 0; j < c.mean.size(); ++j) c.mean[j] = c.count[j] ? c.mean[j] / static_cast<double>(c.count[j]) : absent;
  return c;
}

/// Ratio of pointwise means: sum(value) / sum(baseline) over events where both
/// are present. Alternative to averaging per-event ratios.
inline RelaxationCurve aggregate_ratio_of_means(const EventMatrix& values, const EventMatrix& baselines) {
  if (values.rows.empty()) throw EmptyEnsemble();
  if (values.rows.size() != baselines.rows.size() || values.rel_t != baselines.rel_t)
    throw DataError("value and baseline matrices differ in shape");
  check_grid(values.rel_t);
  const std::size_t n = values.rel_t.size();
  RelaxationCurve c{values.label, values.rel_t, std::vector<double>(n, absent), std::vector<std::size_t>(n, 0)};
  for (std::size_t j = 0; j < n; ++j) {
    double num = 0.0, den = 0.0;
    std::size_t k = 0;
    for (std::size_t i = 0; i < values.rows.size(); ++i) {
      const double v = values.rows[i][j];
      const double b = baselines.rows[i][j];
      if (is_absent(v) || is_absent(b)) continue;
      num += v;
      den += b;
      ++k;
    }
    if (k && den != 0.0) {
      c.mean[j] = num / den;
      c.count[j] = k;
    }
  }
  return c;
}

struct ExcessSeries {
  std::string label;
  std::vector<std::int64_t> rel_t;
  std::vector<double> value;
  std::size_t negative = 0;  // points below the baseline
};

/// Normalized value minus one.
inline ExcessSeries excess(const RelaxationCurve& c) {
  ExcessSeries e{c.label, c.rel_t, {}, 0};
  e.value.reserve(c.mean.size());
  for (double v : c.mean) {
    const double x = is_absent(v) ? absent : v - 1.0;
    if (x < 0) ++e.negative;
    e.value.push_back(x);
  }
  return e;
}

struct PowerLawFit {
  double beta = 0.0;  // decay exponent, excess ~ amplitude * t^-beta
  double stderr_beta = 0.0;
  double amplitude = 0.0;
  std::int64_t t_lo = 1;
  std::int64_t t_hi = 100;
  std::size_t n_points = 0;    // positive raw points inside the window
  std::size_t n_excluded = 0;  // non-positive or absent points inside the window
  std::size_t n_fit = 0;       // points entering the regression (bins when log-binned)
  double residual_rms = 0.0;   // in natural-log units
};

class TooFewPoints : public NumericalError {
 public:
  explicit TooFewPoints(std::size_t n) : NumericalError("power-law fit needs >= 5 positive points, got " + std::to_string(n)) {}
};

class AllNonpositive : public NumericalError {
 public:
  AllNonpositive() : NumericalError("power-law fit window holds no positive point") {}
};

struct FitOptions {
  bool log_bins = true;         // average log-points within log-spaced bins
  double bins_per_decade = 10;
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  double residual_rms = 0.0;
};

/// Ordinary least squares y = intercept + slope * x.
inline LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) { mx += x[i]; my += y[i]; }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxx > 0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  double ssr = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    ssr += r * r;
  }
  f.residual_rms = std::sqrt(ssr / static_cast<double>(n));
  f.stderr_slope = (n > 2 && sxx > 0) ? std::sqrt(ssr / static_cast<double>(n - 2) / sxx) : 0.0;
  return f;
}

/// Fits excess(t) = A t^-beta on points with t_lo <= t <= t_hi and excess > 0
/// by least squares in log-log coordinates. With log binning the points of
/// each log-spaced bin are replaced by the mean of their logarithms, which
/// gives every decade equal weight and is exact for a noiseless power law.
inline PowerLawFit fit_power_law(const std::vector<std::int64_t>& rel_t, const std::vector<double>& excess_values, std::int64_t t_lo,
                                 std::int64_t t_hi, const FitOptions& opts = {}) {
  if (rel_t.size() != excess_values.size()) throw DataError("time and value series differ in length");
  if (t_lo < 1 || t_hi <= t_lo) throw ConfigError("fit window must satisfy 1 <= t_lo < t_hi");
  PowerLawFit fit;
  fit.t_lo = t_lo;
  fit.t_hi = t_hi;

  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < rel_t.size(); ++i) {
    if (rel_t[i] < t_lo || rel_t[i] > t_hi) continue;
    const double v = excess_values[i];
    if (is_absent(v) || v <= 0) {
      ++fit.n_excluded;
      continue;
    }
    lx.push_back(std::log(static_cast<double>(rel_t[i])));
    ly.push_back(std::log(v));
  }
  fit.n_points = lx.size();
  if (lx.empty() && fit.n_excluded > 0) throw AllNonpositive();
  if (lx.size() < 5) throw TooFewPoints(lx.size());

  if (opts.log_bins) {
    const double width = std::log(10.0) / opts.bins_per_decade;
    const double origin = std::log(static_cast<double>(t_lo));
    std::vector<double> bx, by;
    std::int64_t current = -1;
    double sx = 0, sy = 0;
    std::size_t k = 0;
    auto flush = [&] {
      if (k) { bx.push_back(sx / static_cast<double>(k)); by.push_back(sy / static_cast<double>(k)); }
      sx = sy = 0;
      k = 0;
    };
    for (std::size_t i = 0; i < lx.size(); ++i) {
      const auto bin = static_cast<std::int64_t>(std::floor((lx[i] - origin) / width + 1e-12));
      if (bin != current) { flush(); current = bin; }
      sx += lx[i];
      sy += ly[i];
      ++k;
    }
    flush();
    if (bx.size() >= 3) {
      lx = std::move(bx);
      ly = std::move(by);
    }
  }

  const LineFit line = least_squares(lx, ly);
  fit.n_fit = lx.size();
  fit.beta = -line.slope;
  fit.stderr_beta = line.stderr_slope;
  fit.amplitude = std::exp(line.intercept);
  fit.residual_rms = line.residual_rms;
  return fit;
}

inline PowerLawFit fit_power_law(const ExcessSeries& e, std::int64_t t_lo, std::int64_t t_hi, const FitOptions& opts = {}) {
  return fit_power_law(e.rel_t, e.value, t_lo, t_hi, opts);
}

/// Exponent with a bootstrap-over-events standard error: events are resampled
/// with replacement, re-aggregated and re-fitted `resamples` times.
inline PowerLawFit bootstrap_fit(const EventMatrix& m, std::int64_t t_lo, std::int64_t t_hi, std::size_t resamples, std::uint64_t seed,
                                 const FitOptions& opts = {}) {
  PowerLawFit base = fit_power_law(excess(aggregate(m)), t_lo, t_hi, opts);
  if (resamples < 2) return base;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, m.rows.size() - 1);
  std::vector<double> betas;
  betas.reserve(resamples);
  EventMatrix sample{m.label, m.rel_t, {}};
  for (std::size_t r = 0; r < resamples; ++r) {
    sample.rows.clear();
    for (std::size_t i = 0; i < m.rows.size(); ++i) sample.rows.push_back(m.rows[pick(rng)]);
    try {
      betas.push_back(fit_power_law(excess(aggregate(sample)), t_lo, t_hi, opts).beta);
    } catch (const NumericalError&) {
      // resample without enough positive points; leave it out
    }
  }
  if (betas.size() >= 2) {
    double mean = 0;
    for (double b : betas) mean += b;
    mean /= static_cast<double>(betas.size());
    double var = 0;
    for (double b : betas) var += (b - mean) * (b - mean);
    base.stderr_beta = std::sqrt(var / static_cast<double>(betas.size() - 1));
  }
  return base;
}

}  // namespace lobrelax::relax
