#pragma once

// Shock windows of the flow model as event matrices on the relative-step grid.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "lobrelax/relax.hpp"
#include "lobrelax/ziflow.hpp"

namespace lobrelax::relax {

/// Common grid covering every window.
inline std::vector<std::int64_t> window_grid(const std::vector<ShockWindow>& windows) {
  if (windows.empty()) throw EmptyEnsemble();
  std::int64_t lo = 0, hi = 0;
  for (const auto& w : windows) {
    lo = std::min(lo, w.rel_t(0));
    hi = std::max(hi, w.rel_t(w.records.size() - 1));
  }
  std::vector<std::int64_t> grid;
  for (auto t = lo; t <= hi; ++t) grid.push_back(t);
  return grid;
}

/// Raw observable values per window. The volatility of a window's first
/// record is absent since its predecessor is not retained.
inline EventMatrix model_values(const std::vector<ShockWindow>& windows, ModelObservable o) {
  EventMatrix m{std::string(model_observable_names[static_cast<std::size_t>(o)]), window_grid(windows), {}};
  const std::int64_t lo = m.rel_t.front();
  for (const auto& w : windows) {
    std::vector<double> row(m.rel_t.size(), absent);
    for (std::size_t i = 0; i < w.records.size(); ++i) {
      const double prev = i ? w.records[i - 1].mid : absent;
      row[static_cast<std::size_t>(w.rel_t(i) - lo)] = observe(w.records[i], prev)[static_cast<std::size_t>(o)];
    }
    m.rows.push_back(std::move(row));
  }
  return m;
}

/// Values divided by the long-run baseline mean; absent when the baseline is 0.
inline EventMatrix model_ratio(const std::vector<ShockWindow>& windows, const Baseline& baseline, ModelObservable o) {
  EventMatrix m = model_values(windows, o);
  const double b = baseline.mean(o);
  for (auto& row : m.rows)
    for (auto& v : row) v = (b == 0.0 || is_absent(b)) ? absent : v / b;
  return m;
}

/// Matrix of the constant baseline in the shape of `values`, absent where the value is.
inline EventMatrix constant_baseline(const EventMatrix& values, double b) {
  EventMatrix m = values;
  for (auto& row : m.rows)
    for (auto& v : row) v = is_absent(v) ? absent : b;
  return m;
}

}  // namespace lobrelax::relax
