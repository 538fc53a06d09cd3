#pragma once

// Mean-field recursions for the expected bid-ask spread (in ticks) after a
// large price change in the zero-intelligence model.
//
// A limit order that lands inside the spread at distance k from its own best
// price narrows the spread by k; a market order widens it by the first gap.
// Sums over integer distances are evaluated in closed form n(n + 1) / 2 at
// real n. Cancelations are taken to leave spread and gaps unchanged.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "lobrelax/error.hpp"

namespace lobrelax::meanfield {

/// 1 + 2 + ... + n continued to real n.
constexpr double ksum(double n) noexcept { return 0.5 * n * (n + 1.0); }

struct Params {
  double depth = 1000.0;  // D
  double p_lo = 0.5;
  double p_mo = 0.16;
  double p_c = 0.34;
  double sigma = 0.0;   // stationary spread
  double spread0 = 0.0; // spread right after the shock, sigma + J
  std::size_t steps = 1000;

  void validate() const {
    if (!(depth > 0)) throw ConfigError("D must be positive");
    if (p_lo < 0 || p_mo < 0 || p_c < 0) throw ConfigError("rates must be non-negative");
    if (std::abs(p_lo + p_mo + p_c - 1.0) > 1e-12) throw ConfigError("rates must sum to 1");
    if (!(sigma > 0)) throw ConfigError("stationary spread sigma must be positive");
    if (spread0 < sigma) throw ConfigError("initial spread must be >= sigma");
  }
};

struct Trajectory {
  std::vector<double> spread;  // E(S_t), t = 0..steps
  std::vector<double> gap1;    // E(g1_t), empty for the limit case
};

/// Expected spread change from limit orders alone.
inline double limit_order_drift(double spread, double p_lo, double depth) {
  return -p_lo * (spread * spread / (8.0 * depth) + spread / (4.0 * depth));
}

/// P_MO = 0, P_LO = 1/2: S_{t+1} = S_t (1 - 1/(8D)) - S_t^2 / (16D).
inline std::vector<double> limit_recursion(double depth, double spread0, std::size_t steps) {
  if (!(depth > 0)) throw ConfigError("D must be positive");
  if (!(spread0 > 0)) throw ConfigError("initial spread must be positive");
  std::vector<double> s;
  s.reserve(steps + 1);
  s.push_back(spread0);
  for (std::size_t t = 0; t < steps; ++t) {
    const double cur = s.back();
    const double next = cur + limit_order_drift(cur, 0.5, depth);
    if (!(next >= 0.0)) throw NumericalError("spread went negative at step " + std::to_string(t + 1) + "; initial spread out of regime");
    s.push_back(next);
  }
  return s;
}

/// First gap that makes the expected spread change vanish at spread sigma.
inline double stationary_gap(double sigma, double p_lo, double p_mo, double depth) {
  if (!(p_mo > 0)) throw ConfigError("stationary gap requires a positive market order rate");
  return (p_lo / p_mo) * (sigma * sigma / (8.0 * depth) + sigma / (4.0 * depth));
}

class RequiresHalfLO : public ConfigError {
 public:
  RequiresHalfLO() : ConfigError("simplified gap ratio holds only for p_lo = 0.5") {}
};

/// Stationary second-to-first gap ratio for general P_LO:
/// 1 + (1/(2D)) (P_LO/P_MO) [sigma + gamma1 - 1] - 2 P_LO.
inline double gap_ratio_general(double sigma, double gamma1, double p_lo, double p_mo, double depth) {
  if (!(p_mo > 0)) throw ConfigError("gap ratio requires a positive market order rate");
  return 1.0 + (p_lo / p_mo) * (sigma + gamma1 - 1.0) / (2.0 * depth) - 2.0 * p_lo;
}

/// Second-to-first gap ratio at P_LO = 1/2: (1/(2D)) (P_LO/P_MO) [sigma + gamma1 - 1].
inline double gap_ratio(double sigma, double gamma1, double p_lo, double p_mo, double depth) {
  if (p_lo != 0.5) throw RequiresHalfLO();
  if (!(p_mo > 0)) throw ConfigError("gap ratio requires a positive market order rate");
  return (p_lo / p_mo) * (sigma + gamma1 - 1.0) / (2.0 * depth);
}

/// Coupled spread / first-gap iteration closed by a constant second-gap
/// ratio. Both update rules read the state of the previous step:
///   S_{t+1} = S_t - P_LO [S_t^2/(8D) + S_t/(4D)] + P_MO g_t
///   g_{t+1} = P_C g_t + P_LO [ (D - S_t/2 - g_t)/D g_t + K(g_t)/D + K(S_t/2)/D ] + P_MO r g_t
/// For P_MO = 0 the gap decouples and the spread follows limit_recursion.
///
/// `gap0` defaults to the stationary first gap at sigma.
inline Trajectory general_recursion(const Params& p, double gap0 = std::numeric_limits<double>::quiet_NaN()) {
  p.validate();
  Trajectory out;
  out.spread.reserve(p.steps + 1);
  out.gap1.reserve(p.steps + 1);
  const double D = p.depth;

  double ratio = 0.0;
  double gap = 0.0;
  if (p.p_mo > 0) {
    const double gamma1 = stationary_gap(p.sigma, p.p_lo, p.p_mo, D);
    ratio = p.p_lo == 0.5 ? gap_ratio(p.sigma, gamma1, p.p_lo, p.p_mo, D) : gap_ratio_general(p.sigma, gamma1, p.p_lo, p.p_mo, D);
    gap = std::isnan(gap0) ? gamma1 : gap0;
  } else {
    gap = std::isnan(gap0) ? 0.0 : gap0;
  }

  double s = p.spread0;
  out.spread.push_back(s);
  out.gap1.push_back(gap);
  for (std::size_t t = 0; t < p.steps; ++t) {
    const double s_next = s + limit_order_drift(s, p.p_lo, D) + p.p_mo * gap;
    const double g_next = p.p_c * gap +
                          p.p_lo * ((D - 0.5 * s - gap) / D * gap + ksum(gap) / D + ksum(0.5 * s) / D) +
                          p.p_mo * ratio * gap;
    if (!(s_next >= 0.0) || !(g_next >= 0.0))
      throw NumericalError("mean-field state went negative at step " + std::to_string(t + 1));
    s = s_next;
    gap = p.p_mo > 0 ? g_next : gap;
    out.spread.push_back(s);
    out.gap1.push_back(gap);
  }
  return out;
}

struct Comparison {
  std::vector<double> relative_error;  // |model - sim| / |sim| per step, steps 1..horizon
  double max_error = 0.0;
  std::size_t horizon = 0;
};

/// Pointwise relative error between two series indexed by step (index 0 is
/// step 0). Steps 1..horizon are compared.
inline Comparison compare(const std::vector<double>& model, const std::vector<double>& simulated, std::size_t horizon) {
  if (model.size() != simulated.size()) throw DataError("grid mismatch: model and simulated series differ in length");
  if (horizon >= model.size()) throw DataError("grid mismatch: horizon beyond the common grid");
  Comparison c;
  c.horizon = horizon;
  c.relative_error.reserve(horizon);
  for (std::size_t t = 1; t <= horizon; ++t) {
    const double denom = std::abs(simulated[t]);
    const double diff = std::abs(model[t] - simulated[t]);
    const double err = denom > 0 ? diff / denom : (diff == 0 ? 0.0 : std::numeric_limits<double>::infinity());
    c.relative_error.push_back(err);
    c.max_error = std::max(c.max_error, err);
  }
  return c;
}

/// Mean-field spread expressed as excess over the stationary value, S_t / sigma - 1.
inline std::vector<double> excess_spread(const std::vector<double>& spread, double sigma) {
  std::vector<double> out;
  out.reserve(spread.size());
  for (double s : spread) out.push_back(s / sigma - 1.0);
  return out;
}

}  // namespace lobrelax::meanfield
