#pragma once

// Random valid operation sequences against the order book, checked step by
// step against a naive reference book.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "lobrelax/orderbook.hpp"

namespace testsupport {

using lobrelax::OrderBook;
using lobrelax::OrderId;
using lobrelax::Price;
using lobrelax::Side;
using lobrelax::Volume;

/// Price levels as plain vectors of (id, volume), scanned linearly.
struct ReferenceBook {
  std::map<Price, std::vector<std::pair<OrderId, Volume>>> side[2];

  auto& of(Side s) { return side[s == Side::buy ? 0 : 1]; }

  std::optional<Price> best(Side s) const {
    const auto& m = side[s == Side::buy ? 0 : 1];
    if (m.empty()) return std::nullopt;
    return s == Side::buy ? m.rbegin()->first : m.begin()->first;
  }
  Volume total(Side s) const {
    Volume v = 0;
    for (const auto& [p, q] : side[s == Side::buy ? 0 : 1])
      for (const auto& [id, vol] : q) v += vol;
    return v;
  }
  std::size_t count(Side s) const {
    std::size_t n = 0;
    for (const auto& [p, q] : side[s == Side::buy ? 0 : 1]) n += q.size();
    return n;
  }
  bool erase(OrderId id) {
    for (auto& m : side)
      for (auto it = m.begin(); it != m.end(); ++it)
        for (auto o = it->second.begin(); o != it->second.end(); ++o)
          if (o->first == id) {
            it->second.erase(o);
            if (it->second.empty()) m.erase(it);
            return true;
          }
    return false;
  }
  /// Consumes `volume` from the side opposite to `taker`; returns fills (price, volume, id).
  std::vector<std::tuple<Price, Volume, OrderId>> take(Side taker, Volume volume) {
    std::vector<std::tuple<Price, Volume, OrderId>> fills;
    auto& m = of(taker == Side::buy ? Side::sell : Side::buy);
    while (volume > 0) {
      auto it = taker == Side::buy ? m.begin() : std::prev(m.end());
      auto& q = it->second;
      auto& head = q.front();
      const Volume t = std::min(volume, head.second);
      fills.emplace_back(it->first, t, head.first);
      head.second -= t;
      volume -= t;
      if (head.second == 0) q.erase(q.begin());
      if (q.empty()) m.erase(it);
    }
    return fills;
  }
};

struct FuzzReport {
  std::size_t operations = 0;
  std::size_t crossed = 0;
  std::size_t negative_volume = 0;
  std::size_t total_mismatch = 0;  // incremental totals vs rescan or reference
  std::size_t fill_mismatch = 0;   // fills differ from the reference, or filled volume differs from the request
  std::size_t verify_failures = 0;
};

/// Runs `n` random operations; every operation is valid for the current
/// state. Unit and non-unit volumes are mixed.
inline FuzzReport fuzz_book(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  OrderBook book;
  ReferenceBook ref;
  std::vector<OrderId> live;
  OrderId next = 1;
  FuzzReport rep;
  auto u = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  for (std::size_t k = 0; k < n; ++k) {
    ++rep.operations;
    const Side side = u(0, 1) ? Side::buy : Side::sell;
    const int op = u(0, 99);
    if (op < 45 || live.size() < 4) {
      // deposit near the current mid without crossing
      const auto bid = book.best_bid(), ask = book.best_ask();
      const Price centre = bid && ask ? (*bid + *ask) / 2 : bid ? *bid + 1 : ask ? *ask - 1 : 1000;
      Price p = side == Side::buy ? centre - u(0, 30) : centre + u(0, 30);
      if (side == Side::buy && ask && p >= *ask) p = *ask - 1;
      if (side == Side::sell && bid && p <= *bid) p = *bid + 1;
      const Volume vol = u(0, 3) == 0 ? u(2, 5) : 1;
      book.insert_limit(side, p, vol, next);
      ref.of(side)[p].emplace_back(next, vol);
      live.push_back(next++);
    } else if (op < 65) {
      const Volume avail = book.total_volume(lobrelax::opposite(side));
      if (avail == 0) continue;
      const Volume want = std::min<Volume>(avail, u(1, 4));
      const auto fills = book.execute_market(side, want);
      const auto expect = ref.take(side, want);
      Volume got = 0;
      for (const auto& f : fills) got += f.volume;
      bool same = fills.size() == expect.size() && got == want;
      for (std::size_t i = 0; same && i < fills.size(); ++i)
        same = fills[i].price == std::get<0>(expect[i]) && fills[i].volume == std::get<1>(expect[i]) && fills[i].counterparty == std::get<2>(expect[i]);
      if (!same) ++rep.fill_mismatch;
    } else if (op < 85) {
      if (book.empty(side)) continue;
      const auto o = book.cancel_uniform(side, rng);
      ref.erase(o.id);
    } else if (op < 97) {
      // cancel a random id that may already be gone
      const std::size_t i = std::uniform_int_distribution<std::size_t>(0, live.size() - 1)(rng);
      const OrderId id = live[i];
      live[i] = live.back();
      live.pop_back();
      if (book.contains(id)) {
        book.cancel_by_id(id);
        ref.erase(id);
      }
    } else {
      const auto top = book.best(side);
      if (!top) continue;
      const Price depth = u(0, 5);
      const auto removed = side == Side::buy ? book.clear_band(side, *top - depth, *top) : book.clear_band(side, *top, *top + depth);
      for (const auto& o : removed) ref.erase(o.id);
    }

    const auto bid = book.best_bid(), ask = book.best_ask();
    if (bid && ask && *bid >= *ask) ++rep.crossed;
    if (book.total_volume(Side::buy) < 0 || book.total_volume(Side::sell) < 0) ++rep.negative_volume;
    if (book.total_volume(Side::buy) != ref.total(Side::buy) || book.total_volume(Side::sell) != ref.total(Side::sell) ||
        book.order_count(Side::buy) != ref.count(Side::buy) || book.order_count(Side::sell) != ref.count(Side::sell) ||
        bid != ref.best(Side::buy) || ask != ref.best(Side::sell))
      ++rep.total_mismatch;
    if (k % 997 == 0 && !book.verify()) ++rep.verify_failures;
    if (live.size() > 4000) live.erase(live.begin(), live.begin() + 2000);
  }
  if (!book.verify()) ++rep.verify_failures;
  return rep;
}

}  // namespace testsupport
