#pragma once

// Price-time priority limit order book on an integer tick grid.
//
// Each side is a sorted map of price levels; every level is a FIFO queue of
// resting orders. Besides matching, the book keeps a flat per-side index of
// resident orders so that uniform random cancelation is O(1) when all orders
// carry unit volume (the zero-intelligence model case).

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iterator>
#include <list>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lobrelax/error.hpp"

namespace lobrelax {

using Price = std::int64_t;
using Volume = std::int64_t;
using OrderId = std::uint64_t;

enum class Side : std::uint8_t { buy = 0, sell = 1 };

constexpr Side opposite(Side s) noexcept { return s == Side::buy ? Side::sell : Side::buy; }

constexpr std::string_view to_string(Side s) noexcept { return s == Side::buy ? "buy" : "sell"; }

struct Order {
  OrderId id = 0;
  Side side = Side::buy;
  Price price = 0;
  Volume volume = 0;
  std::uint64_t seq = 0;

  friend bool operator==(const Order&, const Order&) = default;
};

struct Placement {
  OrderId id;
  std::uint64_t seq;
};

struct Fill {
  Price price;
  Volume volume;
  OrderId counterparty;

  friend bool operator==(const Fill&, const Fill&) = default;
};

class BookError : public Error {
 public:
  enum class Code { crossing_price, duplicate_id, insufficient_liquidity, empty_side, unknown_id, invalid_volume };

  BookError(Code code, const std::string& msg) : Error("book: " + msg), code_(code) {}
  Code code() const noexcept { return code_; }

 private:
  Code code_;
};

/// Raised by stats() when one side is empty; carries whichever best exists.
class PartialBook : public Error {
 public:
  PartialBook(std::optional<Price> bid, std::optional<Price> ask)
      : Error("book: stats undefined on a one-sided or empty book"), best_bid_(bid), best_ask_(ask) {}

  std::optional<Price> best_bid() const noexcept { return best_bid_; }
  std::optional<Price> best_ask() const noexcept { return best_ask_; }

 private:
  std::optional<Price> best_bid_;
  std::optional<Price> best_ask_;
};

/// Snapshot of the microstructure observables of a two-sided book.
///
/// Gaps are tick distances between consecutive occupied levels on one side:
/// `gap1` between the best and second best level, `gap2` between the second
/// and third. A side with too few occupied levels reports the gap as absent.
struct BookStats {
  Price best_bid = 0;
  Price best_ask = 0;
  double mid = 0.0;
  Price spread_ticks = 0;
  double log_spread = 0.0;  // NaN unless both prices are positive
  std::optional<Price> gap1_bid, gap1_ask;
  std::optional<Price> gap2_bid, gap2_ask;
  Volume buy_volume = 0;
  Volume sell_volume = 0;
  double imbalance_buy = 0.0;
  double imbalance_sell = 0.0;
  std::size_t n_bid_orders = 0;
  std::size_t n_ask_orders = 0;

  friend bool operator==(const BookStats&, const BookStats&) = default;
};

class OrderBook {
 public:
  OrderBook() = default;
  OrderBook(OrderBook&&) noexcept = default;
  OrderBook& operator=(OrderBook&&) noexcept = default;

  // The id index points into the level queues, so a copy rebuilds it.
  OrderBook(const OrderBook& o)
      : bids_(o.bids_), asks_(o.asks_), bid_ids_(o.bid_ids_), ask_ids_(o.ask_ids_), buy_volume_(o.buy_volume_), sell_volume_(o.sell_volume_),
        next_seq_(o.next_seq_) {
    index_.reserve(o.index_.size());
    for (Side side : {Side::buy, Side::sell})
      for (auto& [price, queue] : levels(side))
        for (auto it = queue.begin(); it != queue.end(); ++it) index_.emplace(it->id, Locator{side, price, it, o.index_.at(it->id).slot});
  }

  OrderBook& operator=(const OrderBook& o) {
    if (this != &o) *this = OrderBook(o);
    return *this;
  }

  /// Rests a limit order at the tail of its level. Buys must be priced below
  /// the best ask and sells above the best bid.
  Placement insert_limit(Side side, Price price, Volume volume, OrderId id) {
    if (volume < 1) throw BookError(BookError::Code::invalid_volume, "volume must be >= 1");
    if (index_.contains(id)) throw BookError(BookError::Code::duplicate_id, "duplicate order id " + std::to_string(id));
    if (side == Side::buy) {
      if (auto ask = best_ask(); ask && price >= *ask)
        throw BookError(BookError::Code::crossing_price, "buy at " + std::to_string(price) + " crosses ask " + std::to_string(*ask));
    } else {
      if (auto bid = best_bid(); bid && price <= *bid)
        throw BookError(BookError::Code::crossing_price, "sell at " + std::to_string(price) + " crosses bid " + std::to_string(*bid));
    }

    const std::uint64_t seq = next_seq_++;
    auto& queue = levels(side)[price];
    queue.push_back(Order{id, side, price, volume, seq});
    auto& ids = residents(side);
    index_.emplace(id, Locator{side, price, std::prev(queue.end()), ids.size()});
    ids.push_back(id);
    volume_ref(side) += volume;
    return Placement{id, seq};
  }

  /// Executes a market order of `side` against the opposite side, walking
  /// price levels from the best and FIFO within each level.
  std::vector<Fill> execute_market(Side side, Volume volume) {
    if (volume < 1) throw BookError(BookError::Code::invalid_volume, "volume must be >= 1");
    const Side resting = opposite(side);
    if (total_volume(resting) < volume)
      throw BookError(BookError::Code::insufficient_liquidity,
                      "requested " + std::to_string(volume) + ", available " + std::to_string(total_volume(resting)));

    std::vector<Fill> fills;
    Volume remaining = volume;
    while (remaining > 0) {
      auto& book_side = levels(resting);
      auto level = resting == Side::sell ? book_side.begin() : std::prev(book_side.end());
      auto& queue = level->second;
      Order& head = queue.front();
      const Volume take = std::min(remaining, head.volume);
      fills.push_back(Fill{head.price, take, head.id});
      remaining -= take;
      if (take == head.volume) {
        erase_order(head.id);
      } else {
        head.volume -= take;
        volume_ref(resting) -= take;
      }
    }
    return fills;
  }

  /// Removes one resting order of `side`, each unit of resting volume being
  /// equally likely to be selected.
  template <class URBG>
  Order cancel_uniform(Side side, URBG& rng) {
    const auto& ids = residents(side);
    if (ids.empty()) throw BookError(BookError::Code::empty_side, std::string("no orders on ") + std::string(to_string(side)) + " side");
    OrderId victim = 0;
    if (static_cast<std::size_t>(total_volume(side)) == ids.size()) {
      std::uniform_int_distribution<std::size_t> pick(0, ids.size() - 1);
      victim = ids[pick(rng)];
    } else {
      std::uniform_int_distribution<Volume> unit(0, total_volume(side) - 1);
      Volume u = unit(rng);
      for (OrderId id : ids) {
        const Volume v = index_.at(id).it->volume;
        if (u < v) {
          victim = id;
          break;
        }
        u -= v;
      }
    }
    return erase_order(victim);
  }

  Order cancel_by_id(OrderId id) {
    if (!index_.contains(id)) throw BookError(BookError::Code::unknown_id, "unknown order id " + std::to_string(id));
    return erase_order(id);
  }

  /// Removes every order of `side` priced in the closed range [lo, hi].
  std::vector<Order> clear_band(Side side, Price lo, Price hi) {
    std::vector<Order> removed;
    auto& book_side = levels(side);
    auto first = book_side.lower_bound(lo);
    auto last = book_side.upper_bound(hi);
    std::vector<OrderId> ids;
    for (auto level = first; level != last; ++level)
      for (const Order& o : level->second) ids.push_back(o.id);
    removed.reserve(ids.size());
    for (OrderId id : ids) removed.push_back(erase_order(id));
    return removed;
  }

  std::optional<Price> best_bid() const {
    if (bids_.empty()) return std::nullopt;
    return bids_.rbegin()->first;
  }

  std::optional<Price> best_ask() const {
    if (asks_.empty()) return std::nullopt;
    return asks_.begin()->first;
  }

  std::optional<Price> best(Side side) const { return side == Side::buy ? best_bid() : best_ask(); }

  /// Price of the n-th best occupied level (0 = best).
  std::optional<Price> level_price(Side side, std::size_t n) const {
    const auto& book_side = levels(side);
    if (n >= book_side.size()) return std::nullopt;
    if (side == Side::sell) return std::next(book_side.begin(), static_cast<std::ptrdiff_t>(n))->first;
    return std::next(book_side.rbegin(), static_cast<std::ptrdiff_t>(n))->first;
  }

  /// Distance in ticks between the n-th and (n+1)-th best levels, n >= 1.
  std::optional<Price> gap(Side side, std::size_t n) const {
    const auto inner = level_price(side, n - 1);
    const auto outer = level_price(side, n);
    if (!inner || !outer) return std::nullopt;
    return side == Side::buy ? *inner - *outer : *outer - *inner;
  }

  Volume total_volume(Side side) const { return side == Side::buy ? buy_volume_ : sell_volume_; }
  std::size_t order_count(Side side) const { return residents(side).size(); }
  std::size_t order_count() const { return index_.size(); }
  std::size_t level_count(Side side) const { return levels(side).size(); }
  bool empty(Side side) const { return levels(side).empty(); }
  bool two_sided() const { return !bids_.empty() && !asks_.empty(); }
  bool contains(OrderId id) const { return index_.contains(id); }

  /// Queue at one price level, head first. Empty if the level is unoccupied.
  std::vector<Order> level_orders(Side side, Price price) const {
    const auto& book_side = levels(side);
    auto level = book_side.find(price);
    if (level == book_side.end()) return {};
    return {level->second.begin(), level->second.end()};
  }

  /// Sorted occupied prices of one side, best first.
  std::vector<Price> occupied_prices(Side side) const {
    std::vector<Price> out;
    out.reserve(levels(side).size());
    if (side == Side::sell) {
      for (const auto& [p, q] : asks_) out.push_back(p);
    } else {
      for (auto it = bids_.rbegin(); it != bids_.rend(); ++it) out.push_back(it->first);
    }
    return out;
  }

  BookStats stats() const {
    if (!two_sided()) throw PartialBook(best_bid(), best_ask());
    BookStats s;
    s.best_bid = *best_bid();
    s.best_ask = *best_ask();
    s.mid = 0.5 * static_cast<double>(s.best_ask + s.best_bid);
    s.spread_ticks = s.best_ask - s.best_bid;
    s.log_spread = (s.best_bid > 0) ? std::log(static_cast<double>(s.best_ask)) - std::log(static_cast<double>(s.best_bid))
                                    : std::nan("");
    s.gap1_bid = gap(Side::buy, 1);
    s.gap1_ask = gap(Side::sell, 1);
    s.gap2_bid = gap(Side::buy, 2);
    s.gap2_ask = gap(Side::sell, 2);
    s.buy_volume = buy_volume_;
    s.sell_volume = sell_volume_;
    const double total = static_cast<double>(buy_volume_ + sell_volume_);
    s.imbalance_buy = static_cast<double>(buy_volume_) / total;
    s.imbalance_sell = static_cast<double>(sell_volume_) / total;
    s.n_bid_orders = residents(Side::buy).size();
    s.n_ask_orders = residents(Side::sell).size();
    return s;
  }

  /// Full rescan of the structural invariants. Returns false on any
  /// inconsistency between the level queues, the id index and the totals.
  bool verify() const {
    for (Side side : {Side::buy, Side::sell}) {
      Volume sum = 0;
      std::size_t n = 0;
      std::uint64_t last_seq = 0;
      for (const auto& [price, queue] : levels(side)) {
        if (queue.empty()) return false;
        last_seq = 0;
        for (const Order& o : queue) {
          if (o.volume < 1 || o.price != price || o.side != side) return false;
          if (o.seq < last_seq) return false;
          last_seq = o.seq;
          auto loc = index_.find(o.id);
          if (loc == index_.end() || loc->second.side != side || loc->second.price != price) return false;
          if (residents(side)[loc->second.slot] != o.id) return false;
          sum += o.volume;
          ++n;
        }
      }
      if (sum != total_volume(side) || n != residents(side).size()) return false;
    }
    if (two_sided() && *best_bid() >= *best_ask()) return false;
    return index_.size() == residents(Side::buy).size() + residents(Side::sell).size();
  }

 private:
  using Queue = std::list<Order>;
  using Levels = std::map<Price, Queue>;

  struct Locator {
    Side side;
    Price price;
    Queue::iterator it;
    std::size_t slot;  // position in residents(side)
  };

  Levels& levels(Side s) { return s == Side::buy ? bids_ : asks_; }
  const Levels& levels(Side s) const { return s == Side::buy ? bids_ : asks_; }
  std::vector<OrderId>& residents(Side s) { return s == Side::buy ? bid_ids_ : ask_ids_; }
  const std::vector<OrderId>& residents(Side s) const { return s == Side::buy ? bid_ids_ : ask_ids_; }
  Volume& volume_ref(Side s) { return s == Side::buy ? buy_volume_ : sell_volume_; }

  Order erase_order(OrderId id) {
    auto node = index_.find(id);
    const Locator loc = node->second;
    Order order = *loc.it;

    auto& ids = residents(loc.side);
    const OrderId moved = ids.back();
    ids[loc.slot] = moved;
    index_.at(moved).slot = loc.slot;
    ids.pop_back();

    auto& book_side = levels(loc.side);
    auto level = book_side.find(loc.price);
    level->second.erase(loc.it);
    if (level->second.empty()) book_side.erase(level);

    volume_ref(loc.side) -= order.volume;
    index_.erase(id);
    return order;
  }

  Levels bids_;
  Levels asks_;
  std::vector<OrderId> bid_ids_;
  std::vector<OrderId> ask_ids_;
  std::unordered_map<OrderId, Locator> index_;
  Volume buy_volume_ = 0;
  Volume sell_volume_ = 0;
  std::uint64_t next_seq_ = 1;
};

}  // namespace lobrelax
