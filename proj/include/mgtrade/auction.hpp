#pragma once

// Uniform-price double auction run by the auctioneer once per slot.
//
// Buy bids are sorted by price descending and sell bids ascending (ties by
// mg_id). For every candidate marginal pair (i, l) the welfare objective
//
//   sum_{a<=i} sum_{b<=l} rho1 * beta_i * log(x) - rho2 * alpha_l * x^2 / 2
//
// is evaluated at its stationary point x = sqrt(rho1 beta_i / (rho2 alpha_l)).
// The best pair sets the clearing prices; bids strictly ahead of it in each
// book win. When the marginal bid is first in its book nobody is ahead of it,
// and that bid itself is accepted.

#include <iosfwd>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "mgtrade/controller.hpp"

namespace mgtrade {

struct BookEntry {
  int mg_id = 0;
  double price = 0.0;
  double quantity_kwh = 0.0;

  friend bool operator==(const BookEntry&, const BookEntry&) = default;
};

struct OrderBook {
  std::vector<BookEntry> buy_bids;   // descending price
  std::vector<BookEntry> sell_bids;  // ascending price
  double rho1 = 1.0;
  double rho2 = 1.0;

  /// Builds a sorted book from the MGs' bids, dropping zero-quantity sides.
  static OrderBook from_bids(std::span<const BidPair> bids, double rho1, double rho2);

  /// Throws InvariantViolation if sort order, side exclusivity, or rho > 0 fail.
  void validate() const;
};

struct ClearingOutcome {
  std::vector<int> accepted_buyers;   // in book order
  std::vector<int> accepted_sellers;  // in book order
  double buy_clearing_price = 0.0;
  double sell_clearing_price = 0.0;
  /// (buyer, seller) -> kWh; the buyer's purchase equals the seller's sale.
  std::map<std::pair<int, int>, double> allocations;
  double unconstrained_pair_kwh = 0.0;
  /// Welfare value of the chosen marginal pair, 0 when nothing clears.
  double welfare = 0.0;
  /// 1-based positions of the marginal bids in the sorted books, 0 when empty.
  int marginal_buy_index = 0;
  int marginal_sell_index = 0;

  double volume_kwh() const;
  double bought_by(int mg_id) const;
  double sold_by(int mg_id) const;
  bool empty() const { return allocations.empty(); }
};

/// Unconstrained welfare-maximizing quantity for one pair. Throws
/// ConfigError when sell_price <= 0 (quantity unbounded).
double pair_quantity(double buy_price, double sell_price, double rho1, double rho2);

/// Welfare of one candidate marginal pair with `buyers` x `sellers` pairs, each
/// at the stationary quantity.
double candidate_welfare(int buyers, int sellers, double buy_price, double sell_price,
                         double rho1, double rho2);

/// The buy price a candidate marginal bid clears at: its bid capped by the
/// grid price.
inline double capped_buy_price(double bid, double grid_price) {
  return bid < grid_price ? bid : grid_price;
}

ClearingOutcome clear(const OrderBook& book, double grid_price);

/// Settlement for one MG under the outcome.
TradeAllocation allocation_for(const ClearingOutcome& out, int mg_id);

/// Auctioneer surplus sum(beta_hat x) - sum(alpha_hat y). Throws
/// InvariantViolation when negative.
double budget_check(const ClearingOutcome& out);

/// Appends one audit row per book entry:
/// slot,mg_id,side,price,quantity,accepted,cleared_price,cleared_quantity
void write_market_audit(std::ostream& os, int slot, const OrderBook& book,
                        const ClearingOutcome& out);
void write_market_audit_header(std::ostream& os);

}  // namespace mgtrade
