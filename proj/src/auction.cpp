#include "mgtrade/auction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <set>

#include "mgtrade/report.hpp"

namespace mgtrade {

OrderBook OrderBook::from_bids(std::span<const BidPair> bids, double rho1, double rho2) {
  OrderBook book;
  book.rho1 = rho1;
  book.rho2 = rho2;
  for (const BidPair& b : bids) {
    if (b.has_buy()) book.buy_bids.push_back({b.mg_id, b.buy_price, b.buy_quantity_kwh});
    if (b.has_sell()) book.sell_bids.push_back({b.mg_id, b.sell_price, b.sell_quantity_kwh});
  }
  std::sort(book.buy_bids.begin(), book.buy_bids.end(), [](const BookEntry& a, const BookEntry& b) {
    return a.price > b.price || (a.price == b.price && a.mg_id < b.mg_id);
  });
  std::sort(book.sell_bids.begin(), book.sell_bids.end(), [](const BookEntry& a, const BookEntry& b) {
    return a.price < b.price || (a.price == b.price && a.mg_id < b.mg_id);
  });
  return book;
}

void OrderBook::validate() const {
  if (!(rho1 > 0.0) || !(rho2 > 0.0)) throw InvariantViolation("rho1 and rho2 must be > 0");
  for (std::size_t i = 1; i < buy_bids.size(); ++i) {
    if (buy_bids[i - 1].price < buy_bids[i].price) throw InvariantViolation("buy book not descending");
  }
  for (std::size_t i = 1; i < sell_bids.size(); ++i) {
    if (sell_bids[i - 1].price > sell_bids[i].price) throw InvariantViolation("sell book not ascending");
  }
  std::set<int> ids;
  for (const auto& e : buy_bids) {
    if (!ids.insert(e.mg_id).second) throw InvariantViolation("duplicate buyer id");
  }
  for (const auto& e : sell_bids) {
    if (ids.count(e.mg_id)) throw InvariantViolation("MG on both sides of the book");
  }
  for (const auto* side : {&buy_bids, &sell_bids}) {
    for (const auto& e : *side) {
      if (!(e.price >= 0.0) || !(e.quantity_kwh > 0.0)) {
        throw InvariantViolation("book entries need price >= 0 and quantity > 0");
      }
    }
  }
}

double ClearingOutcome::volume_kwh() const {
  double v = 0.0;
  for (const auto& [pair, q] : allocations) v += q;
  return v;
}

double ClearingOutcome::bought_by(int mg_id) const {
  double v = 0.0;
  for (const auto& [pair, q] : allocations) {
    if (pair.first == mg_id) v += q;
  }
  return v;
}

double ClearingOutcome::sold_by(int mg_id) const {
  double v = 0.0;
  for (const auto& [pair, q] : allocations) {
    if (pair.second == mg_id) v += q;
  }
  return v;
}

double pair_quantity(double buy_price, double sell_price, double rho1, double rho2) {
  if (!(sell_price > 0.0)) {
    throw ConfigError("pair quantity unbounded: sell price must be > 0");
  }
  return std::sqrt(rho1 * buy_price / (rho2 * sell_price));
}

double candidate_welfare(int buyers, int sellers, double buy_price, double sell_price,
                         double rho1, double rho2) {
  if (!(sell_price > 0.0)) return std::numeric_limits<double>::infinity();
  const double x = pair_quantity(buy_price, sell_price, rho1, rho2);
  const double per_pair = rho1 * buy_price * std::log(x) - rho2 * sell_price * x * x / 2.0;
  return static_cast<double>(buyers) * static_cast<double>(sellers) * per_pair;
}

namespace {

// Candidates with a zero ask have unbounded welfare; among those the one whose
// welfare grows fastest (largest pairs * buy price, the coefficient of log x)
// dominates. Returns true when (w1, g1) beats (w2, g2).
bool welfare_beats(double w1, double g1, double w2, double g2) {
  const bool inf1 = std::isinf(w1);
  const bool inf2 = std::isinf(w2);
  if (inf1 != inf2) return inf1;
  if (inf1) return g1 > g2;
  return w1 > w2;
}

}  // namespace

ClearingOutcome clear(const OrderBook& book, double grid_price) {
  book.validate();
  ClearingOutcome out;
  const int nb = static_cast<int>(book.buy_bids.size());
  const int ns = static_cast<int>(book.sell_bids.size());
  int best_i = 0;
  int best_l = 0;
  double best_w = 0.0;
  double best_growth = 0.0;
  for (int i = 1; i <= nb; ++i) {
    const double beta = capped_buy_price(book.buy_bids[static_cast<std::size_t>(i - 1)].price, grid_price);
    for (int l = 1; l <= ns; ++l) {
      const double alpha = book.sell_bids[static_cast<std::size_t>(l - 1)].price;
      if (!(beta > alpha)) continue;
      const double w = candidate_welfare(i, l, beta, alpha, book.rho1, book.rho2);
      const double growth = static_cast<double>(i) * static_cast<double>(l) * beta;
      if (best_i == 0 || welfare_beats(w, growth, best_w, best_growth)) {
        best_i = i;
        best_l = l;
        best_w = w;
        best_growth = growth;
      }
    }
  }
  if (best_i == 0) return out;

  out.marginal_buy_index = best_i;
  out.marginal_sell_index = best_l;
  out.welfare = best_w;
  out.buy_clearing_price =
      capped_buy_price(book.buy_bids[static_cast<std::size_t>(best_i - 1)].price, grid_price);
  out.sell_clearing_price = book.sell_bids[static_cast<std::size_t>(best_l - 1)].price;
  const int n_buy = best_i > 1 ? best_i - 1 : 1;
  const int n_sell = best_l > 1 ? best_l - 1 : 1;

  out.unconstrained_pair_kwh =
      out.sell_clearing_price > 0.0
          ? pair_quantity(out.buy_clearing_price, out.sell_clearing_price, book.rho1, book.rho2)
          : std::numeric_limits<double>::infinity();

  std::vector<double> seller_left;
  for (int l = 0; l < n_sell; ++l) {
    out.accepted_sellers.push_back(book.sell_bids[static_cast<std::size_t>(l)].mg_id);
    seller_left.push_back(book.sell_bids[static_cast<std::size_t>(l)].quantity_kwh);
  }
  for (int i = 0; i < n_buy; ++i) {
    const BookEntry& buyer = book.buy_bids[static_cast<std::size_t>(i)];
    out.accepted_buyers.push_back(buyer.mg_id);
    double buyer_left = buyer.quantity_kwh;
    for (int l = 0; l < n_sell && buyer_left > 0.0; ++l) {
      double& s_left = seller_left[static_cast<std::size_t>(l)];
      // Scale factor min(1, buyer_left / x, seller_left / x) applied to x.
      const double q = std::min({out.unconstrained_pair_kwh, buyer_left, s_left});
      if (q <= 0.0) continue;
      out.allocations[{buyer.mg_id, book.sell_bids[static_cast<std::size_t>(l)].mg_id}] = q;
      buyer_left -= q;
      s_left -= q;
    }
  }
  return out;
}

TradeAllocation allocation_for(const ClearingOutcome& out, int mg_id) {
  TradeAllocation t;
  t.mg_id = mg_id;
  t.bought_kwh = out.bought_by(mg_id);
  t.sold_kwh = out.sold_by(mg_id);
  if (t.bought_kwh > 0.0) t.buy_unit_price = out.buy_clearing_price;
  if (t.sold_kwh > 0.0) t.sell_unit_price = out.sell_clearing_price;
  return t;
}

double budget_check(const ClearingOutcome& out) {
  double surplus = 0.0;
  for (const auto& [pair, q] : out.allocations) {
    surplus += out.buy_clearing_price * q - out.sell_clearing_price * q;
  }
  if (surplus < 0.0) {
    throw InvariantViolation("auctioneer surplus negative: " + format_fixed(surplus));
  }
  return surplus;
}

void write_market_audit_header(std::ostream& os) {
  os << "slot,mg_id,side,price,quantity,accepted,cleared_price,cleared_quantity\n";
}

void write_market_audit(std::ostream& os, int slot, const OrderBook& book,
                        const ClearingOutcome& out) {
  auto row = [&](const BookEntry& e, const char* side, bool accepted, double price, double qty) {
    os << slot << ',' << e.mg_id << ',' << side << ',' << format_fixed(e.price) << ','
       << format_fixed(e.quantity_kwh) << ',' << (accepted ? 1 : 0) << ','
       << format_fixed(accepted ? price : 0.0) << ',' << format_fixed(qty) << '\n';
  };
  for (const auto& e : book.buy_bids) {
    const bool acc = std::find(out.accepted_buyers.begin(), out.accepted_buyers.end(), e.mg_id) !=
                     out.accepted_buyers.end();
    row(e, "buy", acc, out.buy_clearing_price, out.bought_by(e.mg_id));
  }
  for (const auto& e : book.sell_bids) {
    const bool acc = std::find(out.accepted_sellers.begin(), out.accepted_sellers.end(),
                               e.mg_id) != out.accepted_sellers.end();
    row(e, "sell", acc, out.sell_clearing_price, out.sold_by(e.mg_id));
  }
}

}  // namespace mgtrade
