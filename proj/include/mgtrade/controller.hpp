#pragma once

// Per-microgrid drift-plus-penalty agent.
//
// Each slot runs in two stages around the market: make_bids() reports the
// MG's valuation-derived bids, the auction clears, and solve_slot_program()
// picks (C, D, J, G) given the cleared trade. The per-slot objective is
//
//   X (C - D) - J (Q + Z) + V U,   U = P G + beta_hat * bought - alpha_hat * sold
//
// where the trade terms are constants once the market has cleared.

#include "mgtrade/model.hpp"

namespace mgtrade {

struct BidPair {
  int mg_id = 0;
  double sell_price = 0.0;
  double buy_price = 0.0;
  double sell_quantity_kwh = 0.0;
  double buy_quantity_kwh = 0.0;

  bool has_sell() const noexcept { return sell_quantity_kwh > 0.0; }
  bool has_buy() const noexcept { return buy_quantity_kwh > 0.0; }
};

struct TradeAllocation {
  int mg_id = 0;
  double bought_kwh = 0.0;
  double sold_kwh = 0.0;
  double buy_unit_price = 0.0;
  double sell_unit_price = 0.0;
};

/// (Q + Z) / V: what serving one more kWh of backlog is worth to the MG.
double marginal_value(const MGState& s, const MGParams& p);

BidPair make_bids(const MGState& s, const SlotInputs& in, const MGParams& p);

/// Exact minimizer of the per-slot program for a fixed trade.
///
/// Solved as two small LPs (charge branch D = 0, discharge branch C = 0) by
/// vertex enumeration. Throws RejectedAction for a malformed trade.
ControlAction solve_slot_program(const MGState& s, const SlotInputs& in,
                                 const TradeAllocation& trade, const MGParams& p);

/// U(t) for the action and its trade.
double post_trade_settlement(const ControlAction& a, const TradeAllocation& trade,
                             const SlotInputs& in);

/// Full per-slot objective including V times the settlement.
double slot_objective(const MGState& s, const ControlAction& a, const TradeAllocation& trade,
                      const SlotInputs& in, const MGParams& p);

/// Energy left unused after the action (renewable spill or surplus purchase).
double spilled_energy(const ControlAction& a, const SlotInputs& in);

}  // namespace mgtrade
