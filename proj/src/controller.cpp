#include "mgtrade/controller.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "mgtrade/lp.hpp"

namespace mgtrade {

double marginal_value(const MGState& s, const MGParams& p) {
  return (s.demand_queue_kwh + s.delay_queue_kwh) / p.v_weight;
}

BidPair make_bids(const MGState& s, const SlotInputs& in, const MGParams& p) {
  BidPair bid;
  bid.mg_id = p.id;
  const double value = marginal_value(s, p);
  bid.sell_price = value;
  bid.buy_price = std::max(value, p.price_floor);

  // Surplus after delay-intolerant load is offered; otherwise the MG asks for
  // serving capacity not covered by its own generation, capped at the backlog.
  const double surplus = in.renewable_kwh - in.di_load_kwh;
  if (surplus > 0.0) {
    bid.sell_quantity_kwh = surplus;
  } else {
    bid.buy_quantity_kwh =
        std::clamp(p.serve_rate_max_kwh - in.renewable_kwh, 0.0, s.demand_queue_kwh);
  }
  return bid;
}

namespace {

void check_trade(const TradeAllocation& t) {
  for (double v : {t.bought_kwh, t.sold_kwh, t.buy_unit_price, t.sell_unit_price}) {
    if (!std::isfinite(v) || v < 0.0) {
      throw RejectedAction("trade", "negative or non-finite trade field");
    }
  }
  if (t.bought_kwh > 0.0 && t.sold_kwh > 0.0) {
    throw RejectedAction("trade", "MG both buys and sells in one slot");
  }
}

double snap(double v, double hi) {
  if (std::abs(v) < 1e-9) return 0.0;
  if (v > hi && v - hi < 1e-9 * std::max(1.0, hi)) return hi;
  return v;
}

}  // namespace

ControlAction solve_slot_program(const MGState& s, const SlotInputs& in,
                                 const TradeAllocation& trade, const MGParams& p) {
  check_trade(trade);
  const double x = s.virtual_battery_kwh;
  const double backlog_weight = s.demand_queue_kwh + s.delay_queue_kwh;
  const double grid_weight = p.v_weight * in.grid_price;
  const double c_cap = std::max(0.0, std::min(p.battery_capacity_kwh - s.battery_kwh,
                                              p.charge_rate_max_kwh));
  const double d_cap = std::max(0.0, std::min(s.battery_kwh, p.discharge_rate_max_kwh));
  const double j_cap = std::max(0.0, std::min(p.serve_rate_max_kwh, s.demand_queue_kwh));
  const double g_cap = in.di_load_kwh + j_cap + trade.sold_kwh + c_cap + 1.0;
  // balance: I + J + sold + C <= R + G + D + bought
  const double balance_rhs = in.renewable_kwh + trade.bought_kwh - in.di_load_kwh - trade.sold_kwh;
  // auction purchases serve loads only: C + sold <= R + G + D
  const double own_rhs = in.renewable_kwh - trade.sold_kwh;
  // only renewable energy may be spilled: G + D + bought <= I + J + sold + C
  const double waste_rhs = in.di_load_kwh + trade.sold_kwh - trade.bought_kwh;

  // Variables: (storage, J, G); storage is C in the charge branch, D in the
  // discharge branch, entering with sign `dir`.
  auto branch = [&](double dir, double storage_cap) {
    const std::array<double, 3> cost{dir * x, -backlog_weight, grid_weight};
    const std::array<lp::HalfSpace, 9> rows{{
        {{-1.0, 0.0, 0.0}, 0.0},
        {{1.0, 0.0, 0.0}, storage_cap},
        {{0.0, -1.0, 0.0}, 0.0},
        {{0.0, 1.0, 0.0}, j_cap},
        {{0.0, 0.0, -1.0}, 0.0},
        {{0.0, 0.0, 1.0}, g_cap},
        {{dir, 1.0, -1.0}, balance_rhs},
        {{dir, 0.0, -1.0}, own_rhs},
        {{-dir, -1.0, 1.0}, waste_rhs},
    }};
    return lp::minimize_by_vertices(cost, rows);
  };

  const lp::VertexResult charge = branch(1.0, c_cap);
  const lp::VertexResult discharge = branch(-1.0, d_cap);
  if (!charge.feasible && !discharge.feasible) {
    throw RejectedAction("balance", "no feasible action for the cleared trade");
  }

  ControlAction a;
  a.bought_kwh = trade.bought_kwh;
  a.sold_kwh = trade.sold_kwh;
  bool use_discharge = !charge.feasible;
  if (charge.feasible && discharge.feasible) {
    const double scale = std::max({1.0, std::abs(charge.objective), std::abs(discharge.objective)});
    if (discharge.objective < charge.objective - 1e-12 * scale) {
      use_discharge = true;
    } else if (discharge.objective <= charge.objective + 1e-12 * scale) {
      const double cs = charge.x[0] + charge.x[1] + charge.x[2];
      const double ds = discharge.x[0] + discharge.x[1] + discharge.x[2];
      use_discharge = ds < cs - 1e-12;
    }
  }
  const lp::VertexResult& best = use_discharge ? discharge : charge;
  if (use_discharge) {
    a.discharge_kwh = snap(best.x[0], d_cap);
  } else {
    a.charge_kwh = snap(best.x[0], c_cap);
  }
  a.serve_dt_kwh = snap(best.x[1], j_cap);
  a.grid_purchase_kwh = snap(best.x[2], g_cap);
  return a;
}

double post_trade_settlement(const ControlAction& a, const TradeAllocation& trade,
                             const SlotInputs& in) {
  return in.grid_price * a.grid_purchase_kwh + trade.buy_unit_price * trade.bought_kwh -
         trade.sell_unit_price * trade.sold_kwh;
}

double slot_objective(const MGState& s, const ControlAction& a, const TradeAllocation& trade,
                      const SlotInputs& in, const MGParams& p) {
  return s.virtual_battery_kwh * (a.charge_kwh - a.discharge_kwh) -
         a.serve_dt_kwh * (s.demand_queue_kwh + s.delay_queue_kwh) +
         p.v_weight * post_trade_settlement(a, trade, in);
}

double spilled_energy(const ControlAction& a, const SlotInputs& in) {
  const double supply = in.renewable_kwh + a.grid_purchase_kwh + a.discharge_kwh + a.bought_kwh;
  const double demand = in.di_load_kwh + a.serve_dt_kwh + a.sold_kwh + a.charge_kwh;
  return std::max(0.0, supply - demand);
}

}  // namespace mgtrade
