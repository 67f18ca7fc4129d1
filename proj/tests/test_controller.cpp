#include <doctest.h>

#include <random>

#include "mgtrade/controller.hpp"
#include "oracles.hpp"

using namespace mgtrade;

namespace {

MGParams params(double v = 10) {
  MGParams p;
  p.id = 3;
  p.battery_capacity_kwh = 3000;
  p.charge_rate_max_kwh = 1500;
  p.discharge_rate_max_kwh = 1500;
  p.serve_rate_max_kwh = 150;
  p.dt_load_max_kwh = 200;
  p.epsilon = 100;
  p.epsilon_max = 100;
  p.price_floor = 1;
  p.v_weight = v;
  return p;
}

MGState queues(double q, double z) {
  MGState s;
  s.demand_queue_kwh = q;
  s.delay_queue_kwh = z;
  return s;
}

}  // namespace

TEST_CASE("marginal value") {
  CHECK(marginal_value(queues(0, 0), params(1)) == 0);
  CHECK(marginal_value(queues(10, 4), params(2)) == 7);
  CHECK(marginal_value(queues(14, 14), params(6)) == doctest::Approx(14.0 / 3.0));
}

TEST_CASE("surplus MG sells at its valuation") {
  const BidPair b = make_bids(queues(0, 0), SlotInputs{300, 100, 0, 0.05}, params());
  CHECK(b.has_sell());
  CHECK_FALSE(b.has_buy());
  CHECK(b.sell_quantity_kwh == 200);
  CHECK(b.sell_price == 0);
  CHECK(b.mg_id == 3);
}

TEST_CASE("deficit MG buys serving capacity") {
  const BidPair b = make_bids(queues(200, 100), SlotInputs{0, 50, 0, 0.05}, params(10));
  CHECK(b.has_buy());
  CHECK_FALSE(b.has_sell());
  CHECK(b.buy_price == 30);
  CHECK(b.buy_quantity_kwh == 150);  // J^max
}

TEST_CASE("buy quantity is clamped to the backlog") {
  const BidPair b = make_bids(queues(40, 0), SlotInputs{0, 50, 0, 0.05}, params(10));
  CHECK(b.buy_quantity_kwh == 40);
}

TEST_CASE("buy price floor binds for empty queues") {
  const BidPair b = make_bids(queues(0, 0), SlotInputs{0, 50, 0, 0.05}, params());
  CHECK(b.buy_price == 1);
  CHECK(b.buy_quantity_kwh == 0);
}

TEST_CASE("bids are monotone in the backlog and never two-sided") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0, 500);
  const MGParams p = params(25);
  for (int k = 0; k < 500; ++k) {
    const double q = u(rng), z = u(rng), extra = u(rng);
    const SlotInputs in{u(rng), u(rng), 0, 0.05};
    const BidPair lo = make_bids(queues(q, z), in, p);
    const BidPair hi = make_bids(queues(q + extra, z), in, p);
    CHECK(hi.sell_price >= lo.sell_price);
    CHECK(hi.buy_price >= lo.buy_price);
    CHECK_FALSE((lo.has_buy() && lo.has_sell()));
    CHECK(lo.buy_price >= p.price_floor);
  }
}

TEST_CASE("settlement") {
  ControlAction a;
  TradeAllocation t;
  a.grid_purchase_kwh = 100;
  CHECK(post_trade_settlement(a, t, SlotInputs{0, 0, 0, 0.05}) == doctest::Approx(5.0));

  a = ControlAction{};
  t.bought_kwh = 50;
  t.buy_unit_price = 2;
  CHECK(post_trade_settlement(a, t, SlotInputs{}) == 100);

  t = TradeAllocation{};
  t.sold_kwh = 80;
  t.sell_unit_price = 1.5;
  CHECK(post_trade_settlement(a, t, SlotInputs{}) == -120);
}

TEST_CASE("battery below threshold charges from free surplus") {
  const MGParams p = params(10);
  MGState s;
  s.battery_kwh = 500;
  s.virtual_battery_kwh = -2000;
  const ControlAction a = solve_slot_program(s, SlotInputs{400, 100, 0, 0.05}, {}, p);
  CHECK(a.charge_kwh > 0);
  CHECK(a.discharge_kwh == 0);
}

TEST_CASE("full buffer with no backlog buys only the shortfall") {
  const MGParams p = params(10);
  MGState s;
  s.battery_kwh = 0;  // nothing to discharge
  s.virtual_battery_kwh = 10;
  TradeAllocation t;
  t.bought_kwh = 0;
  const SlotInputs in{30, 100, 0, 0.05};
  const ControlAction a = solve_slot_program(s, in, t, p);
  CHECK(a.serve_dt_kwh == 0);
  CHECK(a.charge_kwh == 0);
  CHECK(a.grid_purchase_kwh == doctest::Approx(70));
}

TEST_CASE("zero inputs and queues give the zero action") {
  const ControlAction a = solve_slot_program(MGState{}, SlotInputs{}, {}, params());
  CHECK(a.charge_kwh == 0);
  CHECK(a.discharge_kwh == 0);
  CHECK(a.serve_dt_kwh == 0);
  CHECK(a.grid_purchase_kwh == 0);
}

TEST_CASE("malformed trade is rejected") {
  TradeAllocation t;
  t.bought_kwh = 1;
  t.sold_kwh = 1;
  CHECK_THROWS_AS(solve_slot_program(MGState{}, SlotInputs{}, t, params()), RejectedAction);
  t = TradeAllocation{};
  t.bought_kwh = -1;
  CHECK_THROWS_AS(solve_slot_program(MGState{}, SlotInputs{}, t, params()), RejectedAction);
}

TEST_CASE("slot program matches grid search and has the threshold structure") {
  std::mt19937_64 rng(12);
  auto ui = [&](int lo, int hi) { return static_cast<double>(std::uniform_int_distribution<int>(lo, hi)(rng)); };
  for (int k = 0; k < 300; ++k) {
    MGParams p;
    p.battery_capacity_kwh = ui(5, 40);
    p.charge_rate_max_kwh = ui(0, static_cast<int>(p.battery_capacity_kwh));
    p.discharge_rate_max_kwh = ui(0, 40);
    p.serve_rate_max_kwh = ui(0, 40);
    p.v_weight = ui(1, 8);
    const double p_max = 4;
    MGState s;
    s.battery_kwh = ui(0, static_cast<int>(p.battery_capacity_kwh));
    s.demand_queue_kwh = ui(0, 40);
    s.delay_queue_kwh = ui(0, 40);
    s.virtual_battery_kwh = s.battery_kwh - ui(0, 80) - p.discharge_rate_max_kwh;
    const SlotInputs in{ui(0, 40), ui(0, 40), 0, ui(1, 4)};
    TradeAllocation t;
    if (ui(0, 1) == 1 && in.renewable_kwh > in.di_load_kwh) {
      t.sold_kwh = ui(0, static_cast<int>(in.renewable_kwh - in.di_load_kwh));
      t.sell_unit_price = 0.5;
    }
    const ControlAction a = solve_slot_program(s, in, t, p);
    CHECK_NOTHROW(check_action(s, a, p, in));
    const oracle::GridBest ref = oracle::slot_program_grid(s, in, t, p);
    const double got = slot_objective(s, a, t, in, p);
    CHECK(got <= ref.objective + 1e-9);
    CHECK(ref.objective - got <= ref.cell_increment + 1e-9);
    if (s.virtual_battery_kwh > 0) CHECK(a.charge_kwh == 0);
    if (s.virtual_battery_kwh < -p.v_weight * p_max) CHECK(a.discharge_kwh == 0);
  }
}

TEST_CASE("spilled energy is renewable surplus") {
  ControlAction a;
  a.charge_kwh = 10;
  CHECK(spilled_energy(a, SlotInputs{100, 50, 0, 0}) == 40);
  a.charge_kwh = 60;
  a.grid_purchase_kwh = 10;
  CHECK(spilled_energy(a, SlotInputs{100, 50, 0, 0}) == 0);
}
