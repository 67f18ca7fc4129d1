#include <doctest.h>

#include "mgtrade/model.hpp"

using namespace mgtrade;

namespace {

MGParams small_params() {
  MGParams p;
  p.id = 1;
  p.battery_capacity_kwh = 3000;
  p.charge_rate_max_kwh = 1500;
  p.discharge_rate_max_kwh = 1500;
  p.serve_rate_max_kwh = 1500;
  p.dt_load_max_kwh = 400;
  p.epsilon = 100;
  p.epsilon_max = 100;
  p.price_floor = 1;
  p.v_weight = 1;
  return p;
}

MGState state_with_battery(double b) {
  MGState s;
  s.battery_kwh = b;
  return s;
}

}  // namespace

TEST_CASE("battery_step adds charge and removes discharge") {
  const MGParams p = small_params();
  ControlAction a;
  a.charge_kwh = 50;
  CHECK(battery_step(state_with_battery(100), a, p, 0).battery_kwh == 150);
  CHECK(battery_step(state_with_battery(100), ControlAction{}, p, 0).battery_kwh == 100);
}

TEST_CASE("battery_step keeps X tied to B") {
  const MGParams p = small_params();
  ControlAction a;
  a.discharge_kwh = 40;
  const MGState s = battery_step(state_with_battery(100), a, p, 500);
  CHECK(s.virtual_battery_kwh == doctest::Approx(60 - 500 - 1500));
}

TEST_CASE("charging past capacity is rejected with the constraint named") {
  const MGParams p = small_params();
  ControlAction a;
  a.charge_kwh = 200;  // only 100 kWh of headroom at B = 2900
  try {
    battery_step(state_with_battery(2900), a, p, 0);
    FAIL("expected RejectedAction");
  } catch (const RejectedAction& e) {
    CHECK(e.constraint() == "charge");
  }
}

TEST_CASE("simultaneous charge and discharge is rejected") {
  const MGParams p = small_params();
  ControlAction a;
  a.charge_kwh = 1;
  a.discharge_kwh = 1;
  CHECK_THROWS_AS(battery_step(state_with_battery(100), a, p, 0), RejectedAction);
}

TEST_CASE("discharging more than stored is rejected") {
  const MGParams p = small_params();
  ControlAction a;
  a.discharge_kwh = 101;
  CHECK_THROWS_AS(battery_step(state_with_battery(100), a, p, 0), RejectedAction);
}

TEST_CASE("demand queue") {
  ControlAction a;
  SlotInputs in;
  MGState s;

  SUBCASE("serve 4 of 10, 3 arrive") {
    s.demand_queue_kwh = 10;
    s.pending_jobs.push_back({0, 10});
    a.serve_dt_kwh = 4;
    in.dt_load_kwh = 3;
    const MGState n = demand_queue_step(s, a, in, 1);
    CHECK(n.demand_queue_kwh == 9);
    REQUIRE(n.pending_jobs.size() == 2);
    CHECK(n.pending_jobs[0].remaining_kwh == 6);
    CHECK(n.pending_jobs[1].arrival_slot == 1);
  }
  SUBCASE("over-service clamps at zero") {
    s.demand_queue_kwh = 2;
    s.pending_jobs.push_back({0, 2});
    a.serve_dt_kwh = 5;
    const MGState n = demand_queue_step(s, a, in, 1);
    CHECK(n.demand_queue_kwh == 0);
    CHECK(n.pending_jobs.empty());
  }
  SUBCASE("arrival only") {
    in.dt_load_kwh = 7;
    const MGState n = demand_queue_step(s, a, in, 0);
    CHECK(n.demand_queue_kwh == 7);
    CHECK(n.pending_jobs.size() == 1);
  }
}

TEST_CASE("delay queue uses the backlog from the start of the slot") {
  MGParams p = small_params();
  ControlAction a;
  MGState s;

  p.epsilon = p.epsilon_max = 1;
  s.delay_queue_kwh = 5;
  a.serve_dt_kwh = 2;
  CHECK(delay_queue_step(s, a, p, 3).delay_queue_kwh == 4);
  CHECK(delay_queue_step(s, a, p, 0).delay_queue_kwh == 3);

  p.epsilon = p.epsilon_max = 2;
  s.delay_queue_kwh = 0;
  a.serve_dt_kwh = 0;
  CHECK(delay_queue_step(s, a, p, 1).delay_queue_kwh == 2);
}

TEST_CASE("drift constant") {
  MGParams p;
  p.epsilon_max = 2;
  p.serve_rate_max_kwh = 4;
  p.charge_rate_max_kwh = 3;
  p.discharge_rate_max_kwh = 5;
  p.dt_load_max_kwh = 6;
  CHECK(compute_a_const(p) == doctest::Approx(48.5));
  CHECK(compute_a_const(MGParams{}) == 0);
  p.epsilon_max = p.serve_rate_max_kwh = p.charge_rate_max_kwh = p.discharge_rate_max_kwh =
      p.dt_load_max_kwh = 1;
  CHECK(compute_a_const(p) == doctest::Approx(2.5));
}

TEST_CASE("V^max") {
  MGParams p = small_params();
  CHECK(compute_v_max(p, {0.02, 0.1}) == doctest::Approx(31250));

  MGParams q;
  q.battery_capacity_kwh = 10;
  q.dt_load_max_kwh = 2;
  q.epsilon_max = 2;
  CHECK(compute_v_max(q, {1, 2}) == doctest::Approx(6));

  q.battery_capacity_kwh = 4;  // numerator 0
  CHECK_THROWS_AS(compute_v_max(q, {1, 2}), ConfigError);
  CHECK_THROWS_AS(compute_v_max(p, {1, 1}), ConfigError);
}

TEST_CASE("derived bounds") {
  MGParams p;
  p.battery_capacity_kwh = 10;
  p.charge_rate_max_kwh = 1;
  p.discharge_rate_max_kwh = 1;
  p.dt_load_max_kwh = 2;
  p.epsilon = 1;
  p.epsilon_max = 2;
  p.v_weight = 6;
  const DerivedBounds b = compute_bounds(p, {1, 2});
  CHECK(b.q_max == 14);
  CHECK(b.z_max == 14);
  CHECK(b.theta == 16);
  CHECK(b.delta_max_slots == 28);
  CHECK(b.theta == b.q_max + p.epsilon_max);
  CHECK(b.theta == b.z_max + p.dt_load_max_kwh);

  p.v_weight = 1e-12;
  CHECK(compute_bounds(p, {1, 2}).q_max == doctest::Approx(p.dt_load_max_kwh));

  p.epsilon = 0;
  CHECK_THROWS_AS(compute_bounds(p, {1, 2}), ConfigError);
}

TEST_CASE("validate_v rejects V above V^max") {
  MGParams p = small_params();
  p.v_weight = 31250;
  CHECK_NOTHROW(validate_v(p, {0.02, 0.1}));
  p.v_weight = 31251;
  CHECK_THROWS_AS(validate_v(p, {0.02, 0.1}), ConfigError);
}

TEST_CASE("check_action enforces balance and renewable-only spill") {
  const MGParams p = small_params();
  MGState s = state_with_battery(1000);
  s.demand_queue_kwh = 50;
  SlotInputs in{100, 80, 0, 0.05};
  ControlAction a;
  a.grid_purchase_kwh = 0;
  CHECK_NOTHROW(check_action(s, a, p, in));  // 20 kWh of renewable spilled

  a.serve_dt_kwh = 50;  // 30 short
  try {
    check_action(s, a, p, in);
    FAIL("expected RejectedAction");
  } catch (const RejectedAction& e) {
    CHECK(e.constraint() == "balance");
  }

  a = ControlAction{};
  a.discharge_kwh = 200;  // battery energy dumped
  CHECK_THROWS_AS(check_action(s, a, p, in), RejectedAction);

  a = ControlAction{};
  a.bought_kwh = 10;
  a.charge_kwh = 110;  // charging from purchased energy
  CHECK_THROWS_AS(check_action(s, a, p, in), RejectedAction);
}

TEST_CASE("advance keeps pending jobs equal to the backlog") {
  const MGParams p = small_params();
  MGState s = initial_state(1000, 200, p);
  const double in_t[] = {120, 0, 300, 40, 0, 75};
  const double serve[] = {0, 100, 50, 300, 10, 0};
  for (int t = 0; t < 6; ++t) {
    SlotInputs in{0, 0, in_t[t], 0.05};
    ControlAction a;
    a.serve_dt_kwh = std::min(serve[t], s.demand_queue_kwh);
    s = advance(s, a, in, p, 200, t);
    double sum = 0;
    for (const PendingJob& j : s.pending_jobs) sum += j.remaining_kwh;
    CHECK(sum == doctest::Approx(s.demand_queue_kwh));
  }
}

TEST_CASE("oldest job age") {
  MGState s;
  CHECK(oldest_job_age(s, 10) == 0);
  s.pending_jobs.push_back({3, 1});
  s.pending_jobs.push_back({7, 1});
  CHECK(oldest_job_age(s, 10) == 7);
}

TEST_CASE("parameter validation") {
  MGParams p = small_params();
  CHECK_NOTHROW(p.validate());
  p.charge_rate_max_kwh = 4000;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = small_params();
  p.epsilon = 200;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  CHECK_THROWS_AS((PriceBounds{2, 1}.validate()), ConfigError);
}
