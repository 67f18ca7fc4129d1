#include "mgtrade/sim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mgtrade/lp.hpp"
#include "mgtrade/report.hpp"

namespace mgtrade {

const char* mode_name(Mode m) { return m == Mode::WithAuction ? "auction" : "solo"; }

void ScenarioConfig::finalize() {
  if (horizon_slots < 1) throw ConfigError("horizon_slots must be >= 1");
  if (microgrids.empty()) throw ConfigError("scenario needs at least one microgrid");
  if (!(rho1 > 0.0) || !(rho2 > 0.0)) throw ConfigError("rho1 and rho2 must be > 0");
  price_bounds.validate();
  std::vector<int> ids;
  for (MGConfig& mg : microgrids) {
    if (mg.v_fraction) {
      if (!(*mg.v_fraction > 0.0) || *mg.v_fraction > 1.0) {
        throw ConfigError("MG " + std::to_string(mg.params.id) + ": v_fraction must be in (0, 1]");
      }
      mg.params.v_weight = *mg.v_fraction * compute_v_max(mg.params, price_bounds);
    }
    mg.params.validate();
    validate_v(mg.params, price_bounds);
    if (!(mg.load_low_kwh >= 0.0) || mg.load_high_kwh < mg.load_low_kwh) {
      throw ConfigError("MG " + std::to_string(mg.params.id) + ": load bounds need 0 <= low <= high");
    }
    if (mg.load_high_kwh > mg.params.dt_load_max_kwh + kEnergyTol) {
      throw ConfigError("MG " + std::to_string(mg.params.id) + ": load_high exceeds dt_load_max");
    }
    if (!(mg.renewable_mean_kwh >= 0.0)) throw ConfigError("renewable mean must be >= 0");
    if (std::find(ids.begin(), ids.end(), mg.params.id) != ids.end()) {
      throw ConfigError("duplicate MG id " + std::to_string(mg.params.id));
    }
    ids.push_back(mg.params.id);
  }
}

ScenarioConfig default_scenario(std::uint64_t seed) {
  ScenarioConfig cfg;
  cfg.seed = seed;
  cfg.price_bounds = {0.02, 0.10};
  for (int i = 1; i <= 6; ++i) {
    MGConfig mg;
    const bool type1 = i <= 3;
    mg.type = type1 ? MGType::Type1 : MGType::Type2;
    mg.load_low_kwh = type1 ? 100.0 : 200.0;
    mg.load_high_kwh = type1 ? 200.0 : 400.0;
    mg.renewable_mean_kwh = type1 ? 200.0 : 600.0;
    MGParams& p = mg.params;
    p.id = i;
    p.battery_capacity_kwh = 3000.0;
    p.charge_rate_max_kwh = 1500.0;
    p.discharge_rate_max_kwh = 1500.0;
    p.serve_rate_max_kwh = 1500.0;
    p.dt_load_max_kwh = mg.load_high_kwh;
    p.epsilon = mg.load_low_kwh;
    p.epsilon_max = mg.load_low_kwh;
    p.price_floor = 1.0;
    mg.v_fraction = 1.0;
    mg.wind.seed_offset = static_cast<std::uint64_t>(i);
    cfg.microgrids.push_back(mg);
  }
  cfg.finalize();
  return cfg;
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Trace resolve_trace(const TraceSource& src, const std::filesystem::path& base_dir,
                    const std::string& what) {
  std::filesystem::path path = src.path;
  if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
  Trace t = load_trace(path, src.column);
  t.name = what;
  return t;
}

}  // namespace

ScenarioInputs build_inputs(const ScenarioConfig& config, const std::filesystem::path& base_dir) {
  const int horizon = config.horizon_slots;
  Trace price = config.price.path.empty()
                    ? synthetic_price(horizon, mix_seed(config.seed, 1000 + config.price.seed_offset),
                                      config.price_bounds)
                    : resolve_trace(config.price, base_dir, "price");
  if (static_cast<int>(price.slot_count()) < horizon) {
    throw DataError("price trace has " + std::to_string(price.slot_count()) +
                    " slots, horizon needs " + std::to_string(horizon));
  }
  for (int t = 0; t < horizon; ++t) {
    const double p = price.values[static_cast<std::size_t>(t)];
    if (p < config.price_bounds.p_min - 1e-12 || p > config.price_bounds.p_max + 1e-12) {
      throw DataError("price at slot " + std::to_string(t) + " outside [p_min, p_max]");
    }
  }

  ScenarioInputs inputs(static_cast<std::size_t>(horizon),
                        std::vector<SlotInputs>(config.microgrids.size()));
  for (std::size_t m = 0; m < config.microgrids.size(); ++m) {
    const MGConfig& mg = config.microgrids[m];
    Trace raw = mg.wind.path.empty()
                    ? synthetic_wind(horizon, mix_seed(config.seed, 2000 + mg.wind.seed_offset))
                    : resolve_trace(mg.wind, base_dir, "wind");
    if (static_cast<int>(raw.slot_count()) < horizon) {
      throw DataError("wind trace for MG " + std::to_string(mg.params.id) + " has " +
                      std::to_string(raw.slot_count()) + " slots, horizon needs " +
                      std::to_string(horizon));
    }
    raw.values.resize(static_cast<std::size_t>(horizon));
    const Trace wind = mg.renewable_mean_kwh > 0.0 ? scale_wind(raw, mg.renewable_mean_kwh)
                                                   : Trace{"wind", "kWh", std::vector<double>(raw.values.size(), 0.0)};
    LoadModel loads;
    loads.mg_type = mg.type;
    loads.low_kwh = mg.load_low_kwh;
    loads.high_kwh = mg.load_high_kwh;
    loads.rng_seed = mix_seed(config.seed, 3000 + static_cast<std::uint64_t>(mg.params.id));
    loads.validate();
    for (int t = 0; t < horizon; ++t) {
      const LoadDraw d = draw_loads(loads, t);
      SlotInputs& in = inputs[static_cast<std::size_t>(t)][m];
      in.renewable_kwh = wind.values[static_cast<std::size_t>(t)];
      in.di_load_kwh = d.di_kwh;
      in.dt_load_kwh = d.dt_kwh;
      in.grid_price = price.values[static_cast<std::size_t>(t)];
    }
  }
  return inputs;
}

World World::create(ScenarioConfig config) {
  config.finalize();
  World w;
  for (const MGConfig& mg : config.microgrids) {
    const DerivedBounds b = compute_bounds(mg.params, config.price_bounds);
    const double b0 = mg.initial_battery_kwh.value_or(
        std::clamp(b.theta + mg.params.discharge_rate_max_kwh, 0.0, mg.params.battery_capacity_kwh));
    w.bounds.push_back(b);
    w.states.push_back(initial_state(b0, b.theta, mg.params));
  }
  w.config = std::move(config);
  return w;
}

namespace {

void flag(std::vector<Violation>& out, int slot, int mg, const char* check, double value,
          double limit) {
  out.push_back({slot, mg, check, format_fixed(value) + " vs limit " + format_fixed(limit)});
}

constexpr double kInvTol = 1e-9;

}  // namespace

void check_state(const MGState& s, const MGParams& p, const DerivedBounds& b, int slot,
                 std::vector<Violation>& out) {
  const int id = p.id;
  if (s.battery_kwh < -kInvTol) flag(out, slot, id, "battery>=0", s.battery_kwh, 0.0);
  if (s.battery_kwh > p.battery_capacity_kwh + kInvTol) {
    flag(out, slot, id, "battery<=capacity", s.battery_kwh, p.battery_capacity_kwh);
  }
  if (s.demand_queue_kwh < -kInvTol) flag(out, slot, id, "Q>=0", s.demand_queue_kwh, 0.0);
  if (s.demand_queue_kwh > b.q_max + kInvTol) flag(out, slot, id, "Q<=Q_max", s.demand_queue_kwh, b.q_max);
  if (s.delay_queue_kwh < -kInvTol) flag(out, slot, id, "Z>=0", s.delay_queue_kwh, 0.0);
  if (s.delay_queue_kwh > b.z_max + kInvTol) flag(out, slot, id, "Z<=Z_max", s.delay_queue_kwh, b.z_max);
  const double x_lo = -b.theta - p.discharge_rate_max_kwh;
  const double x_hi = p.battery_capacity_kwh - b.theta - p.discharge_rate_max_kwh;
  if (s.virtual_battery_kwh < x_lo - kInvTol) flag(out, slot, id, "X>=lower", s.virtual_battery_kwh, x_lo);
  if (s.virtual_battery_kwh > x_hi + kInvTol) flag(out, slot, id, "X<=upper", s.virtual_battery_kwh, x_hi);
  const double x_expected = virtual_battery(s.battery_kwh, b.theta, p);
  if (std::abs(s.virtual_battery_kwh - x_expected) > kInvTol) {
    flag(out, slot, id, "X=B-theta-Dmax", s.virtual_battery_kwh, x_expected);
  }
  const int age = oldest_job_age(s, slot);
  if (static_cast<double>(age) > b.delta_max_slots + kInvTol) {
    flag(out, slot, id, "job_age<=delta_max", age, b.delta_max_slots);
  }
  double pending = 0.0;
  for (const PendingJob& j : s.pending_jobs) pending += j.remaining_kwh;
  const double tol = kInvTol * std::max(1.0, s.demand_queue_kwh);
  if (std::abs(pending - s.demand_queue_kwh) > tol * 1e3) {
    flag(out, slot, id, "pending_jobs=Q", pending, s.demand_queue_kwh);
  }
}

SlotRecord step(World& world, const std::vector<SlotInputs>& inputs) {
  const auto& cfg = world.config;
  const std::size_t n = cfg.microgrids.size();
  if (inputs.size() != n) throw DataError("slot inputs do not match the number of MGs");
  SlotRecord rec;
  rec.slot = world.slot;
  try {
    std::vector<BidPair> bids;
    for (std::size_t m = 0; m < n; ++m) {
      bids.push_back(make_bids(world.states[m], inputs[m], cfg.microgrids[m].params));
    }
    const double grid_price = inputs.front().grid_price;
    for (const SlotInputs& in : inputs) {
      if (in.grid_price != grid_price) throw DataError("MGs see different grid prices in one slot");
    }
    if (cfg.mode == Mode::WithAuction) {
      rec.market.book = OrderBook::from_bids(bids, cfg.rho1, cfg.rho2);
      rec.market.outcome = clear(rec.market.book, grid_price);
      rec.market.surplus = budget_check(rec.market.outcome);
    }
    for (std::size_t m = 0; m < n; ++m) {
      const MGParams& p = cfg.microgrids[m].params;
      MGSlotRecord r;
      r.mg_id = p.id;
      r.state = world.states[m];
      r.inputs = inputs[m];
      r.bids = bids[m];
      r.trade = allocation_for(rec.market.outcome, p.id);
      r.action = solve_slot_program(r.state, r.inputs, r.trade, p);
      check_action(r.state, r.action, p, r.inputs);
      r.cost = post_trade_settlement(r.action, r.trade, r.inputs);
      r.spill_kwh = spilled_energy(r.action, r.inputs);
      r.oldest_job_age = oldest_job_age(r.state, world.slot);
      world.states[m] = advance(r.state, r.action, r.inputs, p, world.bounds[m].theta, world.slot);
      rec.mgs.push_back(std::move(r));
    }
  } catch (const Error& e) {
    const std::string msg = "slot " + std::to_string(world.slot) + ": " + e.what();
    if (dynamic_cast<const DataError*>(&e)) throw DataError(msg);
    if (dynamic_cast<const ConfigError*>(&e)) throw ConfigError(msg);
    throw InvariantViolation(msg);
  }
  ++world.slot;
  return rec;
}

RunSummary summarize(Mode mode, const std::vector<SlotRecord>& records, int violation_count) {
  RunSummary s;
  s.mode = mode;
  s.horizon = static_cast<int>(records.size());
  s.violation_count = violation_count;
  if (records.empty()) return s;
  const std::size_t n = records.front().mgs.size();
  s.mgs.resize(n);
  for (std::size_t m = 0; m < n; ++m) s.mgs[m].mg_id = records.front().mgs[m].mg_id;
  for (const SlotRecord& rec : records) {
    for (std::size_t m = 0; m < n; ++m) {
      const MGSlotRecord& r = rec.mgs[m];
      MGSummary& ms = s.mgs[m];
      ms.time_average_cost += r.cost;
      ms.total_grid_kwh += r.action.grid_purchase_kwh;
      ms.total_bought_kwh += r.trade.bought_kwh;
      ms.total_sold_kwh += r.trade.sold_kwh;
      ms.total_spill_kwh += r.spill_kwh;
      ms.max_job_age = std::max(ms.max_job_age, r.oldest_job_age);
    }
    s.total_auctioneer_surplus += rec.market.surplus;
  }
  for (MGSummary& ms : s.mgs) {
    ms.time_average_cost /= static_cast<double>(s.horizon);
    s.mean_time_average_cost += ms.time_average_cost;
    s.total_grid_kwh += ms.total_grid_kwh;
    s.total_traded_kwh += ms.total_bought_kwh;
    s.max_job_age = std::max(s.max_job_age, ms.max_job_age);
  }
  s.mean_time_average_cost /= static_cast<double>(n);
  return s;
}

RunResult run(const ScenarioConfig& config, const ScenarioInputs& inputs) {
  World world = World::create(config);
  const int horizon = world.config.horizon_slots;
  if (static_cast<int>(inputs.size()) < horizon) {
    throw DataError("inputs cover " + std::to_string(inputs.size()) + " slots, horizon is " +
                    std::to_string(horizon));
  }
  RunResult res;
  res.bounds = world.bounds;
  const std::size_t n = world.config.microgrids.size();
  for (int t = 0; t < horizon; ++t) {
    for (std::size_t m = 0; m < n; ++m) {
      check_state(world.states[m], world.config.microgrids[m].params, world.bounds[m], t,
                  res.violations);
    }
    res.records.push_back(step(world, inputs[static_cast<std::size_t>(t)]));
  }
  for (std::size_t m = 0; m < n; ++m) {
    check_state(world.states[m], world.config.microgrids[m].params, world.bounds[m], horizon,
                res.violations);
  }
  res.final_states = world.states;
  res.summary = summarize(world.config.mode, res.records, static_cast<int>(res.violations.size()));
  return res;
}

OracleResult offline_oracle(const ScenarioConfig& config_in, const ScenarioInputs& inputs,
                            const std::vector<OracleTerminal>& terminal) {
  ScenarioConfig config = config_in;
  config.finalize();
  const int horizon = config.horizon_slots;
  const std::size_t n = config.microgrids.size();
  if (horizon > 48 || n > 3) {
    throw ConfigError("offline oracle limited to 48 slots and 3 MGs");
  }
  if (static_cast<int>(inputs.size()) < horizon) throw DataError("inputs shorter than horizon");
  if (!terminal.empty() && terminal.size() != n) throw ConfigError("one terminal spec per MG");

  const World world = World::create(config);
  OracleResult res;
  for (std::size_t m = 0; m < n; ++m) {
    const MGParams& p = config.microgrids[m].params;
    const double b0 = world.states[m].battery_kwh;
    const double q0 = world.states[m].demand_queue_kwh;
    // Variables per slot t: C = 4t, D = 4t+1, J = 4t+2, G = 4t+3.
    lp::Problem prob;
    prob.num_vars = 4 * horizon;
    prob.objective.assign(static_cast<std::size_t>(prob.num_vars), 0.0);
    auto var = [](int t, int k) { return 4 * t + k; };
    double arrived = 0.0;
    for (int t = 0; t < horizon; ++t) {
      const SlotInputs& in = inputs[static_cast<std::size_t>(t)][m];
      prob.objective[static_cast<std::size_t>(var(t, 3))] = in.grid_price;
      prob.add({{var(t, 0), 1.0}}, lp::Sense::LessEq, p.charge_rate_max_kwh);
      prob.add({{var(t, 1), 1.0}}, lp::Sense::LessEq, p.discharge_rate_max_kwh);
      prob.add({{var(t, 2), 1.0}}, lp::Sense::LessEq, p.serve_rate_max_kwh);
      // C_t <= B^max - B_t and D_t <= B_t with B_t = b0 + sum_{s<t} (C_s - D_s)
      std::vector<double> charge_row(static_cast<std::size_t>(prob.num_vars), 0.0);
      std::vector<double> discharge_row(static_cast<std::size_t>(prob.num_vars), 0.0);
      std::vector<double> serve_row(static_cast<std::size_t>(prob.num_vars), 0.0);
      for (int s = 0; s < t; ++s) {
        charge_row[static_cast<std::size_t>(var(s, 0))] = 1.0;
        charge_row[static_cast<std::size_t>(var(s, 1))] = -1.0;
        discharge_row[static_cast<std::size_t>(var(s, 0))] = -1.0;
        discharge_row[static_cast<std::size_t>(var(s, 1))] = 1.0;
        serve_row[static_cast<std::size_t>(var(s, 2))] = 1.0;
      }
      charge_row[static_cast<std::size_t>(var(t, 0))] = 1.0;
      discharge_row[static_cast<std::size_t>(var(t, 1))] = 1.0;
      serve_row[static_cast<std::size_t>(var(t, 2))] = 1.0;
      prob.add_dense(std::move(charge_row), lp::Sense::LessEq, p.battery_capacity_kwh - b0);
      prob.add_dense(std::move(discharge_row), lp::Sense::LessEq, b0);
      // J_t <= Q_t = q0 + sum_{s<t} (T_s - J_s)
      prob.add_dense(std::move(serve_row), lp::Sense::LessEq, q0 + arrived);
      // I + J + C <= R + G + D
      prob.add({{var(t, 2), 1.0}, {var(t, 0), 1.0}, {var(t, 3), -1.0}, {var(t, 1), -1.0}},
               lp::Sense::LessEq, in.renewable_kwh - in.di_load_kwh);
      // G + D <= I + J + C: only renewable energy is spilled
      prob.add({{var(t, 3), 1.0}, {var(t, 1), 1.0}, {var(t, 2), -1.0}, {var(t, 0), -1.0}},
               lp::Sense::LessEq, in.di_load_kwh);
      arrived += in.dt_load_kwh;
    }
    if (!terminal.empty()) {
      const OracleTerminal& term = terminal[m];
      if (term.min_final_battery_kwh) {
        std::vector<double> row(static_cast<std::size_t>(prob.num_vars), 0.0);
        for (int t = 0; t < horizon; ++t) {
          row[static_cast<std::size_t>(var(t, 0))] = 1.0;
          row[static_cast<std::size_t>(var(t, 1))] = -1.0;
        }
        prob.add_dense(std::move(row), lp::Sense::GreaterEq, *term.min_final_battery_kwh - b0);
      }
      if (term.max_final_backlog_kwh) {
        std::vector<double> row(static_cast<std::size_t>(prob.num_vars), 0.0);
        for (int t = 0; t < horizon; ++t) row[static_cast<std::size_t>(var(t, 2))] = 1.0;
        prob.add_dense(std::move(row), lp::Sense::GreaterEq,
                       q0 + arrived - *term.max_final_backlog_kwh);
      }
    }
    const lp::Result r = lp::solve_lp(prob);
    if (r.status != lp::Status::Optimal) {
      throw InvariantViolation("offline oracle LP not optimal for MG " + std::to_string(p.id));
    }
    res.per_mg_time_average_cost.push_back(r.objective / static_cast<double>(horizon));
  }
  for (double c : res.per_mg_time_average_cost) res.mean_time_average_cost += c;
  res.mean_time_average_cost /= static_cast<double>(n);
  return res;
}

bool AuditReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const AuditCheck& c) { return c.passed; });
}

AuditReport bound_audit(const RunSummary& summary, const ScenarioConfig& config,
                        const std::vector<DerivedBounds>& bounds, const OracleResult* oracle,
                        const std::vector<Violation>& violations) {
  AuditReport rep;
  for (std::size_t m = 0; m < config.microgrids.size(); ++m) {
    const MGParams& p = config.microgrids[m].params;
    const DerivedBounds& b = bounds[m];
    const bool v_ok = p.v_weight > 0.0 && p.v_weight <= b.v_max * (1.0 + 1e-12);
    rep.checks.push_back({"V<=V_max", p.id, v_ok,
                          "V=" + format_fixed(p.v_weight) + " V_max=" + format_fixed(b.v_max)});
    if (oracle && m < oracle->per_mg_time_average_cost.size()) {
      const double online = summary.mgs[m].time_average_cost;
      const double bound = oracle->per_mg_time_average_cost[m] + b.a_const / p.v_weight;
      rep.checks.push_back({"cost<=oracle+A/V", p.id, online <= bound + 1e-9,
                            "cost=" + format_fixed(online) + " oracle=" +
                                format_fixed(oracle->per_mg_time_average_cost[m]) +
                                " A/V=" + format_fixed(b.a_const / p.v_weight)});
    }
  }
  const char* monitored[] = {"battery>=0", "battery<=capacity", "Q<=Q_max", "Z<=Z_max",
                             "X>=lower",   "X<=upper",          "job_age<=delta_max",
                             "pending_jobs=Q"};
  for (const char* name : monitored) {
    int count = 0;
    std::string first;
    for (const Violation& v : violations) {
      if (v.check == name) {
        if (count == 0) {
          first = "slot " + std::to_string(v.slot) + " MG " + std::to_string(v.mg_id) + ": " + v.detail;
        }
        ++count;
      }
    }
    rep.checks.push_back({name, -1, count == 0,
                          count == 0 ? "0 violations"
                                     : std::to_string(count) + " violations, first " + first});
  }
  return rep;
}

void write_audit(std::ostream& os, const AuditReport& report) {
  for (const AuditCheck& c : report.checks) {
    os << (c.passed ? "PASS" : "FAIL") << "  " << c.name;
    if (c.mg_id >= 0) os << "  mg=" << c.mg_id;
    os << "  " << c.detail << '\n';
  }
  os << (report.all_passed() ? "RESULT PASS" : "RESULT FAIL") << '\n';
}

namespace {

constexpr const char* kSlotsHeader =
    "slot,mg_id,battery_kwh,demand_queue_kwh,delay_queue_kwh,virtual_battery_kwh,"
    "oldest_job_age,renewable_kwh,di_load_kwh,dt_load_kwh,grid_price,sell_price,"
    "sell_quantity_kwh,buy_price,buy_quantity_kwh,bought_kwh,sold_kwh,buy_unit_price,"
    "sell_unit_price,charge_kwh,discharge_kwh,serve_dt_kwh,grid_purchase_kwh,spill_kwh,cost,"
    "market_buy_price,market_sell_price,market_volume_kwh,auctioneer_surplus";

constexpr int kSlotsColumns = 29;

}  // namespace

void write_slots_csv(std::ostream& os, const std::vector<SlotRecord>& records) {
  os << kSlotsHeader << '\n';
  for (const SlotRecord& rec : records) {
    const double volume = rec.market.outcome.volume_kwh();
    for (const MGSlotRecord& r : rec.mgs) {
      const double vals[] = {r.state.battery_kwh,      r.state.demand_queue_kwh,
                             r.state.delay_queue_kwh,  r.state.virtual_battery_kwh};
      os << rec.slot << ',' << r.mg_id;
      for (double v : vals) os << ',' << format_fixed(v);
      os << ',' << r.oldest_job_age;
      const double rest[] = {r.inputs.renewable_kwh,
                             r.inputs.di_load_kwh,
                             r.inputs.dt_load_kwh,
                             r.inputs.grid_price,
                             r.bids.sell_price,
                             r.bids.sell_quantity_kwh,
                             r.bids.buy_price,
                             r.bids.buy_quantity_kwh,
                             r.trade.bought_kwh,
                             r.trade.sold_kwh,
                             r.trade.buy_unit_price,
                             r.trade.sell_unit_price,
                             r.action.charge_kwh,
                             r.action.discharge_kwh,
                             r.action.serve_dt_kwh,
                             r.action.grid_purchase_kwh,
                             r.spill_kwh,
                             r.cost,
                             rec.market.outcome.buy_clearing_price,
                             rec.market.outcome.sell_clearing_price,
                             volume,
                             rec.market.surplus};
      for (double v : rest) os << ',' << format_fixed(v);
      os << '\n';
    }
  }
}

void write_summary_csv(std::ostream& os, const RunSummary& s) {
  os << "mode,mg_id,time_average_cost,total_grid_kwh,total_bought_kwh,total_sold_kwh,"
        "total_spill_kwh,max_job_age\n";
  for (const MGSummary& m : s.mgs) {
    os << mode_name(s.mode) << ',' << m.mg_id << ',' << format_fixed(m.time_average_cost) << ','
       << format_fixed(m.total_grid_kwh) << ',' << format_fixed(m.total_bought_kwh) << ','
       << format_fixed(m.total_sold_kwh) << ',' << format_fixed(m.total_spill_kwh) << ','
       << m.max_job_age << '\n';
  }
  os << mode_name(s.mode) << ",all," << format_fixed(s.mean_time_average_cost) << ','
     << format_fixed(s.total_grid_kwh) << ',' << format_fixed(s.total_traded_kwh) << ','
     << format_fixed(s.total_traded_kwh) << ",," << s.max_job_age << '\n';
}

void write_market_csv(std::ostream& os, const std::vector<SlotRecord>& records) {
  write_market_audit_header(os);
  for (const SlotRecord& rec : records) write_market_audit(os, rec.slot, rec.market.book, rec.market.outcome);
}

std::vector<SlotRecord> read_slots_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw DataError("slots.csv: empty");
  if (line != kSlotsHeader) throw DataError("slots.csv:1: unexpected header");
  std::vector<SlotRecord> records;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> v;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) {
      try {
        std::size_t used = 0;
        v.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw DataError("slots.csv:" + std::to_string(line_no) + ": bad number '" + cell + "'");
      }
    }
    if (static_cast<int>(v.size()) != kSlotsColumns) {
      throw DataError("slots.csv:" + std::to_string(line_no) + ": expected " +
                      std::to_string(kSlotsColumns) + " columns");
    }
    const int slot = static_cast<int>(v[0]);
    if (records.empty() || records.back().slot != slot) {
      if (!records.empty() && slot != records.back().slot + 1) {
        throw DataError("slots.csv:" + std::to_string(line_no) + ": slots out of order");
      }
      SlotRecord rec;
      rec.slot = slot;
      rec.market.outcome.buy_clearing_price = v[25];
      rec.market.outcome.sell_clearing_price = v[26];
      rec.market.surplus = v[28];
      records.push_back(std::move(rec));
    }
    MGSlotRecord r;
    r.mg_id = static_cast<int>(v[1]);
    r.state.battery_kwh = v[2];
    r.state.demand_queue_kwh = v[3];
    r.state.delay_queue_kwh = v[4];
    r.state.virtual_battery_kwh = v[5];
    r.oldest_job_age = static_cast<int>(v[6]);
    r.inputs = {v[7], v[8], v[9], v[10]};
    r.bids = {r.mg_id, v[11], v[13], v[12], v[14]};
    r.trade = {r.mg_id, v[15], v[16], v[17], v[18]};
    r.action = {v[19], v[20], v[21], v[22], v[15], v[16]};
    r.spill_kwh = v[23];
    r.cost = v[24];
    records.back().mgs.push_back(std::move(r));
  }
  if (records.empty()) throw DataError("slots.csv: no rows");
  return records;
}

}  // namespace mgtrade

namespace mgtrade {

namespace {

// Logged values carry six decimals.
constexpr double kLogTol = 1e-5;

struct CheckTally {
  std::string name;
  int failures = 0;
  std::string first;

  void fail(int slot, int mg, const std::string& what) {
    if (failures++ == 0) first = "slot " + std::to_string(slot) + " MG " + std::to_string(mg) + ": " + what;
  }
  AuditCheck result() const {
    return {name, -1, failures == 0,
            failures == 0 ? "0 violations" : std::to_string(failures) + " violations, first " + first};
  }
};

std::string pair_str(double got, double want) {
  return format_fixed(got) + " vs " + format_fixed(want);
}

}  // namespace

AuditReport audit_log(const ScenarioConfig& config_in, const std::vector<SlotRecord>& records) {
  ScenarioConfig config = config_in;
  config.finalize();
  const World world = World::create(config);
  const std::size_t n = config.microgrids.size();
  AuditReport rep;

  CheckTally shape{"log_shape"}, initial{"initial_state"}, battery{"battery_bounds"},
      queue{"Q<=Q_max"}, delay{"Z<=Z_max"}, virt{"X=B-theta-Dmax"}, age{"job_age<=delta_max"},
      excl{"charge_discharge_exclusive"}, balance{"energy_balance"}, dyn{"queue_dynamics"},
      cost{"settlement"}, market{"auction_budget"};

  if (static_cast<int>(records.size()) != config.horizon_slots) {
    shape.fail(records.empty() ? 0 : records.back().slot, 0,
               std::to_string(records.size()) + " slots logged, horizon " +
                   std::to_string(config.horizon_slots));
  }
  for (std::size_t t = 0; t < records.size(); ++t) {
    const SlotRecord& rec = records[t];
    if (rec.slot != static_cast<int>(t)) shape.fail(rec.slot, 0, "slot number out of sequence");
    if (rec.mgs.size() != n) {
      shape.fail(rec.slot, 0, std::to_string(rec.mgs.size()) + " MG rows");
      continue;
    }
    if (rec.market.surplus < -kLogTol) market.fail(rec.slot, 0, "negative surplus " + format_fixed(rec.market.surplus));
    for (std::size_t m = 0; m < n; ++m) {
      const MGSlotRecord& r = rec.mgs[m];
      const MGParams& p = config.microgrids[m].params;
      const DerivedBounds& b = world.bounds[m];
      const int id = p.id;
      if (r.mg_id != id) {
        shape.fail(rec.slot, r.mg_id, "expected MG " + std::to_string(id));
        continue;
      }
      const MGState& s = r.state;
      if (t == 0) {
        const MGState& s0 = world.states[m];
        if (std::abs(s.battery_kwh - s0.battery_kwh) > kLogTol ||
            std::abs(s.demand_queue_kwh - s0.demand_queue_kwh) > kLogTol ||
            std::abs(s.delay_queue_kwh - s0.delay_queue_kwh) > kLogTol) {
          initial.fail(0, id, "battery " + pair_str(s.battery_kwh, s0.battery_kwh));
        }
      }
      if (s.battery_kwh < -kLogTol || s.battery_kwh > p.battery_capacity_kwh + kLogTol) {
        battery.fail(rec.slot, id, "B=" + format_fixed(s.battery_kwh));
      }
      if (s.demand_queue_kwh < -kLogTol || s.demand_queue_kwh > b.q_max + kLogTol) {
        queue.fail(rec.slot, id, "Q=" + format_fixed(s.demand_queue_kwh) + " Q_max=" + format_fixed(b.q_max));
      }
      if (s.delay_queue_kwh < -kLogTol || s.delay_queue_kwh > b.z_max + kLogTol) {
        delay.fail(rec.slot, id, "Z=" + format_fixed(s.delay_queue_kwh) + " Z_max=" + format_fixed(b.z_max));
      }
      const double x_expected = virtual_battery(s.battery_kwh, b.theta, p);
      if (std::abs(s.virtual_battery_kwh - x_expected) > kLogTol) {
        virt.fail(rec.slot, id, pair_str(s.virtual_battery_kwh, x_expected));
      }
      if (r.oldest_job_age > b.delta_max_slots + 1e-9) {
        age.fail(rec.slot, id, "age " + std::to_string(r.oldest_job_age));
      }
      const ControlAction& a = r.action;
      if (a.charge_kwh > kLogTol && a.discharge_kwh > kLogTol) {
        excl.fail(rec.slot, id, "C=" + format_fixed(a.charge_kwh) + " D=" + format_fixed(a.discharge_kwh));
      }
      const SlotInputs& in = r.inputs;
      const double supply = in.renewable_kwh + a.grid_purchase_kwh + a.discharge_kwh + a.bought_kwh;
      const double use = in.di_load_kwh + a.serve_dt_kwh + a.sold_kwh + a.charge_kwh;
      if (supply - use < -kLogTol * std::max(1.0, supply) ||
          supply - use > in.renewable_kwh + kLogTol * std::max(1.0, supply) ||
          std::abs(supply - use - r.spill_kwh) > kLogTol * 10) {
        balance.fail(rec.slot, id, "supply-use " + format_fixed(supply - use) + " spill " + format_fixed(r.spill_kwh));
      }
      const double u = post_trade_settlement(a, r.trade, in);
      // Each logged factor is rounded to six decimals, so a product p*q can be
      // off by about 5e-7 * (p + q).
      const double settle_tol =
          kLogTol + 1e-6 * (in.grid_price + a.grid_purchase_kwh + r.trade.bought_kwh +
                            r.trade.buy_unit_price + r.trade.sold_kwh + r.trade.sell_unit_price);
      if (std::abs(u - r.cost) > settle_tol) {
        cost.fail(rec.slot, id, "cost " + pair_str(r.cost, u));
      }
      if (t + 1 < records.size() && records[t + 1].mgs.size() == n) {
        const MGState& logged = records[t + 1].mgs[m].state;
        MGState next;
        try {
          next = advance(s, a, in, p, b.theta, rec.slot);
        } catch (const std::exception& e) {
          dyn.fail(rec.slot, id, e.what());
          continue;
        }
        const double errs[] = {next.battery_kwh - logged.battery_kwh,
                               next.demand_queue_kwh - logged.demand_queue_kwh,
                               next.delay_queue_kwh - logged.delay_queue_kwh};
        for (double e : errs) {
          if (std::abs(e) > kLogTol * 10) {
            dyn.fail(rec.slot + 1, id,
                     "B " + pair_str(logged.battery_kwh, next.battery_kwh) + " Q " +
                         pair_str(logged.demand_queue_kwh, next.demand_queue_kwh) + " Z " +
                         pair_str(logged.delay_queue_kwh, next.delay_queue_kwh));
            break;
          }
        }
      }
    }
  }
  for (const CheckTally* c : {&shape, &initial, &battery, &queue, &delay, &virt, &age, &excl,
                              &balance, &dyn, &cost, &market}) {
    rep.checks.push_back(c->result());
  }
  for (std::size_t m = 0; m < n; ++m) {
    const MGParams& p = config.microgrids[m].params;
    rep.checks.push_back({"V<=V_max", p.id, p.v_weight <= world.bounds[m].v_max * (1.0 + 1e-12),
                          "V=" + format_fixed(p.v_weight) + " V_max=" + format_fixed(world.bounds[m].v_max)});
  }
  if (shape.failures == 0 && config.horizon_slots <= 48 && n <= 3) {
    ScenarioInputs inputs;
    for (const SlotRecord& rec : records) {
      std::vector<SlotInputs> row;
      for (const MGSlotRecord& r : rec.mgs) row.push_back(r.inputs);
      inputs.push_back(std::move(row));
    }
    const OracleResult oracle = offline_oracle(config, inputs);
    const RunSummary summary = summarize(config.mode, records, 0);
    for (std::size_t m = 0; m < n; ++m) {
      const MGParams& p = config.microgrids[m].params;
      const double a_over_v = world.bounds[m].a_const / p.v_weight;
      const double online = summary.mgs[m].time_average_cost;
      const double bound = oracle.per_mg_time_average_cost[m] + a_over_v;
      rep.checks.push_back({"cost<=oracle+A/V", p.id, online <= bound + kLogTol,
                            "cost=" + format_fixed(online) + " oracle=" +
                                format_fixed(oracle.per_mg_time_average_cost[m]) +
                                " A/V=" + format_fixed(a_over_v)});
    }
  }
  return rep;
}

}  // namespace mgtrade
