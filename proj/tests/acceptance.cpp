// Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails.

#include <chrono>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mgtrade/config.hpp"
#include "mgtrade/sim.hpp"
#include "oracles.hpp"

using namespace mgtrade;

namespace {

int g_violations = 0;  // invariant violations over every run in the suite
int g_runs = 0;

RunResult tracked_run(const ScenarioConfig& cfg, const ScenarioInputs& in) {
  RunResult r = run(cfg, in);
  g_violations += static_cast<int>(r.violations.size());
  ++g_runs;
  return r;
}

bool report(int n, bool ok, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", n, detail.c_str());
  std::fflush(stdout);
  return ok;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

// 1. Directional reproduction over 20 seeds.
bool directional() {
  double sum_auction = 0.0, sum_solo = 0.0, worst_secs = 0.0;
  int lower = 0;
  constexpr int kSeeds = 20;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    const auto t0 = std::chrono::steady_clock::now();
    ScenarioConfig cfg = default_scenario(static_cast<std::uint64_t>(seed));
    const ScenarioInputs in = build_inputs(cfg);
    cfg.mode = Mode::WithAuction;
    const RunResult a = tracked_run(cfg, in);
    cfg.mode = Mode::NoAuction;
    const RunResult s = tracked_run(cfg, in);
    worst_secs = std::max(worst_secs,
                          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    sum_auction += a.summary.mean_time_average_cost;
    sum_solo += s.summary.mean_time_average_cost;
    if (a.summary.mean_time_average_cost < s.summary.mean_time_average_cost) ++lower;
  }
  const double ma = sum_auction / kSeeds, ms = sum_solo / kSeeds;
  const double reduction = 100.0 * (ms - ma) / ms;
  const bool ok = ma < ms && reduction >= 3.0 && reduction <= 25.0 && worst_secs < 10.0;
  return report(1, ok,
                fmt("mean cost auction %.4f vs solo %.4f, reduction %.2f%%, worst paired run %.3fs",
                    ma, ms, reduction, worst_secs) +
                    " (auction lower on " + std::to_string(lower) + "/20 seeds)");
}

ScenarioConfig random_small_scenario(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> n_mg(1, 3);
  ScenarioConfig cfg;
  cfg.seed = rng();
  cfg.horizon_slots = std::uniform_int_distribution<int>(5, 40)(rng);
  cfg.price_bounds.p_min = 0.5 + 2.5 * u(rng);
  cfg.price_bounds.p_max = cfg.price_bounds.p_min + 0.5 + 5.0 * u(rng);
  cfg.rho1 = 1.0 + 1000.0 * u(rng);
  cfg.rho2 = 1e-4 + u(rng);
  cfg.mode = u(rng) < 0.8 ? Mode::WithAuction : Mode::NoAuction;
  const int n = n_mg(rng);
  for (int i = 1; i <= n; ++i) {
    MGConfig mg;
    MGParams& p = mg.params;
    p.id = i;
    mg.type = u(rng) < 0.5 ? MGType::Type1 : MGType::Type2;
    mg.load_low_kwh = 5.0 + 40.0 * u(rng);
    mg.load_high_kwh = mg.load_low_kwh + 60.0 * u(rng);
    p.dt_load_max_kwh = mg.load_high_kwh;
    p.epsilon = mg.load_low_kwh * (0.2 + 0.8 * u(rng));
    p.epsilon_max = p.epsilon * (1.0 + u(rng));
    p.serve_rate_max_kwh = std::max(p.dt_load_max_kwh, p.epsilon_max) * (1.0 + 2.0 * u(rng));
    p.battery_capacity_kwh = (p.dt_load_max_kwh + p.epsilon_max) * (1.5 + 6.0 * u(rng));
    p.charge_rate_max_kwh = p.battery_capacity_kwh * (0.1 + 0.9 * u(rng));
    p.discharge_rate_max_kwh = p.battery_capacity_kwh * (0.1 + 0.9 * u(rng));
    p.price_floor = cfg.price_bounds.p_max * u(rng);
    mg.renewable_mean_kwh = 100.0 * u(rng);
    mg.v_fraction = 0.05 + 0.95 * u(rng);
    if (u(rng) < 0.5) mg.initial_battery_kwh = p.battery_capacity_kwh * u(rng);
    mg.wind.seed_offset = static_cast<std::uint64_t>(i);
    cfg.microgrids.push_back(mg);
  }
  cfg.finalize();
  return cfg;
}

// 2. Invariant suite (run last so it covers every other run as well).
bool invariants() {
  std::mt19937_64 rng(20240601);
  int max_age_seen = 0;
  for (int k = 0; k < 200; ++k) {
    const ScenarioConfig cfg = random_small_scenario(rng);
    const RunResult r = tracked_run(cfg, build_inputs(cfg));
    max_age_seen = std::max(max_age_seen, r.summary.max_job_age);
  }
  return report(2, g_violations == 0,
                std::to_string(g_violations) + " violations over " + std::to_string(g_runs) +
                    " runs (200 randomized), tolerance 1e-9 kWh, max job age seen " +
                    std::to_string(max_age_seen));
}

// 3. Cost gap audit over a five-point V sweep on the shipped 2-MG, 24-slot
// deterministic profile.
bool gap_audit() {
  const std::filesystem::path dir = MGTRADE_DATA_DIR "/gap24";
  const ScenarioConfig base = load_config(dir / "scenario.json");
  const ScenarioInputs in = build_inputs(base, dir);
  std::vector<double> gaps;
  bool bound_ok = true;
  std::string detail;
  for (double f : {0.2, 0.4, 0.6, 0.8, 1.0}) {
    ScenarioConfig cfg = base;
    for (MGConfig& mg : cfg.microgrids) mg.v_fraction = f;
    cfg.finalize();
    const RunResult r = tracked_run(cfg, in);
    const OracleResult o = offline_oracle(cfg, in);
    for (std::size_t m = 0; m < cfg.microgrids.size(); ++m) {
      const double av = r.bounds[m].a_const / cfg.microgrids[m].params.v_weight;
      if (r.summary.mgs[m].time_average_cost > o.per_mg_time_average_cost[m] + av + 1e-9) bound_ok = false;
    }
    gaps.push_back(r.summary.mean_time_average_cost - o.mean_time_average_cost);
    detail += fmt(" %.1f:%.3f", f, gaps.back());
  }
  int nonincreasing = 0;
  for (std::size_t k = 1; k < gaps.size(); ++k) {
    if (gaps[k] <= gaps[k - 1] + 1e-9) ++nonincreasing;
  }
  return report(3, bound_ok && nonincreasing >= 4,
                std::string("bound ") + (bound_ok ? "held" : "broken") + ", gap nonincreasing on " +
                    std::to_string(nonincreasing) + "/4 pairs; gaps" + detail);
}

// 4. Per-slot program against a 1 kWh grid search.
bool slot_program() {
  std::mt19937_64 rng(4);
  auto ui = [&](int lo, int hi) { return static_cast<double>(std::uniform_int_distribution<int>(lo, hi)(rng)); };
  int matched = 0;
  double worst = 0.0;
  for (int k = 0; k < 500; ++k) {
    MGParams p;
    p.id = 1;
    p.battery_capacity_kwh = ui(1, 50);
    p.charge_rate_max_kwh = ui(0, 50);
    p.discharge_rate_max_kwh = ui(0, 50);
    p.serve_rate_max_kwh = ui(0, 50);
    p.v_weight = ui(1, 20) / 4.0;
    MGState s;
    s.battery_kwh = ui(0, static_cast<int>(p.battery_capacity_kwh));
    s.demand_queue_kwh = ui(0, 50);
    s.delay_queue_kwh = ui(0, 50);
    const double theta = ui(0, 60);
    s.virtual_battery_kwh = s.battery_kwh - theta - p.discharge_rate_max_kwh;
    SlotInputs in;
    in.renewable_kwh = ui(0, 50);
    in.di_load_kwh = ui(0, 50);
    in.dt_load_kwh = ui(0, 50);
    in.grid_price = ui(1, 20) / 4.0;
    TradeAllocation t;
    t.mg_id = 1;
    const int side = static_cast<int>(ui(0, 2));
    const int buy_cap = static_cast<int>(std::min(p.serve_rate_max_kwh, s.demand_queue_kwh));
    if (side == 1) {
      // Bids never ask for more than min(J^max, Q).
      t.bought_kwh = ui(0, buy_cap);
      t.buy_unit_price = ui(0, 20) / 4.0;
    } else if (side == 2 && in.renewable_kwh > in.di_load_kwh) {
      t.sold_kwh = ui(0, static_cast<int>(in.renewable_kwh - in.di_load_kwh));
      t.sell_unit_price = ui(0, 20) / 4.0;
    }
    const ControlAction a = solve_slot_program(s, in, t, p);
    check_action(s, a, p, in);
    const double got = slot_objective(s, a, t, in, p);
    const oracle::GridBest ref = oracle::slot_program_grid(s, in, t, p);
    const double tol = 1e-9 * std::max(1.0, std::abs(ref.objective));
    const double diff = ref.objective - got;
    worst = std::max(worst, std::abs(diff));
    if (got <= ref.objective + tol && diff <= ref.cell_increment + tol) ++matched;
  }
  return report(4, matched == 500,
                std::to_string(matched) + "/500 instances match, largest |difference| " + fmt("%.3g", worst));
}

// 5. Clearing against exhaustive enumeration, plus outcome properties.
bool clearing() {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> count(0, 5);
  std::uniform_int_distribution<int> price_tick(0, 40);
  std::uniform_real_distribution<double> qty(0.5, 5000.0);
  int optimal = 0, property_ok = 0, traded = 0;
  for (int k = 0; k < 200; ++k) {
    std::vector<BidPair> bids;
    const int nb = count(rng), ns = count(rng);
    int id = 1;
    for (int i = 0; i < nb; ++i) {
      bids.push_back({id++, 0.0, price_tick(rng) / 4.0, 0.0, qty(rng)});
    }
    for (int i = 0; i < ns; ++i) {
      bids.push_back({id++, price_tick(rng) / 4.0, 0.0, qty(rng), 0.0});
    }
    const double grid = 1.0 + price_tick(rng) / 4.0;
    const OrderBook book = OrderBook::from_bids(bids, 1000.0, 1e-4);
    const ClearingOutcome out = clear(book, grid);
    const double best = oracle::best_welfare(book, grid);
    const bool empty_expected = std::isinf(best) && best < 0.0;
    if (empty_expected ? out.marginal_buy_index == 0 : out.welfare == best) ++optimal;

    bool ok = true;
    if (out.volume_kwh() > 0.0) {
      ++traded;
      ok = ok && out.buy_clearing_price > out.sell_clearing_price;
      ok = ok && out.buy_clearing_price <= grid;
      ok = ok && budget_check(out) >= 0.0;
      for (const BookEntry& b : book.buy_bids) {
        const double got = out.bought_by(b.mg_id);
        ok = ok && got <= b.quantity_kwh * (1.0 + 1e-12);
        if (got > 0.0) ok = ok && out.buy_clearing_price <= b.price;
      }
      for (const BookEntry& s : book.sell_bids) {
        const double got = out.sold_by(s.mg_id);
        ok = ok && got <= s.quantity_kwh * (1.0 + 1e-12);
        if (got > 0.0) ok = ok && out.sell_clearing_price >= s.price;
      }
      double bought = 0.0, sold = 0.0;
      for (const BookEntry& b : book.buy_bids) bought += out.bought_by(b.mg_id);
      for (const BookEntry& s : book.sell_bids) sold += out.sold_by(s.mg_id);
      ok = ok && bought == sold;
    }
    if (ok) ++property_ok;
  }
  return report(5, optimal == 200 && property_ok == 200,
                std::to_string(optimal) + "/200 optimal, " + std::to_string(property_ok) +
                    "/200 with IR, budget, balance and price checks (" + std::to_string(traded) +
                    " with positive volume)");
}

// 6. Single-MG price deviations of +-10% in random three-MG markets.
bool truthfulness() {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const ScenarioConfig base = default_scenario(1);
  int improvements = 0, deviations = 0, self_priced = 0;
  double largest = 0.0;
  for (int k = 0; k < 100; ++k) {
    std::vector<MGParams> params;
    std::vector<MGState> states;
    std::vector<SlotInputs> inputs;
    const double grid = base.price_bounds.p_min + u(rng) * (base.price_bounds.p_max - base.price_bounds.p_min);
    for (int m = 0; m < 3; ++m) {
      const MGConfig& mc = base.microgrids[static_cast<std::size_t>(u(rng) < 0.5 ? 0 : 3)];
      MGParams p = mc.params;
      p.id = m + 1;
      const DerivedBounds b = compute_bounds(p, base.price_bounds);
      MGState s = initial_state(p.battery_capacity_kwh * u(rng), b.theta, p);
      s.demand_queue_kwh = b.q_max * u(rng);
      s.delay_queue_kwh = b.z_max * u(rng);
      s.pending_jobs.push_back({0, s.demand_queue_kwh});
      SlotInputs in;
      in.renewable_kwh = 2.0 * mc.renewable_mean_kwh * u(rng);
      in.di_load_kwh = mc.load_low_kwh + (mc.load_high_kwh - mc.load_low_kwh) * u(rng);
      in.dt_load_kwh = mc.load_low_kwh + (mc.load_high_kwh - mc.load_low_kwh) * u(rng);
      in.grid_price = grid;
      params.push_back(p);
      states.push_back(s);
      inputs.push_back(in);
    }
    std::vector<BidPair> truthful;
    for (int m = 0; m < 3; ++m) truthful.push_back(make_bids(states[m], inputs[m], params[m]));
    bool own_price = false;  // deviator traded at its own submitted price
    auto realized = [&](const std::vector<BidPair>& bids, int m) {
      const ClearingOutcome out = clear(OrderBook::from_bids(bids, base.rho1, base.rho2), grid);
      const TradeAllocation t = allocation_for(out, params[m].id);
      own_price = (t.sold_kwh > 0.0 && t.sell_unit_price == bids[m].sell_price) ||
                  (t.bought_kwh > 0.0 && t.buy_unit_price == bids[m].buy_price);
      const ControlAction a = solve_slot_program(states[m], inputs[m], t, params[m]);
      return slot_objective(states[m], a, t, inputs[m], params[m]);
    };
    for (int m = 0; m < 3; ++m) {
      const double honest = realized(truthful, m);
      for (double factor : {0.9, 1.1}) {
        std::vector<BidPair> bids = truthful;
        bids[m].buy_price *= factor;
        bids[m].sell_price *= factor;
        ++deviations;
        const double dev = realized(bids, m);
        const double gain = honest - dev;
        if (gain > 1e-9 * std::max(1.0, std::abs(honest))) {
          ++improvements;
          if (own_price) ++self_priced;
          largest = std::max(largest, gain);
        }
      }
    }
  }
  return report(6, improvements == 0,
                std::to_string(improvements) + " strict improvements in " + std::to_string(deviations) +
                    " deviations" +
                    (improvements ? fmt(", largest objective gain %.3f", largest) + ", " +
                                        std::to_string(self_priced) + " of them priced at the deviator's own bid"
                                  : ""));
}

// 7. Single-pair clearing volume.
bool single_pair() {
  const std::vector<BidPair> bids = {{1, 0.0, 2.0, 0.0, 1e9}, {2, 1.0, 0.0, 1e9, 0.0}};
  const ClearingOutcome out = clear(OrderBook::from_bids(bids, 1000.0, 1e-4), 10.0);
  const double expected = std::sqrt(1000.0 * 2.0 / (1e-4 * 1.0));
  const double rel = std::abs(out.volume_kwh() - expected) / expected;
  return report(7, rel <= 1e-6, fmt("volume %.6f, expected %.6f, relative error %.2g", out.volume_kwh(), expected, rel));
}

// 8. Determinism of slots.csv.
bool determinism() {
  std::string first, second;
  for (std::string* dst : {&first, &second}) {
    const ScenarioConfig cfg = default_scenario(42);
    const RunResult r = tracked_run(cfg, build_inputs(cfg));
    std::ostringstream os;
    write_slots_csv(os, r.records);
    *dst = os.str();
  }
  return report(8, first == second && !first.empty(),
                std::to_string(first.size()) + " bytes, " + (first == second ? "identical" : "different"));
}

}  // namespace

int main() {
  bool ok = true;
  // Criterion 2 runs last so that its violation count covers every other run.
  ok = directional() & ok;
  ok = gap_audit() & ok;
  ok = slot_program() & ok;
  ok = clearing() & ok;
  ok = truthfulness() & ok;
  ok = single_pair() & ok;
  ok = determinism() & ok;
  ok = invariants() & ok;
  return ok ? 0 : 1;
}
