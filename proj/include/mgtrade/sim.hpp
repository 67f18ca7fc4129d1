#pragma once

// Slot-by-slot simulation of N microgrids around the per-slot auction, with
// invariant monitoring, the clairvoyant no-trade benchmark, and the cost-gap
// audit.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mgtrade/auction.hpp"
#include "mgtrade/controller.hpp"
#include "mgtrade/ingest.hpp"
#include "mgtrade/model.hpp"

namespace mgtrade {

enum class Mode { WithAuction, NoAuction };

const char* mode_name(Mode m);

/// Where a per-slot series comes from.
struct TraceSource {
  std::string path;          // CSV file; empty selects the synthetic generator
  std::string column = "value";
  std::uint64_t seed_offset = 0;
};

struct MGConfig {
  MGParams params;
  MGType type = MGType::Type1;
  double load_low_kwh = 100.0;
  double load_high_kwh = 200.0;
  double renewable_mean_kwh = 200.0;
  /// When set, V = v_fraction * V^max and params.v_weight is overwritten.
  std::optional<double> v_fraction;
  /// Defaults to theta + D^max clamped into [0, B^max].
  std::optional<double> initial_battery_kwh;
  TraceSource wind;
};

struct ScenarioConfig {
  std::vector<MGConfig> microgrids;
  PriceBounds price_bounds;
  int horizon_slots = 120;
  double rho1 = 1000.0;
  double rho2 = 0.0001;
  Mode mode = Mode::WithAuction;
  std::uint64_t seed = 1;
  TraceSource price;

  /// Resolves V from v_fraction and checks every structural invariant.
  /// Throws ConfigError.
  void finalize();
};

/// The default six-MG setup: three type-1 and three type-2 MGs, 3000 kWh
/// storage, 1500 kWh/slot rates, V = V^max, epsilon = minimum DT load,
/// beta^min = 1, rho = (1000, 0.0001), 120 slots, grid prices in [0.02, 0.10]
/// per kWh.
ScenarioConfig default_scenario(std::uint64_t seed = 1);

/// Realized exogenous inputs, indexed [slot][mg].
using ScenarioInputs = std::vector<std::vector<SlotInputs>>;

/// Builds inputs from the configured traces (CSV or synthetic) and the load
/// model. Throws DataError when a trace is shorter than the horizon.
ScenarioInputs build_inputs(const ScenarioConfig& config,
                            const std::filesystem::path& base_dir = {});

struct MGSlotRecord {
  int mg_id = 0;
  MGState state;  // start of slot
  SlotInputs inputs;
  BidPair bids;
  TradeAllocation trade;
  ControlAction action;
  double cost = 0.0;
  double spill_kwh = 0.0;
  int oldest_job_age = 0;
};

struct MarketRecord {
  OrderBook book;
  ClearingOutcome outcome;
  double surplus = 0.0;
};

struct SlotRecord {
  int slot = 0;
  std::vector<MGSlotRecord> mgs;
  MarketRecord market;
};

struct Violation {
  int slot = 0;
  int mg_id = 0;
  std::string check;
  std::string detail;
};

/// Mutable simulation state between slots.
struct World {
  ScenarioConfig config;
  std::vector<DerivedBounds> bounds;
  std::vector<MGState> states;
  int slot = 0;

  static World create(ScenarioConfig config);
};

/// Verifies every per-MG invariant on a state. Appends violations.
void check_state(const MGState& s, const MGParams& p, const DerivedBounds& b, int slot,
                 std::vector<Violation>& out);

/// One slot of the two-stage protocol: bids, clearing, per-MG programs, queue
/// updates. Throws on any module error, with the slot in the message.
SlotRecord step(World& world, const std::vector<SlotInputs>& inputs);

struct MGSummary {
  int mg_id = 0;
  double time_average_cost = 0.0;
  double total_grid_kwh = 0.0;
  double total_bought_kwh = 0.0;
  double total_sold_kwh = 0.0;
  double total_spill_kwh = 0.0;
  int max_job_age = 0;
};

struct RunSummary {
  Mode mode = Mode::WithAuction;
  int horizon = 0;
  std::vector<MGSummary> mgs;
  double mean_time_average_cost = 0.0;  // averaged over MGs
  double total_grid_kwh = 0.0;
  double total_traded_kwh = 0.0;
  double total_auctioneer_surplus = 0.0;
  int violation_count = 0;
  int max_job_age = 0;
};

struct RunResult {
  std::vector<SlotRecord> records;
  RunSummary summary;
  std::vector<Violation> violations;
  std::vector<MGState> final_states;
  std::vector<DerivedBounds> bounds;
};

/// Runs config.horizon_slots slots. Throws DataError when inputs are short.
RunResult run(const ScenarioConfig& config, const ScenarioInputs& inputs);

/// Recomputes the summary from slot records alone.
RunSummary summarize(Mode mode, const std::vector<SlotRecord>& records, int violation_count);

/// Optional end-of-horizon conditions for the clairvoyant benchmark.
struct OracleTerminal {
  std::optional<double> min_final_battery_kwh;
  std::optional<double> max_final_backlog_kwh;
};

struct OracleResult {
  std::vector<double> per_mg_time_average_cost;
  double mean_time_average_cost = 0.0;
};

/// Clairvoyant no-trade benchmark: one LP per MG over the whole horizon with
/// storage and DT-queue dynamics as constraints and charge/discharge
/// exclusivity relaxed. Limited to 48 slots and 3 MGs; throws ConfigError
/// beyond that.
OracleResult offline_oracle(const ScenarioConfig& config, const ScenarioInputs& inputs,
                            const std::vector<OracleTerminal>& terminal = {});

struct AuditCheck {
  std::string name;
  int mg_id = -1;  // -1 for run-wide checks
  bool passed = false;
  std::string detail;
};

struct AuditReport {
  std::vector<AuditCheck> checks;
  bool all_passed() const;
};

/// Cost bound time-average cost <= oracle + A/V per MG, V <= V^max, and the
/// monitored queue/battery/delay bounds.
AuditReport bound_audit(const RunSummary& summary, const ScenarioConfig& config,
                        const std::vector<DerivedBounds>& bounds, const OracleResult* oracle,
                        const std::vector<Violation>& violations);

void write_audit(std::ostream& os, const AuditReport& report);

/// Audits a run from its logs alone: replays every logged transition,
/// rechecks bounds, balance and settlement per row, and adds the cost bound
/// when the oracle fits. Failing checks name the first bad slot and MG.
AuditReport audit_log(const ScenarioConfig& config, const std::vector<SlotRecord>& records);

// CSV output. All numbers use six decimals.
void write_slots_csv(std::ostream& os, const std::vector<SlotRecord>& records);
void write_summary_csv(std::ostream& os, const RunSummary& summary);
void write_market_csv(std::ostream& os, const std::vector<SlotRecord>& records);

/// Parses slots.csv back into records (state, inputs, bids, trade, action,
/// cost). Market books are not restored. Throws DataError on corrupt rows.
std::vector<SlotRecord> read_slots_csv(std::istream& is);

}  // namespace mgtrade
