#pragma once

// Microgrid domain types and the per-slot queue dynamics.
//
// Units: energy in kWh, one slot is one hour, so every rate is kWh per slot.
// Prices are currency per kWh.

#include <deque>
#include <stdexcept>
#include <string>

namespace mgtrade {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent or out-of-range configuration (parameters, bounds, V).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed external data: traces, logs, config documents.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A control action that breaks a storage or balance constraint.
class RejectedAction : public Error {
 public:
  RejectedAction(std::string constraint, const std::string& detail)
      : Error(constraint + ": " + detail), constraint_(std::move(constraint)) {}
  const std::string& constraint() const noexcept { return constraint_; }

 private:
  std::string constraint_;
};

/// A runtime invariant that must never fail did.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

struct PriceBounds {
  double p_min = 0.0;
  double p_max = 0.0;

  void validate() const;
};

struct MGParams {
  int id = 0;
  double battery_capacity_kwh = 0.0;    // B^max
  double charge_rate_max_kwh = 0.0;     // C^max
  double discharge_rate_max_kwh = 0.0;  // D^max
  double serve_rate_max_kwh = 0.0;      // J^max
  double dt_load_max_kwh = 0.0;         // T^max
  double epsilon = 0.0;                 // delay-aware increment per backlogged slot
  double epsilon_max = 0.0;
  double price_floor = 0.0;             // beta^min
  double v_weight = 1.0;                // V

  /// Structural checks only; the V <= V^max condition lives in validate_v().
  void validate() const;
};

/// Constants derived from the static parameters and the price range.
struct DerivedBounds {
  double a_const = 0.0;          // drift constant A
  double theta = 0.0;            // backlog bound Q^max + Z^max offset, shifts X
  double q_max = 0.0;
  double z_max = 0.0;
  double delta_max_slots = 0.0;  // worst-case DT job delay
  double v_max = 0.0;
};

/// Deferred DT job used to audit service delay. Arrived during arrival_slot.
struct PendingJob {
  int arrival_slot = 0;
  double remaining_kwh = 0.0;
};

struct MGState {
  double battery_kwh = 0.0;
  double demand_queue_kwh = 0.0;   // Q
  double delay_queue_kwh = 0.0;    // Z
  double virtual_battery_kwh = 0.0;  // X = B - theta - D^max
  std::deque<PendingJob> pending_jobs;
};

struct SlotInputs {
  double renewable_kwh = 0.0;
  double di_load_kwh = 0.0;
  double dt_load_kwh = 0.0;
  double grid_price = 0.0;
};

struct ControlAction {
  double charge_kwh = 0.0;
  double discharge_kwh = 0.0;
  double serve_dt_kwh = 0.0;
  double grid_purchase_kwh = 0.0;
  double bought_kwh = 0.0;
  double sold_kwh = 0.0;
};

/// Absolute slack allowed when checking constraints on computed actions.
inline constexpr double kEnergyTol = 1e-9;

double compute_a_const(const MGParams& p);

/// Largest admissible V. Throws ConfigError on a degenerate price range or a
/// nonpositive numerator.
double compute_v_max(const MGParams& p, const PriceBounds& pb);

/// All derived constants for p's current V. Throws ConfigError when
/// epsilon == 0 (delay bound undefined).
DerivedBounds compute_bounds(const MGParams& p, const PriceBounds& pb);

/// Throws ConfigError unless 0 < V <= V^max.
void validate_v(const MGParams& p, const PriceBounds& pb);

double virtual_battery(double battery_kwh, double theta, const MGParams& p);

/// Initial state with the battery at `battery_kwh`, empty DT queues.
MGState initial_state(double battery_kwh, double theta, const MGParams& p);

/// Checks ControlAction bounds against the start-of-slot state. Throws
/// RejectedAction naming the first violated constraint.
void check_action(const MGState& s, const ControlAction& a, const MGParams& p,
                  const SlotInputs& in);

// The three step functions take the start-of-slot state and return the
// state with only their own queue advanced.

MGState battery_step(const MGState& s, const ControlAction& a, const MGParams& p,
                     double theta);

MGState demand_queue_step(const MGState& s, const ControlAction& a, const SlotInputs& in,
                          int slot);

/// `backlog_before` is Q at the start of the slot (before demand_queue_step).
MGState delay_queue_step(const MGState& s, const ControlAction& a, const MGParams& p,
                         double backlog_before);

/// Applies all three steps in slot order.
MGState advance(const MGState& s, const ControlAction& a, const SlotInputs& in,
                const MGParams& p, double theta, int slot);

/// Age in slots of the oldest pending job at the start of `slot`, 0 if none.
int oldest_job_age(const MGState& s, int slot);

}  // namespace mgtrade
