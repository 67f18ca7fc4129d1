#include "mgtrade/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mgtrade {

namespace {

std::string fmt_num(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

void PriceBounds::validate() const {
  require(std::isfinite(p_min) && std::isfinite(p_max), "price bounds must be finite");
  require(p_min >= 0.0, "p_min must be >= 0");
  require(p_min <= p_max, "p_min must be <= p_max");
}

void MGParams::validate() const {
  const std::string who = "MG " + std::to_string(id) + ": ";
  for (double v : {battery_capacity_kwh, charge_rate_max_kwh, discharge_rate_max_kwh,
                   serve_rate_max_kwh, dt_load_max_kwh, epsilon, epsilon_max, price_floor}) {
    require(std::isfinite(v) && v >= 0.0, who + "energies and prices must be finite and >= 0");
  }
  require(charge_rate_max_kwh <= battery_capacity_kwh,
          who + "charge_rate_max_kwh exceeds battery_capacity_kwh");
  require(epsilon <= epsilon_max, who + "epsilon exceeds epsilon_max");
  require(std::isfinite(v_weight) && v_weight > 0.0, who + "v_weight must be > 0");
}

double compute_a_const(const MGParams& p) {
  const double eps = p.epsilon_max;
  const double j = p.serve_rate_max_kwh;
  const double c = p.charge_rate_max_kwh;
  const double d = p.discharge_rate_max_kwh;
  const double t = p.dt_load_max_kwh;
  return (eps * eps + j * j) / 2.0 + std::max(c * c, d * d) / 2.0 + (j * j + t * t) / 2.0;
}

double compute_v_max(const MGParams& p, const PriceBounds& pb) {
  const double spread = pb.p_max - pb.p_min;
  if (!(spread > 0.0)) {
    throw ConfigError("V^max undefined: p_max must exceed p_min (got " + fmt_num(pb.p_min) +
                      ", " + fmt_num(pb.p_max) + ")");
  }
  const double headroom = p.battery_capacity_kwh - p.dt_load_max_kwh - p.epsilon_max;
  if (!(headroom > 0.0)) {
    throw ConfigError("MG " + std::to_string(p.id) +
                      ": battery capacity must exceed dt_load_max + epsilon_max");
  }
  return headroom / spread;
}

DerivedBounds compute_bounds(const MGParams& p, const PriceBounds& pb) {
  if (!(p.epsilon > 0.0)) {
    throw ConfigError("MG " + std::to_string(p.id) + ": epsilon must be > 0 for a delay bound");
  }
  DerivedBounds b;
  const double vp = p.v_weight * pb.p_max;
  b.a_const = compute_a_const(p);
  b.v_max = compute_v_max(p, pb);
  b.q_max = vp + p.dt_load_max_kwh;
  b.z_max = vp + p.epsilon_max;
  b.theta = vp + p.dt_load_max_kwh + p.epsilon_max;
  b.delta_max_slots = (2.0 * vp + p.dt_load_max_kwh + p.epsilon_max) / p.epsilon;
  return b;
}

void validate_v(const MGParams& p, const PriceBounds& pb) {
  const double vmax = compute_v_max(p, pb);
  if (!(p.v_weight > 0.0) || p.v_weight > vmax * (1.0 + 1e-12)) {
    throw ConfigError("MG " + std::to_string(p.id) + ": v_weight " + fmt_num(p.v_weight) +
                      " outside (0, V^max=" + fmt_num(vmax) + "]");
  }
}

double virtual_battery(double battery_kwh, double theta, const MGParams& p) {
  return battery_kwh - theta - p.discharge_rate_max_kwh;
}

MGState initial_state(double battery_kwh, double theta, const MGParams& p) {
  if (battery_kwh < 0.0 || battery_kwh > p.battery_capacity_kwh) {
    throw ConfigError("initial battery level outside [0, capacity]");
  }
  MGState s;
  s.battery_kwh = battery_kwh;
  s.virtual_battery_kwh = virtual_battery(battery_kwh, theta, p);
  return s;
}

namespace {

void check_storage(const MGState& s, const ControlAction& a, const MGParams& p) {
  const double c = a.charge_kwh;
  const double d = a.discharge_kwh;
  if (c < 0.0 || d < 0.0) {
    throw RejectedAction("rate", "negative charge/discharge");
  }
  if (c > 0.0 && d > 0.0) {
    throw RejectedAction("exclusivity",
                         "charge " + fmt_num(c) + " and discharge " + fmt_num(d) + " both > 0");
  }
  const double c_cap = std::min(p.battery_capacity_kwh - s.battery_kwh, p.charge_rate_max_kwh);
  if (c > c_cap + kEnergyTol) {
    throw RejectedAction("charge",
                         "charge " + fmt_num(c) + " exceeds min(capacity - B, C^max) = " +
                             fmt_num(c_cap));
  }
  const double d_cap = std::min(s.battery_kwh, p.discharge_rate_max_kwh);
  if (d > d_cap + kEnergyTol) {
    throw RejectedAction("discharge",
                         "discharge " + fmt_num(d) + " exceeds min(B, D^max) = " + fmt_num(d_cap));
  }
}

}  // namespace

void check_action(const MGState& s, const ControlAction& a, const MGParams& p,
                  const SlotInputs& in) {
  check_storage(s, a, p);
  if (a.serve_dt_kwh < 0.0 || a.serve_dt_kwh > p.serve_rate_max_kwh + kEnergyTol) {
    throw RejectedAction("serve", "J outside [0, J^max]");
  }
  if (a.grid_purchase_kwh < 0.0) throw RejectedAction("grid", "negative grid purchase");
  if (a.bought_kwh < 0.0 || a.sold_kwh < 0.0) throw RejectedAction("trade", "negative trade");
  const double demand = in.di_load_kwh + a.serve_dt_kwh + a.sold_kwh + a.charge_kwh;
  const double supply = in.renewable_kwh + a.grid_purchase_kwh + a.discharge_kwh + a.bought_kwh;
  const double scale = std::max({1.0, demand, supply});
  if (demand > supply + kEnergyTol * scale) {
    throw RejectedAction("balance",
                         "demand " + fmt_num(demand) + " exceeds supply " + fmt_num(supply));
  }
  // Auction purchases serve loads only: they can neither charge nor be resold.
  const double own = in.renewable_kwh + a.grid_purchase_kwh + a.discharge_kwh;
  if (a.charge_kwh + a.sold_kwh > own + kEnergyTol * scale) {
    throw RejectedAction("purchase-use", "charge + sold exceeds non-auction supply");
  }
  // Only renewable energy may be spilled.
  if (supply - demand > in.renewable_kwh + kEnergyTol * scale) {
    throw RejectedAction("spill", "spill " + fmt_num(supply - demand) + " exceeds renewable " +
                                      fmt_num(in.renewable_kwh));
  }
}

MGState battery_step(const MGState& s, const ControlAction& a, const MGParams& p,
                     double theta) {
  check_storage(s, a, p);
  MGState next = s;
  next.battery_kwh = s.battery_kwh - a.discharge_kwh + a.charge_kwh;
  next.virtual_battery_kwh = virtual_battery(next.battery_kwh, theta, p);
  return next;
}

MGState demand_queue_step(const MGState& s, const ControlAction& a, const SlotInputs& in,
                          int slot) {
  MGState next = s;
  const double served = std::max(a.serve_dt_kwh, 0.0);
  if (s.demand_queue_kwh - served <= 0.0) {
    next.pending_jobs.clear();
    next.demand_queue_kwh = 0.0;
  } else {
    double left = served;
    while (left > 0.0 && !next.pending_jobs.empty()) {
      PendingJob& head = next.pending_jobs.front();
      if (head.remaining_kwh <= left) {
        left -= head.remaining_kwh;
        next.pending_jobs.pop_front();
      } else {
        head.remaining_kwh -= left;
        left = 0.0;
      }
    }
    next.demand_queue_kwh = s.demand_queue_kwh - served;
  }
  if (in.dt_load_kwh > 0.0) {
    next.pending_jobs.push_back({slot, in.dt_load_kwh});
  }
  next.demand_queue_kwh += in.dt_load_kwh;
  return next;
}

MGState delay_queue_step(const MGState& s, const ControlAction& a, const MGParams& p,
                         double backlog_before) {
  MGState next = s;
  const double arrival = backlog_before > 0.0 ? p.epsilon : 0.0;
  next.delay_queue_kwh = std::max(s.delay_queue_kwh - a.serve_dt_kwh, 0.0) + arrival;
  return next;
}

MGState advance(const MGState& s, const ControlAction& a, const SlotInputs& in,
                const MGParams& p, double theta, int slot) {
  const double backlog_before = s.demand_queue_kwh;
  MGState next = battery_step(s, a, p, theta);
  next = demand_queue_step(next, a, in, slot);
  next = delay_queue_step(next, a, p, backlog_before);
  return next;
}

int oldest_job_age(const MGState& s, int slot) {
  if (s.pending_jobs.empty()) return 0;
  return slot - s.pending_jobs.front().arrival_slot;
}

}  // namespace mgtrade
