#pragma once

// Exogenous inputs: per-slot traces read from CSV or synthesized, and the
// uniform load model.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mgtrade/model.hpp"

namespace mgtrade {

struct Trace {
  std::string name;
  std::string unit;
  std::vector<double> values;

  std::size_t slot_count() const { return values.size(); }
  double mean() const;
  /// Throws DataError if empty or any value is negative/non-finite.
  void validate() const;
};

/// Reads a CSV with a header row and one row per slot. `value_column` names
/// the column to keep; `slot_column` (may be empty) must hold 0,1,2,... in
/// order when given. Errors carry the 1-based line number.
Trace load_trace(const std::filesystem::path& path, const std::string& value_column = "value",
                 const std::string& slot_column = "slot");

/// Writes `slot,value` rows.
void save_trace(const std::filesystem::path& path, const Trace& trace);

/// Rescales so the mean equals target_mean_kwh. Throws DataError when the
/// trace mean is zero.
Trace scale_wind(const Trace& trace, double target_mean_kwh);

enum class MGType { Type1, Type2 };

struct LoadModel {
  MGType mg_type = MGType::Type1;
  double low_kwh = 100.0;
  double high_kwh = 200.0;
  std::uint64_t rng_seed = 0;

  static LoadModel for_type(MGType t, std::uint64_t seed);
  void validate() const;
};

struct LoadDraw {
  double di_kwh = 0.0;
  double dt_kwh = 0.0;
};

/// Independent uniform draws in [low, high] for the DI and DT load of `slot`.
/// Each slot has its own seeded stream, so draws do not depend on call order.
LoadDraw draw_loads(const LoadModel& model, int slot);

/// Seeded wind-energy proxy: exp of a stationary AR(1), scaled to the target
/// mean afterwards by the caller.
Trace synthetic_wind(int slots, std::uint64_t seed, double persistence = 0.85,
                     double log_sigma = 0.6);

/// Daily sinusoid plus noise, clamped to [p_min, p_max].
Trace synthetic_price(int slots, std::uint64_t seed, const PriceBounds& pb);

}  // namespace mgtrade
