#include "mgtrade/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "mgtrade/report.hpp"

namespace mgtrade {

double Trace::mean() const {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

void Trace::validate() const {
  if (values.empty()) throw DataError("trace '" + name + "' is empty");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]) || values[i] < 0.0) {
      throw DataError("trace '" + name + "' slot " + std::to_string(i) + ": negative or non-finite value");
    }
  }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    std::size_t start = cell.find_first_not_of(' ');
    out.push_back(start == std::string::npos ? std::string{} : cell.substr(start));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& cell, const std::filesystem::path& path, int line) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last || cell.empty()) {
    throw DataError(path.string() + ":" + std::to_string(line) + ": not a number: '" + cell + "'");
  }
  return v;
}

}  // namespace

Trace load_trace(const std::filesystem::path& path, const std::string& value_column,
                 const std::string& slot_column) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open trace file: " + path.string());
  std::string line;
  int line_no = 0;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
  ++line_no;
  const auto header = split_csv(line);
  auto find_col = [&](const std::string& name) -> int {
    auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  };
  const int value_idx = find_col(value_column);
  if (value_idx < 0) {
    throw DataError(path.string() + ":1: missing column '" + value_column + "'");
  }
  const int slot_idx = slot_column.empty() ? -1 : find_col(slot_column);
  if (!slot_column.empty() && slot_idx < 0) {
    throw DataError(path.string() + ":1: missing column '" + slot_column + "'");
  }

  Trace trace;
  trace.name = path.stem().string();
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv(line);
    const auto needed = static_cast<std::size_t>(std::max(value_idx, slot_idx));
    if (cells.size() <= needed) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": too few columns");
    }
    if (slot_idx >= 0) {
      const double slot = parse_number(cells[static_cast<std::size_t>(slot_idx)], path, line_no);
      if (slot != static_cast<double>(trace.values.size())) {
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected slot " +
                        std::to_string(trace.values.size()));
      }
    }
    const double v = parse_number(cells[static_cast<std::size_t>(value_idx)], path, line_no);
    if (!std::isfinite(v) || v < 0.0) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": negative value");
    }
    trace.values.push_back(v);
  }
  if (trace.values.empty()) throw DataError(path.string() + ": trace has no rows");
  return trace;
}

void save_trace(const std::filesystem::path& path, const Trace& trace) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write trace: " + path.string());
  out << "slot,value\n";
  for (std::size_t i = 0; i < trace.values.size(); ++i) {
    out << i << ',' << format_fixed(trace.values[i]) << '\n';
  }
}

Trace scale_wind(const Trace& trace, double target_mean_kwh) {
  trace.validate();
  const double m = trace.mean();
  if (!(m > 0.0)) throw DataError("trace '" + trace.name + "' has zero mean; cannot scale");
  Trace out = trace;
  const double factor = target_mean_kwh / m;
  for (double& v : out.values) v *= factor;
  out.unit = "kWh";
  return out;
}

LoadModel LoadModel::for_type(MGType t, std::uint64_t seed) {
  LoadModel m;
  m.mg_type = t;
  m.rng_seed = seed;
  if (t == MGType::Type1) {
    m.low_kwh = 100.0;
    m.high_kwh = 200.0;
  } else {
    m.low_kwh = 200.0;
    m.high_kwh = 400.0;
  }
  return m;
}

void LoadModel::validate() const {
  if (!(low_kwh >= 0.0) || !(high_kwh >= low_kwh)) {
    throw ConfigError("load model needs 0 <= low <= high");
  }
}

LoadDraw draw_loads(const LoadModel& model, int slot) {
  std::seed_seq seq{static_cast<std::uint32_t>(model.rng_seed),
                    static_cast<std::uint32_t>(model.rng_seed >> 32),
                    static_cast<std::uint32_t>(slot)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> u(model.low_kwh, model.high_kwh);
  LoadDraw d;
  d.di_kwh = model.low_kwh == model.high_kwh ? model.low_kwh : u(rng);
  d.dt_kwh = model.low_kwh == model.high_kwh ? model.low_kwh : u(rng);
  return d;
}

Trace synthetic_wind(int slots, std::uint64_t seed, double persistence, double log_sigma) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  Trace t;
  t.name = "wind";
  t.unit = "relative";
  const double innovation = log_sigma * std::sqrt(1.0 - persistence * persistence);
  double z = log_sigma * n01(rng);
  for (int i = 0; i < slots; ++i) {
    t.values.push_back(std::exp(z));
    z = persistence * z + innovation * n01(rng);
  }
  return t;
}

Trace synthetic_price(int slots, std::uint64_t seed, const PriceBounds& pb) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.08 * (pb.p_max - pb.p_min));
  Trace t;
  t.name = "price";
  t.unit = "currency/kWh";
  const double mid = 0.5 * (pb.p_min + pb.p_max);
  const double amp = 0.35 * (pb.p_max - pb.p_min);
  for (int i = 0; i < slots; ++i) {
    // Daily cycle peaking mid-afternoon.
    const double phase = 2.0 * std::numbers::pi * (static_cast<double>(i % 24) - 9.0) / 24.0;
    const double p = mid + amp * std::sin(phase) + noise(rng);
    t.values.push_back(std::clamp(p, pb.p_min, pb.p_max));
  }
  return t;
}

}  // namespace mgtrade
