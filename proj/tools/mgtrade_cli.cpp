// mgtrade: run, audit and sweep microgrid trading scenarios.
//
// Exit codes: 0 ok, 2 usage or configuration, 3 bad data or logs, 4 invariant
// or audit failure.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mgtrade/config.hpp"
#include "mgtrade/report.hpp"
#include "mgtrade/sim.hpp"

namespace fs = std::filesystem;
using namespace mgtrade;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitInvariant = 4;

fs::path default_out_root() {
  if (const char* env = std::getenv("MGTRADE_OUT"); env && *env) return env;
  return "mgtrade-out";
}

struct Common {
  std::string config_path;
  std::string out;
  std::string mode = "auction";
  std::optional<std::uint64_t> seed;
  std::optional<int> horizon;
};

struct Loaded {
  ScenarioConfig config;
  fs::path base_dir;
};

Loaded load(const Common& c) {
  Loaded l;
  if (c.config_path.empty()) {
    l.config = default_scenario();
  } else {
    if (!fs::exists(c.config_path)) throw ConfigError("config file not found: " + c.config_path);
    l.config = load_config(c.config_path);
    l.base_dir = fs::path(c.config_path).parent_path();
  }
  if (c.seed) l.config.seed = *c.seed;
  if (c.horizon) l.config.horizon_slots = *c.horizon;
  l.config.finalize();
  return l;
}

fs::path out_dir(const Common& c) { return c.out.empty() ? default_out_root() : fs::path(c.out); }

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write " + path.string());
  os << text;
  if (!os) throw DataError("write failed: " + path.string());
}

// Runs one mode into dir and returns the result. Also writes audit.txt.
RunResult run_into(const ScenarioConfig& config, const ScenarioInputs& inputs, const fs::path& dir) {
  fs::create_directories(dir);
  RunResult res = run(config, inputs);
  write_file(dir / "config.json", dump_config(config));
  std::ostringstream slots, summary, market, audit;
  write_slots_csv(slots, res.records);
  write_summary_csv(summary, res.summary);
  write_market_csv(market, res.records);
  std::unique_ptr<OracleResult> oracle;
  if (config.horizon_slots <= 48 && config.microgrids.size() <= 3) {
    oracle = std::make_unique<OracleResult>(offline_oracle(config, inputs));
  }
  const AuditReport rep = bound_audit(res.summary, config, res.bounds, oracle.get(), res.violations);
  write_audit(audit, rep);
  write_file(dir / "slots.csv", slots.str());
  write_file(dir / "summary.csv", summary.str());
  write_file(dir / "market.csv", market.str());
  write_file(dir / "audit.txt", audit.str());
  return res;
}

void print_summary(const RunSummary& s, double seconds) {
  std::printf("%-8s mean time-average cost %s  grid %s kWh  traded %s kWh  violations %d  (%.2fs)\n",
              mode_name(s.mode), format_fixed(s.mean_time_average_cost).c_str(),
              format_fixed(s.total_grid_kwh).c_str(), format_fixed(s.total_traded_kwh).c_str(),
              s.violation_count, seconds);
}

double percent_reduction(double base, double value) {
  return base == 0.0 ? 0.0 : 100.0 * (base - value) / base;
}

int cmd_run(const Common& c) {
  Loaded l = load(c);
  const fs::path dir = out_dir(c);
  const ScenarioInputs inputs = build_inputs(l.config, l.base_dir);
  std::vector<Mode> modes;
  if (c.mode == "both") {
    modes = {Mode::WithAuction, Mode::NoAuction};
  } else {
    modes = {parse_mode(c.mode)};
  }
  std::vector<RunSummary> summaries;
  int violations = 0;
  for (Mode m : modes) {
    ScenarioConfig cfg = l.config;
    cfg.mode = m;
    const auto t0 = std::chrono::steady_clock::now();
    const RunResult res = run_into(cfg, inputs, modes.size() > 1 ? dir / mode_name(m) : dir);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    print_summary(res.summary, secs);
    violations += res.summary.violation_count;
    summaries.push_back(res.summary);
  }
  if (summaries.size() == 2) {
    const RunSummary& a = summaries[0];
    const RunSummary& s = summaries[1];
    const double cost_red = percent_reduction(s.mean_time_average_cost, a.mean_time_average_cost);
    const double grid_red = percent_reduction(s.total_grid_kwh, a.total_grid_kwh);
    std::printf("cost reduction vs solo: %.2f%%  grid purchase reduction: %.2f%%\n", cost_red, grid_red);
    std::ostringstream cmp;
    cmp << "mg_id,auction_cost,solo_cost,cost_reduction_pct,auction_grid_kwh,solo_grid_kwh\n";
    for (std::size_t m = 0; m < a.mgs.size(); ++m) {
      cmp << a.mgs[m].mg_id << ',' << format_fixed(a.mgs[m].time_average_cost) << ','
          << format_fixed(s.mgs[m].time_average_cost) << ','
          << format_fixed(percent_reduction(s.mgs[m].time_average_cost, a.mgs[m].time_average_cost))
          << ',' << format_fixed(a.mgs[m].total_grid_kwh) << ','
          << format_fixed(s.mgs[m].total_grid_kwh) << '\n';
    }
    cmp << "all," << format_fixed(a.mean_time_average_cost) << ','
        << format_fixed(s.mean_time_average_cost) << ',' << format_fixed(cost_red) << ','
        << format_fixed(a.total_grid_kwh) << ',' << format_fixed(s.total_grid_kwh) << '\n';
    write_file(dir / "comparison.csv", cmp.str());
  }
  std::printf("outputs in %s\n", dir.string().c_str());
  return violations == 0 ? 0 : kExitInvariant;
}

struct AuditedRun {
  std::string label;
  ScenarioConfig config;
  AuditReport report;
  RunSummary summary;
};

AuditedRun audit_dir(const fs::path& dir) {
  AuditedRun a;
  a.label = dir.filename().string();
  a.config = load_config(dir / "config.json");
  std::ifstream in(dir / "slots.csv");
  if (!in) throw DataError("missing " + (dir / "slots.csv").string());
  const std::vector<SlotRecord> records = read_slots_csv(in);
  a.report = audit_log(a.config, records);
  a.summary = summarize(a.config.mode, records, 0);
  return a;
}

bool is_run_dir(const fs::path& p) {
  return fs::exists(p / "slots.csv") && fs::exists(p / "config.json");
}

int cmd_audit(const std::string& dir_arg) {
  const fs::path dir = dir_arg;
  if (!fs::is_directory(dir)) throw ConfigError("not a directory: " + dir_arg);
  std::vector<fs::path> runs;
  if (is_run_dir(dir)) {
    runs.push_back(dir);
  } else {
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.is_directory() && is_run_dir(e.path())) runs.push_back(e.path());
    }
    std::sort(runs.begin(), runs.end());
  }
  if (runs.empty()) throw DataError("no run logs (config.json + slots.csv) under " + dir_arg);
  bool ok = true;
  std::vector<AuditedRun> audited;
  for (const fs::path& r : runs) {
    AuditedRun a = audit_dir(r);
    std::printf("== %s\n", r.string().c_str());
    std::ostringstream os;
    write_audit(os, a.report);
    std::fputs(os.str().c_str(), stdout);
    ok = ok && a.report.all_passed();
    audited.push_back(std::move(a));
  }
  if (audited.size() > 1) {
    std::printf("\n%-12s %14s %14s %14s %14s\n", "run", "mean_V", "mean_cost", "mean_A/V", "cost_bound_ok");
    for (const AuditedRun& a : audited) {
      double v = 0.0, av = 0.0;
      for (const MGConfig& mg : a.config.microgrids) {
        v += mg.params.v_weight;
        av += compute_a_const(mg.params) / mg.params.v_weight;
      }
      const double n = static_cast<double>(a.config.microgrids.size());
      bool bound_ok = true;
      bool has_bound = false;
      for (const AuditCheck& c : a.report.checks) {
        if (c.name == "cost<=oracle+A/V") {
          has_bound = true;
          bound_ok = bound_ok && c.passed;
        }
      }
      std::printf("%-12s %14s %14s %14s %14s\n", a.label.c_str(), format_fixed(v / n).c_str(),
                  format_fixed(a.summary.mean_time_average_cost).c_str(), format_fixed(av / n).c_str(),
                  has_bound ? (bound_ok ? "PASS" : "FAIL") : "n/a");
    }
  }
  return ok ? 0 : kExitInvariant;
}

std::vector<double> parse_fractions(const std::string& spec) {
  std::vector<double> out;
  std::istringstream is(spec);
  std::string cell;
  while (std::getline(is, cell, ',')) {
    try {
      std::size_t used = 0;
      const double f = std::stod(cell, &used);
      if (used != cell.size()) throw std::invalid_argument(cell);
      if (!(f > 0.0) || f > 1.0) throw ConfigError("sweep fraction " + cell + " outside (0, 1]");
      out.push_back(f);
    } catch (const std::logic_error&) {
      throw ConfigError("bad sweep fraction '" + cell + "'");
    }
  }
  if (out.empty()) throw ConfigError("empty sweep");
  return out;
}

int cmd_sweep(const Common& c, const std::string& fractions) {
  Loaded l = load(c);
  const fs::path dir = out_dir(c);
  const std::vector<double> fr = parse_fractions(fractions);
  const ScenarioInputs inputs = build_inputs(l.config, l.base_dir);
  const bool with_oracle = l.config.horizon_slots <= 48 && l.config.microgrids.size() <= 3;
  std::ostringstream table;
  table << "v_fraction,mean_v,mean_cost,oracle_cost,gap,mean_a_over_v,bound_ok\n";
  std::printf("%-10s %14s %14s %14s %14s %14s %8s\n", "fraction", "mean_V", "mean_cost", "oracle",
              "gap", "mean_A/V", "bound");
  int exit_code = 0;
  for (double f : fr) {
    ScenarioConfig cfg = l.config;
    cfg.mode = c.mode == "solo" ? Mode::NoAuction : Mode::WithAuction;
    for (MGConfig& mg : cfg.microgrids) mg.v_fraction = f;
    cfg.finalize();
    char name[32];
    std::snprintf(name, sizeof name, "v_%.2f", f);
    const RunResult res = run_into(cfg, inputs, dir / name);
    double v = 0.0, av = 0.0;
    for (std::size_t m = 0; m < cfg.microgrids.size(); ++m) {
      v += cfg.microgrids[m].params.v_weight;
      av += res.bounds[m].a_const / cfg.microgrids[m].params.v_weight;
    }
    const double n = static_cast<double>(cfg.microgrids.size());
    std::string oracle_s = "n/a", gap_s = "n/a", ok_s = "n/a";
    if (with_oracle) {
      const OracleResult o = offline_oracle(cfg, inputs);
      bool ok = true;
      for (std::size_t m = 0; m < cfg.microgrids.size(); ++m) {
        ok = ok && res.summary.mgs[m].time_average_cost <=
                       o.per_mg_time_average_cost[m] + res.bounds[m].a_const / cfg.microgrids[m].params.v_weight + 1e-9;
      }
      oracle_s = format_fixed(o.mean_time_average_cost);
      gap_s = format_fixed(res.summary.mean_time_average_cost - o.mean_time_average_cost);
      ok_s = ok ? "PASS" : "FAIL";
      if (!ok) exit_code = kExitInvariant;
    }
    if (res.summary.violation_count > 0) exit_code = kExitInvariant;
    std::printf("%-10.2f %14s %14s %14s %14s %14s %8s\n", f, format_fixed(v / n).c_str(),
                format_fixed(res.summary.mean_time_average_cost).c_str(), oracle_s.c_str(),
                gap_s.c_str(), format_fixed(av / n).c_str(), ok_s.c_str());
    table << format_fixed(f) << ',' << format_fixed(v / n) << ','
          << format_fixed(res.summary.mean_time_average_cost) << ',' << oracle_s << ',' << gap_s
          << ',' << format_fixed(av / n) << ',' << ok_s << '\n';
  }
  write_file(dir / "sweep.csv", table.str());
  std::printf("outputs in %s\n", dir.string().c_str());
  return exit_code;
}

void add_common(CLI::App* app, Common& c, bool allow_both) {
  app->add_option("--config", c.config_path, "scenario JSON (default: built-in six-MG scenario)");
  app->add_option("--out", c.out, "output directory (default: $MGTRADE_OUT or ./mgtrade-out)");
  std::vector<std::string> modes = {"auction", "solo"};
  if (allow_both) modes.push_back("both");
  app->add_option("--mode", c.mode, "market mode")->check(CLI::IsMember(modes));
  app->add_option("--seed", c.seed, "override the scenario seed");
  app->add_option("--horizon", c.horizon, "override the number of slots")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Microgrid energy trading simulator"};
  app.require_subcommand(1);

  Common run_opts;
  auto* run_cmd = app.add_subcommand("run", "simulate a scenario and write logs");
  add_common(run_cmd, run_opts, true);

  std::string audit_path;
  auto* audit_cmd = app.add_subcommand("audit", "re-check a run (or a sweep) from its logs");
  audit_cmd->add_option("dir", audit_path, "run or sweep output directory")->required();

  Common sweep_opts;
  std::string fractions = "0.2,0.4,0.6,0.8,1.0";
  auto* sweep_cmd = app.add_subcommand("sweep", "run a V sweep and tabulate the cost gap");
  add_common(sweep_cmd, sweep_opts, false);
  sweep_cmd->add_option("--fractions", fractions, "comma-separated fractions of V^max in (0, 1]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*run_cmd) return cmd_run(run_opts);
    if (*audit_cmd) return cmd_audit(audit_path);
    if (*sweep_cmd) return cmd_sweep(sweep_opts, fractions);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitUsage;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const RejectedAction& e) {
    std::fprintf(stderr, "invariant violation: %s\n", e.what());
    return kExitInvariant;
  } catch (const InvariantViolation& e) {
    std::fprintf(stderr, "invariant violation: %s\n", e.what());
    return kExitInvariant;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  }
  return kExitUsage;
}
