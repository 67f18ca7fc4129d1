#include "mgtrade/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace mgtrade {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": bad value for '" + key + "'");
  }
}

void read_trace(const json& obj, TraceSource& t, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  reject_unknown(obj, {"path", "column", "seed_offset"}, where);
  read(obj, "path", t.path, where);
  read(obj, "column", t.column, where);
  read(obj, "seed_offset", t.seed_offset, where);
}

json trace_json(const TraceSource& t) {
  return {{"path", t.path}, {"column", t.column}, {"seed_offset", t.seed_offset}};
}

MGConfig read_mg(const json& obj, const MGConfig& base, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  reject_unknown(obj,
                 {"id", "type", "battery_capacity_kwh", "charge_rate_max_kwh",
                  "discharge_rate_max_kwh", "serve_rate_max_kwh", "dt_load_max_kwh", "epsilon",
                  "epsilon_max", "price_floor", "v_weight", "v_fraction", "initial_battery_kwh",
                  "load_low_kwh", "load_high_kwh", "renewable_mean_kwh", "wind"},
                 where);
  MGConfig mg = base;
  MGParams& p = mg.params;
  read(obj, "id", p.id, where);
  int type = mg.type == MGType::Type1 ? 1 : 2;
  read(obj, "type", type, where);
  if (type != 1 && type != 2) throw ConfigError(where + ": type must be 1 or 2");
  mg.type = type == 1 ? MGType::Type1 : MGType::Type2;
  read(obj, "battery_capacity_kwh", p.battery_capacity_kwh, where);
  read(obj, "charge_rate_max_kwh", p.charge_rate_max_kwh, where);
  read(obj, "discharge_rate_max_kwh", p.discharge_rate_max_kwh, where);
  read(obj, "serve_rate_max_kwh", p.serve_rate_max_kwh, where);
  read(obj, "dt_load_max_kwh", p.dt_load_max_kwh, where);
  read(obj, "epsilon", p.epsilon, where);
  read(obj, "epsilon_max", p.epsilon_max, where);
  read(obj, "price_floor", p.price_floor, where);
  read(obj, "load_low_kwh", mg.load_low_kwh, where);
  read(obj, "load_high_kwh", mg.load_high_kwh, where);
  read(obj, "renewable_mean_kwh", mg.renewable_mean_kwh, where);
  if (obj.contains("v_weight") && obj.contains("v_fraction")) {
    throw ConfigError(where + ": give v_weight or v_fraction, not both");
  }
  if (obj.contains("v_weight")) {
    read(obj, "v_weight", p.v_weight, where);
    mg.v_fraction.reset();
  }
  if (obj.contains("v_fraction")) {
    double f = 0.0;
    read(obj, "v_fraction", f, where);
    mg.v_fraction = f;
  }
  if (obj.contains("initial_battery_kwh")) {
    double b = 0.0;
    read(obj, "initial_battery_kwh", b, where);
    mg.initial_battery_kwh = b;
  }
  if (obj.contains("wind")) read_trace(obj["wind"], mg.wind, where + ".wind");
  return mg;
}

}  // namespace

Mode parse_mode(const std::string& name) {
  if (name == "auction") return Mode::WithAuction;
  if (name == "solo") return Mode::NoAuction;
  throw ConfigError("unknown mode '" + name + "' (expected auction or solo)");
}

ScenarioConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config: expected a JSON object");
  reject_unknown(doc,
                 {"horizon_slots", "rho1", "rho2", "mode", "seed", "price_bounds", "price",
                  "microgrids"},
                 "config");
  ScenarioConfig cfg = default_scenario();
  read(doc, "horizon_slots", cfg.horizon_slots, "config");
  read(doc, "rho1", cfg.rho1, "config");
  read(doc, "rho2", cfg.rho2, "config");
  read(doc, "seed", cfg.seed, "config");
  if (doc.contains("mode")) {
    std::string m;
    read(doc, "mode", m, "config");
    cfg.mode = parse_mode(m);
  }
  if (doc.contains("price_bounds")) {
    const json& pb = doc["price_bounds"];
    if (!pb.is_object()) throw ConfigError("config.price_bounds: expected an object");
    reject_unknown(pb, {"p_min", "p_max"}, "config.price_bounds");
    read(pb, "p_min", cfg.price_bounds.p_min, "config.price_bounds");
    read(pb, "p_max", cfg.price_bounds.p_max, "config.price_bounds");
  }
  if (doc.contains("price")) read_trace(doc["price"], cfg.price, "config.price");
  if (doc.contains("microgrids")) {
    const json& arr = doc["microgrids"];
    if (!arr.is_array() || arr.empty()) throw ConfigError("config.microgrids: expected a non-empty array");
    const std::vector<MGConfig> defaults = cfg.microgrids;
    cfg.microgrids.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      // Entries inherit from the default MG of the same position (or type 1).
      MGConfig base = i < defaults.size() ? defaults[i] : defaults.front();
      base.params.id = static_cast<int>(i) + 1;
      base.wind.seed_offset = i + 1;
      cfg.microgrids.push_back(read_mg(arr[i], base, "config.microgrids[" + std::to_string(i) + "]"));
    }
  }
  cfg.finalize();
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const ScenarioConfig& config) {
  json doc;
  doc["horizon_slots"] = config.horizon_slots;
  doc["rho1"] = config.rho1;
  doc["rho2"] = config.rho2;
  doc["mode"] = mode_name(config.mode);
  doc["seed"] = config.seed;
  doc["price_bounds"] = {{"p_min", config.price_bounds.p_min}, {"p_max", config.price_bounds.p_max}};
  doc["price"] = trace_json(config.price);
  json arr = json::array();
  for (const MGConfig& mg : config.microgrids) {
    const MGParams& p = mg.params;
    json o = {{"id", p.id},
              {"type", mg.type == MGType::Type1 ? 1 : 2},
              {"battery_capacity_kwh", p.battery_capacity_kwh},
              {"charge_rate_max_kwh", p.charge_rate_max_kwh},
              {"discharge_rate_max_kwh", p.discharge_rate_max_kwh},
              {"serve_rate_max_kwh", p.serve_rate_max_kwh},
              {"dt_load_max_kwh", p.dt_load_max_kwh},
              {"epsilon", p.epsilon},
              {"epsilon_max", p.epsilon_max},
              {"price_floor", p.price_floor},
              {"v_weight", p.v_weight},
              {"load_low_kwh", mg.load_low_kwh},
              {"load_high_kwh", mg.load_high_kwh},
              {"renewable_mean_kwh", mg.renewable_mean_kwh},
              {"wind", trace_json(mg.wind)}};
    if (mg.initial_battery_kwh) o["initial_battery_kwh"] = *mg.initial_battery_kwh;
    arr.push_back(std::move(o));
  }
  doc["microgrids"] = std::move(arr);
  return doc.dump(2) + "\n";
}

}  // namespace mgtrade
