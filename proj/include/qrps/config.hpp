#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qrps/errors.hpp"
#include "qrps/quantum.hpp"
#include "qrps/scenarios.hpp"

namespace qrps {

using nlohmann::json;

inline const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{
      "ward_c",   "rps_filter", "sunday_rps",
      "wedge_qrps", "vee_qrps", "black_box",
      "crystal_ball_signalling"};
  return names;
}

// Scenarios driven by a kept-round target use n_kept; the rest run a fixed
// number of rounds/trials.
inline bool scenario_uses_kept(const std::string& scenario) {
  return scenario == "rps_filter" || scenario == "wedge_qrps";
}

// Follows (and creates) a dotted path like params.p_a and assigns `value`.
inline void set_by_path(json& root, const std::string& dotted, json value) {
  json* cur = &root;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = dotted.find('.', start);
    const std::string key = dotted.substr(start, dot - start);
    if (key.empty()) throw ConfigError("override path '" + dotted + "' has an empty key");
    if (dot == std::string::npos) {
      (*cur)[key] = std::move(value);
      return;
    }
    cur = &(*cur)[key];
    if (!cur->is_object() && !cur->is_null())
      throw ConfigError("override path '" + dotted + "' crosses a non-object key");
    start = dot + 1;
  }
}

// --set values are JSON when they parse as JSON, bare strings otherwise.
inline json parse_override_value(const std::string& text) {
  json v = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (v.is_discarded()) return json(text);
  return v;
}

namespace confdetail {

inline double require_number(const json& j, const std::string& key, double lo, double hi,
                             double fallback, bool lo_open = false, bool hi_open = false) {
  double v = fallback;
  if (j.contains(key)) {
    if (!j.at(key).is_number())
      throw ConfigError("config key '" + key + "' must be a number");
    v = j.at(key).get<double>();
  }
  const bool lo_ok = lo_open ? v > lo : v >= lo;
  const bool hi_ok = hi_open ? v < hi : v <= hi;
  if (!std::isfinite(v) || !lo_ok || !hi_ok)
    throw ConfigError("config key '" + key + "' out of range");
  return v;
}

inline std::vector<MeasurementAngle> angles_from(const json& params, const std::string& key,
                                                 const std::vector<double>& fallback_deg) {
  std::vector<double> deg = fallback_deg;
  if (params.contains(key)) {
    const json& arr = params.at(key);
    if (!arr.is_array() || arr.empty())
      throw ConfigError("config key 'params." + key + "' must be a non-empty array");
    deg.clear();
    for (const auto& v : arr) {
      if (!v.is_number() || !std::isfinite(v.get<double>()))
        throw ConfigError("config key 'params." + key + "' must hold finite numbers");
      deg.push_back(v.get<double>());
    }
  }
  std::vector<MeasurementAngle> out;
  out.reserve(deg.size());
  for (double d : deg) out.push_back(MeasurementAngle::from_degrees(d));
  return out;
}

inline std::vector<double> dist_from(const json& params, const std::string& key,
                                     std::size_t size) {
  if (!params.contains(key))
    return std::vector<double>(size, 1.0 / static_cast<double>(size));
  const json& arr = params.at(key);
  if (!arr.is_array() || arr.size() != size)
    throw ConfigError("config key 'params." + key + "' must be an array of length " +
                      std::to_string(size));
  std::vector<double> p;
  double sum = 0.0;
  for (const auto& v : arr) {
    if (!v.is_number() || v.get<double>() < 0.0)
      throw ConfigError("config key 'params." + key + "' must hold non-negative numbers");
    p.push_back(v.get<double>());
    sum += p.back();
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw ConfigError("config key 'params." + key + "' must sum to 1");
  return p;
}

}  // namespace confdetail

// Fully resolved run description: every default applied, every value
// validated. `echo` is the canonical config that reproduces this run.
struct RunConfig {
  std::string scenario;
  std::uint64_t seed = 0;
  int threads = 1;
  std::uint64_t count = 0;  // n_kept or n_rounds, per scenario_uses_kept
  std::uint64_t budget = 1'000'000'000;  // rejection-sampling trial cap
  std::string output_format = "json";
  std::string output_path;  // empty writes to stdout
  std::string raw_path;
  bool emit_raw = false;
  bool stamp = false;

  WardCParams ward;
  RpsFilterParams rps;
  std::vector<MeasurementAngle> alice_angles;
  std::vector<MeasurementAngle> bob_angles;
  std::string target_name = "singlet";  // or "product" or "table"
  std::optional<ConditionalTable> target_table;
  SettingsDist settings;
  std::size_t knob = 0;

  json echo;  // manifest config: scenario, params, seed, count, format, emit_raw, stamp

  ConditionalTable resolve_target() const {
    if (target_table) return *target_table;
    if (target_name == "product")
      return product_target(alice_angles.size(), bob_angles.size());
    return target_conditional(alice_angles, bob_angles);
  }
};

namespace confdetail {

inline void reject_unknown_keys(const json& obj, const std::vector<std::string>& allowed,
                                const std::string& prefix) {
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const auto& a : allowed) known = known || a == key;
    if (!known)
      throw ConfigError("unknown config key '" + prefix + key + "'");
  }
}

}  // namespace confdetail

inline RunConfig parse_config(const json& raw) {
  if (!raw.is_object()) throw ConfigError("config must be a JSON object");
  confdetail::reject_unknown_keys(
      raw,
      {"scenario", "seed", "threads", "n_rounds", "n_kept", "budget", "output_format",
       "output_path", "raw_path", "emit_raw", "stamp", "params"},
      "");
  RunConfig cfg;

  if (!raw.contains("scenario") || !raw.at("scenario").is_string())
    throw ConfigError("config key 'scenario' is required and must be a string");
  cfg.scenario = raw.at("scenario").get<std::string>();
  bool known = false;
  for (const auto& name : scenario_names()) known = known || name == cfg.scenario;
  if (!known) {
    std::ostringstream msg;
    msg << "config key 'scenario' must be one of {";
    for (std::size_t i = 0; i < scenario_names().size(); ++i)
      msg << (i ? ", " : "") << scenario_names()[i];
    msg << "}";
    throw ConfigError(msg.str());
  }

  if (raw.contains("seed")) {
    const json& s = raw.at("seed");
    if (!s.is_number_integer() || (s.is_number_integer() && !s.is_number_unsigned() &&
                                   s.get<std::int64_t>() < 0))
      throw ConfigError("config key 'seed' must be a non-negative integer");
    cfg.seed = s.get<std::uint64_t>();
  }

  if (raw.contains("threads")) {
    if (!raw.at("threads").is_number_integer())
      throw ConfigError("config key 'threads' must be an integer");
    const auto t = raw.at("threads").get<std::int64_t>();
    if (t < 1 || t > 256) throw ConfigError("config key 'threads' out of range [1,256]");
    cfg.threads = static_cast<int>(t);
  }

  const bool uses_kept = scenario_uses_kept(cfg.scenario);
  const char* want = uses_kept ? "n_kept" : "n_rounds";
  const char* other = uses_kept ? "n_rounds" : "n_kept";
  if (raw.contains(other))
    throw ConfigError("scenario '" + cfg.scenario + "' takes config key '" + want +
                      "', not '" + other + "'");
  if (!raw.contains(want))
    throw ConfigError("config key '" + std::string(want) + "' is required for scenario '" +
                      cfg.scenario + "'");
  if (!raw.at(want).is_number_integer() || raw.at(want).get<std::int64_t>() <= 0)
    throw ConfigError("config key '" + std::string(want) + "' must be a positive integer");
  cfg.count = raw.at(want).get<std::uint64_t>();

  if (raw.contains("budget")) {
    if (!raw.at("budget").is_number_integer() || raw.at("budget").get<std::int64_t>() <= 0)
      throw ConfigError("config key 'budget' must be a positive integer");
    cfg.budget = raw.at("budget").get<std::uint64_t>();
  }

  if (raw.contains("output_format")) {
    if (!raw.at("output_format").is_string())
      throw ConfigError("config key 'output_format' must be a string");
    cfg.output_format = raw.at("output_format").get<std::string>();
    if (cfg.output_format != "csv" && cfg.output_format != "json")
      throw ConfigError("config key 'output_format' must be 'csv' or 'json'");
  }
  if (raw.contains("output_path")) {
    if (!raw.at("output_path").is_string())
      throw ConfigError("config key 'output_path' must be a string");
    cfg.output_path = raw.at("output_path").get<std::string>();
  }
  if (raw.contains("emit_raw")) {
    if (!raw.at("emit_raw").is_boolean())
      throw ConfigError("config key 'emit_raw' must be a boolean");
    cfg.emit_raw = raw.at("emit_raw").get<bool>();
  }
  if (raw.contains("raw_path")) {
    if (!raw.at("raw_path").is_string())
      throw ConfigError("config key 'raw_path' must be a string");
    cfg.raw_path = raw.at("raw_path").get<std::string>();
  }
  if (cfg.raw_path.empty())
    cfg.raw_path = (cfg.output_path.empty() ? "qrps" : cfg.output_path) + ".raw.csv";
  if (raw.contains("stamp")) {
    if (!raw.at("stamp").is_boolean())
      throw ConfigError("config key 'stamp' must be a boolean");
    cfg.stamp = raw.at("stamp").get<bool>();
  }

  const json params = raw.contains("params") ? raw.at("params") : json::object();
  if (!params.is_object()) throw ConfigError("config key 'params' must be an object");
  json params_echo = json::object();

  using confdetail::angles_from;
  using confdetail::dist_from;
  using confdetail::require_number;

  if (cfg.scenario == "ward_c") {
    confdetail::reject_unknown_keys(params, {"p_a", "p_b"}, "params.");
    cfg.ward.p_a = require_number(params, "p_a", 0.0, 1.0, 0.01, true, true);
    cfg.ward.p_b = require_number(params, "p_b", 0.0, 1.0, 0.01, true, true);
    params_echo = {{"p_a", cfg.ward.p_a}, {"p_b", cfg.ward.p_b}};
  } else if (cfg.scenario == "rps_filter") {
    confdetail::reject_unknown_keys(params, {"keep_bob_win", "keep_other"}, "params.");
    cfg.rps.keep_bob_win = require_number(params, "keep_bob_win", 0.0, 1.0, 0.1);
    cfg.rps.keep_other = require_number(params, "keep_other", 0.0, 1.0, 1.0);
    params_echo = {{"keep_bob_win", cfg.rps.keep_bob_win},
                   {"keep_other", cfg.rps.keep_other}};
  } else if (cfg.scenario == "sunday_rps" || cfg.scenario == "crystal_ball_signalling") {
    confdetail::reject_unknown_keys(params, {}, "params.");
    params_echo = json::object();
  } else {
    // wedge_qrps, vee_qrps, black_box
    const bool is_box = cfg.scenario == "black_box";
    std::vector<std::string> allowed{"alice_angles_deg", "bob_angles_deg",
                                     "alice_settings_dist", "bob_settings_dist"};
    if (is_box)
      allowed.push_back("knob");
    else {
      allowed.push_back("target");
      allowed.push_back("target_table");
    }
    confdetail::reject_unknown_keys(params, allowed, "params.");
    const std::vector<double> default_a = is_box ? std::vector<double>{0.0, 90.0}
                                                 : std::vector<double>{0.0, 120.0, 240.0};
    const std::vector<double> default_b = is_box ? std::vector<double>{45.0, 135.0}
                                                 : std::vector<double>{0.0, 120.0, 240.0};
    cfg.alice_angles = angles_from(params, "alice_angles_deg", default_a);
    cfg.bob_angles = angles_from(params, "bob_angles_deg", default_b);
    cfg.settings.alice = dist_from(params, "alice_settings_dist", cfg.alice_angles.size());
    cfg.settings.bob = dist_from(params, "bob_settings_dist", cfg.bob_angles.size());

    if (is_box) {
      if (params.contains("knob")) {
        if (!params.at("knob").is_number_integer())
          throw ConfigError("config key 'params.knob' must be an integer");
        const auto k = params.at("knob").get<std::int64_t>();
        if (k < 0 || k > 1)
          throw ConfigError("config key 'params.knob' must be 0 (singlet) or 1 (product)");
        cfg.knob = static_cast<std::size_t>(k);
      }
    } else if (params.contains("target_table")) {
      const json& tbl = params.at("target_table");
      const std::size_t n_a = cfg.alice_angles.size();
      const std::size_t n_b = cfg.bob_angles.size();
      if (!tbl.is_array() || tbl.size() != n_a)
        throw ConfigError("config key 'params.target_table' must be a " +
                          std::to_string(n_a) + "-row array");
      ConditionalTable t;
      t.n_a = n_a;
      t.n_b = n_b;
      for (std::size_t i = 0; i < n_a; ++i) {
        if (!tbl[i].is_array() || tbl[i].size() != n_b)
          throw ConfigError("config key 'params.target_table' row " + std::to_string(i) +
                            " must have " + std::to_string(n_b) + " entries");
        for (std::size_t j = 0; j < n_b; ++j) {
          const json& cell = tbl[i][j];
          if (!cell.is_array() || cell.size() != 4)
            throw ConfigError("config key 'params.target_table' entry (" +
                              std::to_string(i) + "," + std::to_string(j) +
                              ") must be 4 probabilities");
          OutcomePairDistribution d;
          for (int c = 0; c < 4; ++c) {
            if (!cell[c].is_number())
              throw ConfigError("config key 'params.target_table' holds a non-number");
            d.p[c] = cell[c].get<double>();
          }
          if (!d.is_distribution(1e-9))
            throw ConfigError("invalid target distribution at params.target_table (" +
                              std::to_string(i) + "," + std::to_string(j) + ")");
          t.rows.push_back(d);
        }
      }
      cfg.target_table = std::move(t);
      cfg.target_name = "table";
    } else if (params.contains("target")) {
      if (!params.at("target").is_string())
        throw ConfigError("config key 'params.target' must be a string");
      cfg.target_name = params.at("target").get<std::string>();
      if (cfg.target_name != "singlet" && cfg.target_name != "product")
        throw ConfigError("config key 'params.target' must be 'singlet' or 'product'");
    }

    json a_deg = json::array(), b_deg = json::array();
    for (const auto& a : cfg.alice_angles) a_deg.push_back(a.degrees());
    for (const auto& b : cfg.bob_angles) b_deg.push_back(b.degrees());
    params_echo["alice_angles_deg"] = a_deg;
    params_echo["bob_angles_deg"] = b_deg;
    params_echo["alice_settings_dist"] = cfg.settings.alice;
    params_echo["bob_settings_dist"] = cfg.settings.bob;
    if (is_box) {
      params_echo["knob"] = cfg.knob;
    } else if (cfg.target_table) {
      json tbl = json::array();
      for (std::size_t i = 0; i < cfg.target_table->n_a; ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < cfg.target_table->n_b; ++j)
          row.push_back(cfg.target_table->row(i, j).p);
        tbl.push_back(row);
      }
      params_echo["target_table"] = tbl;
    } else {
      params_echo["target"] = cfg.target_name;
    }
  }

  // The echo deliberately leaves out execution details (threads, paths):
  // re-running it must reproduce the report byte for byte on any machine
  // and thread count.
  cfg.echo = {{"scenario", cfg.scenario}, {"seed", cfg.seed},
              {want, cfg.count},          {"budget", cfg.budget},
              {"params", params_echo},    {"output_format", cfg.output_format},
              {"emit_raw", cfg.emit_raw}, {"stamp", cfg.stamp}};
  return cfg;
}

// Accepts either a plain config or a previously written report; a report's
// manifest.config reproduces its run.
inline json load_config_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded())
    throw ConfigError("config file '" + path + "' is not valid JSON");
  if (j.is_object() && j.contains("manifest") && j.at("manifest").is_object() &&
      j.at("manifest").contains("config"))
    return j.at("manifest").at("config");
  return j;
}

}  // namespace qrps
