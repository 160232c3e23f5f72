// SPDX-License-Identifier: Apache-2.0
#include "recal/config.hpp"

#include <fstream>
#include <set>

namespace recal {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError((path.empty() ? "" : path + ".") + it.key() + ": unknown field");
}

template <class T>
void get(const json& j, const char* key, const std::string& path, T& out) {
  if (!j.contains(key)) return;
  const std::string p = (path.empty() ? "" : path + ".") + key;
  try {
    if constexpr (std::is_same_v<T, int>) {
      if (!j.at(key).is_number_integer()) throw ConfigError(p + ": expected an integer");
    } else if constexpr (std::is_same_v<T, double>) {
      if (!j.at(key).is_number()) throw ConfigError(p + ": expected a number");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!j.at(key).is_boolean()) throw ConfigError(p + ": expected true or false");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!j.at(key).is_string()) throw ConfigError(p + ": expected a string");
    }
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(p + ": " + e.what());
  }
}

MismatchDistribution parse_role(const json& j, const std::string& path) {
  check_keys(j, path, {"delta2", "theta"});
  MismatchDistribution d;
  get(j, "delta2", path, d.log_amp_var);
  get(j, "theta", path, d.phase_bound);
  try {
    d.validate();
  } catch (const DomainError& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return d;
}

}  // namespace

json load_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path);
  try {
    return json::parse(f, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("--set expects key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string val = assignment.substr(eq + 1);
  json parsed;
  try {
    parsed = json::parse(val);
  } catch (const json::parse_error&) {
    parsed = val;
  }
  json* node = &j;
  size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (part.empty()) throw ConfigError("--set: malformed key '" + key + "'");
    if (!node->is_object()) *node = json::object();
    if (dot == std::string::npos) {
      (*node)[part] = parsed;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

ExperimentConfig config_from_json(const json& j) {
  check_keys(j, "", {"scenario", "M", "K", "seed", "mode", "a0_db", "noise_var", "pathloss",
                     "geometry", "hardware", "rho_t_db", "ibo_db", "mc", "calibration", "sweep",
                     "methods", "output"});
  ExperimentConfig c;
  std::string s;
  get(j, "scenario", "", s);
  if (!s.empty()) {
    try {
      c.scenario = scenario_from_string(s);
    } catch (const DomainError& e) {
      throw ConfigError(std::string("scenario: ") + e.what());
    }
  }
  get(j, "M", "", c.M);
  get(j, "K", "", c.K);
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer())
      throw ConfigError("seed: expected a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  std::string mode = "surrogate";
  get(j, "mode", "", mode);
  if (mode == "surrogate")
    c.mode = TxMode::surrogate;
  else if (mode == "physical")
    c.mode = TxMode::physical;
  else
    throw ConfigError("mode: expected 'surrogate' or 'physical'");
  get(j, "a0_db", "", c.a0_db);
  get(j, "noise_var", "", c.noise_var);
  std::string pl = "geometry";
  get(j, "pathloss", "", pl);
  if (pl != "geometry" && pl != "unit") throw ConfigError("pathloss: expected 'geometry' or 'unit'");
  c.unit_pathloss = pl == "unit";
  if (j.contains("geometry")) {
    const json& g = j["geometry"];
    check_keys(g, "geometry", {"radius", "min_dist", "zeta_db", "xi"});
    get(g, "radius", "geometry", c.geom.radius);
    get(g, "min_dist", "geometry", c.geom.min_dist);
    double zdb = lin_to_db(c.geom.zeta);
    get(g, "zeta_db", "geometry", zdb);
    c.geom.zeta = db_to_lin(zdb);
    get(g, "xi", "geometry", c.geom.xi);
  }
  if (j.contains("hardware")) {
    const json& h = j["hardware"];
    check_keys(h, "hardware", {"delta2", "theta", "v", "ue_ibo_db", "b0_db", "ibo_db", "roles"});
    get(h, "delta2", "hardware", c.delta2);
    get(h, "theta", "hardware", c.theta);
    get(h, "v", "hardware", c.v);
    get(h, "ue_ibo_db", "hardware", c.ue_ibo_db);
    get(h, "b0_db", "hardware", c.b0_db);
    get(h, "ibo_db", "hardware", c.ibo_db);
    if (h.contains("roles")) {
      const json& r = h["roles"];
      check_keys(r, "hardware.roles", {"a", "t", "r", "u", "v"});
      for (auto it = r.begin(); it != r.end(); ++it)
        c.role_override[it.key()] = parse_role(it.value(), "hardware.roles." + it.key());
    }
  }
  get(j, "rho_t_db", "", c.rho_t_db);
  get(j, "ibo_db", "", c.ibo_db);
  if (j.contains("mc")) {
    const json& m = j["mc"];
    check_keys(m, "mc", {"n_hardware", "n_channels", "n_symbols"});
    get(m, "n_hardware", "mc", c.mc.n_hardware);
    get(m, "n_channels", "mc", c.mc.n_channels);
    get(m, "n_symbols", "mc", c.mc.n_symbols);
  }
  if (j.contains("calibration")) {
    const json& k = j["calibration"];
    const std::string p = "calibration";
    check_keys(k, p, {"order", "n_levels", "n_symbols", "ibo_min_db", "omega_var", "noise_var",
                      "linear_level", "estimator", "pairing", "distortion", "hold_below", "rate"});
    get(k, "order", p, c.cal.order);
    get(k, "n_levels", p, c.cal.n_levels);
    get(k, "n_symbols", p, c.cal.n_symbols);
    get(k, "linear_level", p, c.cal.linear_level);
    get(k, "ibo_min_db", p, c.cal.ibo_min_db);
    get(k, "omega_var", p, c.cal.omega_var);
    get(k, "noise_var", p, c.cal.noise_var);
    get(k, "distortion", p, c.cal.distortion);
    get(k, "hold_below", p, c.cal.hold_below);
    std::string est = "gtls", pair = "cross_level", rate = "closed";
    get(k, "estimator", p, est);
    get(k, "pairing", p, pair);
    get(k, "rate", p, rate);
    if (est == "gtls")
      c.cal.estimator = PolyEstimator::gtls;
    else if (est == "pinned_ls")
      c.cal.estimator = PolyEstimator::pinned_ls;
    else
      throw ConfigError("calibration.estimator: expected 'gtls' or 'pinned_ls'");
    if (pair == "cross_level")
      c.cal.pairing = Pairing::cross_level;
    else if (pair == "same_level")
      c.cal.pairing = Pairing::same_level;
    else
      throw ConfigError("calibration.pairing: expected 'cross_level' or 'same_level'");
    if (rate != "closed" && rate != "mc") throw ConfigError("calibration.rate: expected 'closed' or 'mc'");
    c.cal.mc_rate = rate == "mc";
  }
  if (j.contains("sweep")) {
    const json& sw = j["sweep"];
    if (!sw.is_object()) throw ConfigError("sweep: expected an object");
    for (auto it = sw.begin(); it != sw.end(); ++it) {
      const std::string p = "sweep." + it.key();
      std::vector<double> v;
      if (it->is_number()) {
        v.push_back(it->get<double>());
      } else if (it->is_array()) {
        for (const auto& x : *it) {
          if (!x.is_number()) throw ConfigError(p + ": expected numbers");
          v.push_back(x.get<double>());
        }
      } else {
        throw ConfigError(p + ": expected a number or a list of numbers");
      }
      c.sweep[it.key()] = v;
    }
  }
  if (j.contains("methods")) {
    const json& m = j["methods"];
    if (!m.is_array()) throw ConfigError("methods: expected a list of strings");
    for (const auto& x : m) {
      if (!x.is_string()) throw ConfigError("methods: expected a list of strings");
      c.methods.push_back(x.get<std::string>());
    }
  }
  get(j, "output", "", c.output);
  try {
    c.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  return c;
}

void apply_paper_scale(ExperimentConfig& cfg) {
  cfg.M = 256;
  cfg.K = 20;
}

}  // namespace recal
