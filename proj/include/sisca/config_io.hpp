#pragma once

// Scenario files. JSON with keys named after the SystemConfig / geometry /
// fading fields; anything in dB carries the unit in its key. This is the
// only place where dB values are converted.

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sisca/sca.hpp"
#include "sisca/scenario.hpp"

namespace sisca {

/// Thrown for malformed or inconsistent configuration input.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Scenario {
  SystemConfig system;
  GeometryParams geometry;
  FadingParams fading;
  SolveOptions options;

  /// Copies the system-level tolerances into the options.
  void sync_options() {
    options.zeta = system.zeta;
    options.tol_converge = system.tol_converge;
    options.max_iters = system.max_iters;
  }
};

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

inline double get_number(const json& j, const std::string& key, const std::string& where) {
  const json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(where + "." + key + ": must be finite");
  return d;
}

inline int get_int(const json& j, const std::string& key, const std::string& where) {
  const json& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError(where + "." + key + ": expected an integer");
  return v.get<int>();
}

/// Scalar broadcast to K entries, or a list of exactly K.
inline std::vector<double> get_per_user(const json& j, const std::string& key, int K) {
  const json& v = j.at(key);
  std::vector<double> out;
  if (v.is_number()) {
    out.assign(static_cast<std::size_t>(K), v.get<double>());
  } else if (v.is_array()) {
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError(key + ": list entries must be numbers");
      out.push_back(e.get<double>());
    }
    if (out.size() != static_cast<std::size_t>(K)) throw ConfigError(key + ": need exactly K entries");
  } else {
    throw ConfigError(key + ": expected a number or a list");
  }
  for (double d : out) {
    if (!std::isfinite(d)) throw ConfigError(key + ": entries must be finite");
  }
  return out;
}

inline Eigen::Vector3d get_point(const json& v, const std::string& where) {
  if (!v.is_array() || (v.size() != 2 && v.size() != 3)) throw ConfigError(where + ": expected [x, y] or [x, y, z]");
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw ConfigError(where + ": coordinates must be numbers");
    p[static_cast<Index>(i)] = v[i].get<double>();
  }
  if (!p.allFinite()) throw ConfigError(where + ": coordinates must be finite");
  return p;
}

inline void parse_geometry(const json& j, GeometryParams& g) {
  reject_unknown(j,
                 {"bs_position", "irs_position", "user_center", "user_radius", "target_azimuth_deg",
                  "target_elevation_deg", "user_positions"},
                 "geometry");
  if (j.contains("bs_position")) g.bs_position = get_point(j["bs_position"], "geometry.bs_position");
  if (j.contains("irs_position")) g.irs_position = get_point(j["irs_position"], "geometry.irs_position");
  if (j.contains("user_center")) g.user_center = get_point(j["user_center"], "geometry.user_center");
  if (j.contains("user_radius")) {
    g.user_radius = get_number(j, "user_radius", "geometry");
    if (!(g.user_radius >= 0.0)) throw ConfigError("geometry.user_radius: must be >= 0");
  }
  if (j.contains("target_azimuth_deg")) {
    g.target_direction.azimuth = get_number(j, "target_azimuth_deg", "geometry") * kPi / 180.0;
  }
  if (j.contains("target_elevation_deg")) {
    g.target_direction.elevation = get_number(j, "target_elevation_deg", "geometry") * kPi / 180.0;
  }
  if (j.contains("user_positions")) {
    const json& v = j["user_positions"];
    if (!v.is_array()) throw ConfigError("geometry.user_positions: expected a list of points");
    g.fixed_user_positions.clear();
    for (const auto& p : v) g.fixed_user_positions.push_back(get_point(p, "geometry.user_positions"));
  }
}

inline void parse_fading(const json& j, FadingParams& f) {
  reject_unknown(j,
                 {"c0_db", "d0", "alpha_bs_irs", "alpha_irs_user", "alpha_bs_user", "rician_k_db", "element_spacing",
                  "irs_rows"},
                 "fading");
  if (j.contains("c0_db")) f.c0 = db_to_linear(get_number(j, "c0_db", "fading"));
  if (j.contains("d0")) f.d0 = get_number(j, "d0", "fading");
  if (j.contains("alpha_bs_irs")) f.alpha_bs_irs = get_number(j, "alpha_bs_irs", "fading");
  if (j.contains("alpha_irs_user")) f.alpha_irs_user = get_number(j, "alpha_irs_user", "fading");
  if (j.contains("alpha_bs_user")) f.alpha_bs_user = get_number(j, "alpha_bs_user", "fading");
  if (j.contains("rician_k_db")) {
    const json& v = j["rician_k_db"];
    if (v.is_string() && v.get<std::string>() == "inf") {
      f.rician_k = std::numeric_limits<double>::infinity();
    } else {
      f.rician_k = db_to_linear(get_number(j, "rician_k_db", "fading"));
    }
  }
  if (j.contains("element_spacing")) f.element_spacing = get_number(j, "element_spacing", "fading");
  if (j.contains("irs_rows")) f.irs_rows = get_int(j, "irs_rows", "fading");
  if (!(f.d0 > 0.0) || !(f.element_spacing > 0.0) || f.irs_rows < 0) {
    throw ConfigError("fading: d0 and element_spacing must be positive, irs_rows >= 0");
  }
}

inline void parse_solver(const json& j, SolveOptions& o) {
  reject_unknown(j,
                 {"zeta_initial_fraction", "zeta_growth", "zeta_cap_factor", "um_target", "eps_um", "init_attempts",
                  "stall_window", "stall_decrease", "scaling", "ipm_max_iters", "ipm_feastol", "ipm_gaptol"},
                 "solver");
  if (j.contains("zeta_initial_fraction")) o.zeta_initial_fraction = get_number(j, "zeta_initial_fraction", "solver");
  if (j.contains("zeta_growth")) o.zeta_growth = get_number(j, "zeta_growth", "solver");
  if (j.contains("zeta_cap_factor")) o.zeta_cap_factor = get_number(j, "zeta_cap_factor", "solver");
  if (j.contains("um_target")) o.um_target = get_number(j, "um_target", "solver");
  if (j.contains("eps_um")) o.eps_um = get_number(j, "eps_um", "solver");
  if (j.contains("init_attempts")) o.init_attempts = get_int(j, "init_attempts", "solver");
  if (j.contains("stall_window")) o.stall_window = get_int(j, "stall_window", "solver");
  if (j.contains("stall_decrease")) o.stall_decrease = get_number(j, "stall_decrease", "solver");
  if (j.contains("scaling")) {
    const json& v = j["scaling"];
    if (!v.is_string()) throw ConfigError("solver.scaling: expected \"balanced\" or \"literal\"");
    const std::string s = v.get<std::string>();
    if (s == "balanced") {
      o.scaling = SurrogateScaling::kBalanced;
    } else if (s == "literal") {
      o.scaling = SurrogateScaling::kLiteral;
    } else {
      throw ConfigError("solver.scaling: expected \"balanced\" or \"literal\"");
    }
  }
  if (j.contains("ipm_max_iters")) o.solver.max_iters = get_int(j, "ipm_max_iters", "solver");
  if (j.contains("ipm_feastol")) o.solver.feastol = get_number(j, "ipm_feastol", "solver");
  if (j.contains("ipm_gaptol")) {
    o.solver.abstol = get_number(j, "ipm_gaptol", "solver");
    o.solver.reltol = o.solver.abstol;
  }
}

}  // namespace detail

/// Defaults: L=4, N=100, K=3, 40 dBm, 10 dB SINR, 0 dB leakage, -80 dBm noise.
inline Scenario default_scenario() {
  Scenario s;
  s.system = SystemConfig::uniform(4, 100, 3, dbm_to_watts(40.0), db_to_linear(10.0), db_to_linear(0.0),
                                   dbm_to_watts(-80.0), dbm_to_watts(-80.0));
  s.sync_options();
  return s;
}

inline Scenario parse_scenario(const nlohmann::json& j) {
  using detail::get_int;
  using detail::get_number;
  Scenario s = default_scenario();
  try {
    detail::reject_unknown(j,
                           {"L", "N", "K", "power_dbm", "sinr_db", "leakage_db", "noise_dbm", "target_noise_dbm",
                            "zeta", "tol_converge", "max_iters", "tol_feas", "geometry", "fading", "solver"},
                           "scenario");
    SystemConfig& c = s.system;
    if (j.contains("L")) c.L = get_int(j, "L", "scenario");
    if (j.contains("N")) c.N = get_int(j, "N", "scenario");
    if (j.contains("K")) c.K = get_int(j, "K", "scenario");
    if (c.K < 1) throw ConfigError("scenario.K: must be positive");
    const std::size_t K = static_cast<std::size_t>(c.K);
    if (j.contains("power_dbm")) c.power = dbm_to_watts(get_number(j, "power_dbm", "scenario"));
    auto per_user_db = [&](const char* key, std::vector<double>& dst, double (*conv)(double)) {
      if (j.contains(key)) {
        dst = detail::get_per_user(j, key, c.K);
        for (double& d : dst) d = conv(d);
      } else if (dst.size() != K) {
        dst.assign(K, dst.empty() ? 1.0 : dst.front());
      }
    };
    per_user_db("sinr_db", c.sinr_threshold, db_to_linear);
    per_user_db("leakage_db", c.leakage_threshold, db_to_linear);
    per_user_db("noise_dbm", c.noise_var, dbm_to_watts);
    if (j.contains("target_noise_dbm")) c.target_noise_var = dbm_to_watts(get_number(j, "target_noise_dbm", "scenario"));
    if (j.contains("zeta")) {
      if (j["zeta"].is_null()) {
        c.zeta.reset();
      } else {
        c.zeta = get_number(j, "zeta", "scenario");
      }
    }
    if (j.contains("tol_converge")) c.tol_converge = get_number(j, "tol_converge", "scenario");
    if (j.contains("max_iters")) c.max_iters = get_int(j, "max_iters", "scenario");
    if (j.contains("tol_feas")) c.tol_feas = get_number(j, "tol_feas", "scenario");
    if (j.contains("geometry")) detail::parse_geometry(j["geometry"], s.geometry);
    if (j.contains("fading")) detail::parse_fading(j["fading"], s.fading);
    if (j.contains("solver")) detail::parse_solver(j["solver"], s.options);
    s.sync_options();
    c.validate();
    s.options.validate();
    if (!s.geometry.fixed_user_positions.empty() && s.geometry.fixed_user_positions.size() != K) {
      throw ConfigError("geometry.user_positions: need exactly K points");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return s;
}

inline Scenario parse_scenario_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  return parse_scenario(j);
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario_text(ss.str());
}

}  // namespace sisca
