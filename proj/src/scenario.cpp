// SPDX-License-Identifier: Apache-2.0
//
// beamnet: joint unicast/broadcast beamforming for cellular networks
// Copyright (C) 2026 The beamnet authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "beamnet/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace beamnet {

std::string to_string(UserId u) {
  return std::to_string(u.cell + 1) + ":" + std::to_string(u.index + 1);
}

std::string to_string(Scheme s) { return s == Scheme::tdm ? "tdm" : "ldm"; }

Scheme scheme_from_string(const std::string& s) {
  if (s == "tdm") return Scheme::tdm;
  if (s == "ldm") return Scheme::ldm;
  throw ConfigError("unknown scheme '" + s + "'");
}

double NetworkConfig::noise_power_w() const { return dbw_to_watts(noise_power_dbw); }

std::vector<double> default_tdm_fraction_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 19; ++i) grid.push_back(i / 20.0);
  return grid;
}

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& why) {
  throw ConfigError("config field '" + field + "': " + why);
}

UserId parse_user_key(const std::string& key, int n_cells, int users_per_cell) {
  auto colon = key.find(':');
  if (colon == std::string::npos) fail(key, "user keys must look like \"n:k\"");
  int n = 0, k = 0;
  try {
    n = std::stoi(key.substr(0, colon));
    k = std::stoi(key.substr(colon + 1));
  } catch (const std::exception&) {
    fail(key, "user keys must look like \"n:k\"");
  }
  if (n < 1 || n > n_cells || k < 1 || k > users_per_cell) fail(key, "user index out of range");
  return {n - 1, k - 1};
}

}  // namespace

void validate(const NetworkConfig& c) {
  if (c.n_cells < 1) fail("n_cells", "must be >= 1");
  if (c.users_per_cell < 1) fail("users_per_cell", "must be >= 1");
  if (c.antennas_per_bs < 1) fail("antennas_per_bs", "must be >= 1");
  if (!(c.cell_radius_m > 0)) fail("cell_radius_m", "must be > 0");
  if (!(c.user_distance_m > 0)) fail("user_distance_m", "must be > 0");
  if (c.user_distance_m > c.cell_radius_m) fail("user_distance_m", "must not exceed cell_radius_m");
  if (!std::isfinite(c.noise_power_dbw)) fail("noise_power_dbw", "must be finite");
  if (!(c.broadcast_rate >= 0) || !std::isfinite(c.broadcast_rate))
    fail("broadcast_rate", "must be >= 0");
  if (static_cast<int>(c.unicast_rates.size()) != c.num_users())
    fail("unicast_rates", "need one rate per user");
  for (double r : c.unicast_rates)
    if (!(r >= 0) || !std::isfinite(r)) fail("unicast_rates", "rates must be >= 0");
  for (double f : c.tdm_fraction_grid)
    if (!(f > 0 && f < 1)) fail("tdm_fraction_grid", "fractions must lie in (0,1)");
  if (!(c.csi_error_variance >= 0) || !std::isfinite(c.csi_error_variance))
    fail("csi_error_variance", "must be >= 0");
  if (!std::isfinite(c.snr_gap_broadcast_db)) fail("snr_gap_broadcast_db", "must be finite");
  if (!std::isfinite(c.snr_gap_unicast_db)) fail("snr_gap_unicast_db", "must be finite");
  if (c.cluster_mode == ClusterMode::custom) {
    for (int u = 0; u < c.num_users(); ++u) {
      UserId id = user_from_linear(u, c.users_per_cell);
      auto it = c.custom_clusters.find(id);
      if (it == c.custom_clusters.end()) fail("cluster_mode", "no cluster for user " + to_string(id));
      if (it->second.empty()) fail("cluster_mode", "empty cluster for user " + to_string(id));
      std::set<int> seen;
      for (int bs : it->second) {
        if (bs < 0 || bs >= c.n_cells) fail("cluster_mode", "BS index out of range");
        if (!seen.insert(bs).second) fail("cluster_mode", "duplicate BS in cluster");
      }
      if (!seen.count(id.cell))
        fail("cluster_mode", "cluster of user " + to_string(id) + " must contain its own BS");
    }
  }
}

NetworkConfig parse_config(const nlohmann::json& doc) {
  static const std::set<std::string> known = {
      "n_cells", "users_per_cell", "antennas_per_bs", "cell_radius_m",
      "user_distance_m", "noise_power_dbw", "broadcast_rate", "unicast_rate",
      "unicast_rates", "cluster_mode", "tdm_fraction_grid", "csi_error_variance",
      "snr_gap_broadcast_db", "snr_gap_unicast_db", "rng_seed"};
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (!known.count(it.key())) fail(it.key(), "unknown key");

  NetworkConfig c;
  auto number = [&](const char* key, double& out, bool required) {
    if (!doc.contains(key)) {
      if (required) fail(key, "missing");
      return;
    }
    if (!doc[key].is_number()) fail(key, "must be a number");
    out = doc[key].get<double>();
  };
  auto integer = [&](const char* key, int& out) {
    if (!doc.contains(key)) fail(key, "missing");
    if (!doc[key].is_number_integer()) fail(key, "must be an integer");
    out = doc[key].get<int>();
  };
  integer("n_cells", c.n_cells);
  integer("users_per_cell", c.users_per_cell);
  integer("antennas_per_bs", c.antennas_per_bs);
  if (c.n_cells < 1) fail("n_cells", "must be >= 1");
  if (c.users_per_cell < 1) fail("users_per_cell", "must be >= 1");
  number("cell_radius_m", c.cell_radius_m, true);
  number("user_distance_m", c.user_distance_m, true);
  number("noise_power_dbw", c.noise_power_dbw, true);
  if (doc.contains("broadcast_rate") && doc["broadcast_rate"].is_object())
    fail("broadcast_rate", "a single common broadcast rate is required");
  number("broadcast_rate", c.broadcast_rate, true);

  const int users = c.n_cells * c.users_per_cell;
  if (doc.contains("unicast_rate") && doc.contains("unicast_rates"))
    fail("unicast_rates", "give either unicast_rate or unicast_rates");
  if (doc.contains("unicast_rates")) {
    const auto& rates = doc["unicast_rates"];
    if (!rates.is_object()) fail("unicast_rates", "must be an object keyed \"n:k\"");
    c.unicast_rates.assign(users, -1.0);
    for (auto it = rates.begin(); it != rates.end(); ++it) {
      UserId id = parse_user_key(it.key(), c.n_cells, c.users_per_cell);
      if (!it.value().is_number()) fail("unicast_rates", "rates must be numbers");
      c.unicast_rates[linear_index(id, c.users_per_cell)] = it.value().get<double>();
    }
    for (int u = 0; u < users; ++u)
      if (c.unicast_rates[u] < 0)
        fail("unicast_rates", "missing rate for user " + to_string(user_from_linear(u, c.users_per_cell)));
  } else {
    double r = 0;
    number("unicast_rate", r, true);
    c.unicast_rates.assign(users, r);
  }

  if (doc.contains("cluster_mode")) {
    const auto& mode = doc["cluster_mode"];
    if (mode.is_string()) {
      auto s = mode.get<std::string>();
      if (s == "non_cooperative") c.cluster_mode = ClusterMode::non_cooperative;
      else if (s == "full_cooperative") c.cluster_mode = ClusterMode::full_cooperative;
      else fail("cluster_mode", "unknown mode '" + s + "'");
    } else if (mode.is_object()) {
      c.cluster_mode = ClusterMode::custom;
      for (auto it = mode.begin(); it != mode.end(); ++it) {
        UserId id = parse_user_key(it.key(), c.n_cells, c.users_per_cell);
        if (!it.value().is_array()) fail("cluster_mode", "clusters must be arrays of BS indices");
        std::vector<int> bs;
        for (const auto& v : it.value()) {
          if (!v.is_number_integer()) fail("cluster_mode", "BS indices must be integers");
          bs.push_back(v.get<int>() - 1);
        }
        c.custom_clusters[id] = bs;
      }
    } else {
      fail("cluster_mode", "must be a string or an object");
    }
  }

  if (doc.contains("tdm_fraction_grid")) {
    const auto& g = doc["tdm_fraction_grid"];
    if (!g.is_array() || g.empty()) fail("tdm_fraction_grid", "must be a nonempty array");
    for (const auto& v : g) {
      if (!v.is_number()) fail("tdm_fraction_grid", "entries must be numbers");
      c.tdm_fraction_grid.push_back(v.get<double>());
    }
  } else {
    c.tdm_fraction_grid = default_tdm_fraction_grid();
  }
  number("csi_error_variance", c.csi_error_variance, false);
  number("snr_gap_broadcast_db", c.snr_gap_broadcast_db, false);
  number("snr_gap_unicast_db", c.snr_gap_unicast_db, false);
  if (doc.contains("rng_seed")) {
    if (!doc["rng_seed"].is_number_integer()) fail("rng_seed", "must be an integer");
    c.rng_seed = doc["rng_seed"].get<std::uint64_t>();
  }
  validate(c);
  return c;
}

NetworkConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("malformed config " + path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

nlohmann::json to_json(const NetworkConfig& c) {
  nlohmann::json j;
  j["n_cells"] = c.n_cells;
  j["users_per_cell"] = c.users_per_cell;
  j["antennas_per_bs"] = c.antennas_per_bs;
  j["cell_radius_m"] = c.cell_radius_m;
  j["user_distance_m"] = c.user_distance_m;
  j["noise_power_dbw"] = c.noise_power_dbw;
  j["broadcast_rate"] = c.broadcast_rate;
  bool common = std::all_of(c.unicast_rates.begin(), c.unicast_rates.end(),
                            [&](double r) { return r == c.unicast_rates.front(); });
  if (common && !c.unicast_rates.empty()) {
    j["unicast_rate"] = c.unicast_rates.front();
  } else {
    nlohmann::json rates = nlohmann::json::object();
    for (int u = 0; u < c.num_users(); ++u)
      rates[to_string(user_from_linear(u, c.users_per_cell))] = c.unicast_rates[u];
    j["unicast_rates"] = rates;
  }
  if (c.cluster_mode == ClusterMode::non_cooperative) {
    j["cluster_mode"] = "non_cooperative";
  } else if (c.cluster_mode == ClusterMode::full_cooperative) {
    j["cluster_mode"] = "full_cooperative";
  } else {
    nlohmann::json m = nlohmann::json::object();
    for (const auto& [id, bs] : c.custom_clusters) {
      nlohmann::json arr = nlohmann::json::array();
      for (int b : bs) arr.push_back(b + 1);
      m[to_string(id)] = arr;
    }
    j["cluster_mode"] = m;
  }
  j["tdm_fraction_grid"] = c.tdm_fraction_grid;
  j["csi_error_variance"] = c.csi_error_variance;
  j["snr_gap_broadcast_db"] = c.snr_gap_broadcast_db;
  j["snr_gap_unicast_db"] = c.snr_gap_unicast_db;
  j["rng_seed"] = c.rng_seed;
  return j;
}

NetworkConfig make_config(int n_cells, int users_per_cell, int antennas, double broadcast_rate,
                          double unicast_rate) {
  NetworkConfig c;
  c.n_cells = n_cells;
  c.users_per_cell = users_per_cell;
  c.antennas_per_bs = antennas;
  c.broadcast_rate = broadcast_rate;
  c.unicast_rates.assign(n_cells * users_per_cell, unicast_rate);
  c.tdm_fraction_grid = default_tdm_fraction_grid();
  validate(c);
  return c;
}

double dbw_to_watts(double dbw) { return std::pow(10.0, dbw / 10.0); }

double watts_to_dbw(double watts) {
  if (watts <= 0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(watts);
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double rate_to_sinr_tdm(double rate, double fraction) {
  if (!(fraction > 0 && fraction <= 1)) throw std::domain_error("TDM fraction must lie in (0,1)");
  if (rate < 0) throw std::domain_error("rate must be >= 0");
  // expm1 keeps precision for small rates.
  return std::expm1(std::log(2.0) * rate / fraction);
}

double rate_to_sinr_ldm(double rate) { return rate_to_sinr_tdm(rate, 1.0); }

QosTargets make_targets(const NetworkConfig& config, Scheme scheme, double tdm_fraction) {
  QosTargets t;
  t.scheme = scheme;
  if (scheme == Scheme::ldm) {
    t.tdm_fraction = 1.0;
    t.gamma_broadcast = rate_to_sinr_ldm(config.broadcast_rate);
    for (double r : config.unicast_rates) t.gamma_unicast.push_back(rate_to_sinr_ldm(r));
  } else {
    if (!(tdm_fraction > 0 && tdm_fraction < 1))
      throw std::domain_error("TDM fraction must lie in (0,1)");
    t.tdm_fraction = tdm_fraction;
    t.gamma_broadcast = rate_to_sinr_tdm(config.broadcast_rate, 1.0 - tdm_fraction);
    for (double r : config.unicast_rates) t.gamma_unicast.push_back(rate_to_sinr_tdm(r, tdm_fraction));
  }
  return apply_coding_gap(t, config.snr_gap_broadcast_db, config.snr_gap_unicast_db);
}

QosTargets apply_coding_gap(const QosTargets& targets, double gap_broadcast_db, double gap_unicast_db) {
  QosTargets t = targets;
  t.gamma_broadcast /= db_to_linear(gap_broadcast_db);
  for (double& g : t.gamma_unicast) g /= db_to_linear(gap_unicast_db);
  return t;
}

ClusterMap build_clusters(const NetworkConfig& config) {
  ClusterMap map;
  map.n_cells = config.n_cells;
  map.users_per_cell = config.users_per_cell;
  const int users = config.num_users();
  map.clusters.resize(users);
  for (int u = 0; u < users; ++u) {
    UserId id = user_from_linear(u, config.users_per_cell);
    std::vector<int>& c = map.clusters[u];
    switch (config.cluster_mode) {
      case ClusterMode::non_cooperative:
        c = {id.cell};
        break;
      case ClusterMode::full_cooperative:
        for (int i = 0; i < config.n_cells; ++i) c.push_back(i);
        break;
      case ClusterMode::custom: {
        auto it = config.custom_clusters.find(id);
        if (it == config.custom_clusters.end())
          throw ConfigError("custom cluster map has no entry for user " + to_string(id));
        c = it->second;
        if (std::find(c.begin(), c.end(), id.cell) == c.end())
          throw ConfigError("cluster of user " + to_string(id) + " must contain its own BS");
        break;
      }
    }
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
  }
  map.served_by.assign(config.n_cells, {});
  for (int u = 0; u < users; ++u)
    for (int bs : map.clusters[u]) map.served_by[bs].push_back(u);
  return map;
}

double injection_level(double power_broadcast, double power_unicast) {
  if (!(power_broadcast > 0) || !(power_unicast > 0))
    throw std::domain_error("injection level needs positive powers");
  return 10.0 * std::log10(power_broadcast / power_unicast);
}

}  // namespace beamnet
