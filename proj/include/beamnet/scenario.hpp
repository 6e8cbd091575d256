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

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

#include <json.hpp>

#include "beamnet/types.hpp"

namespace beamnet {

enum class ClusterMode { non_cooperative, full_cooperative, custom };

struct NetworkConfig {
  int n_cells = 3;
  int users_per_cell = 3;
  int antennas_per_bs = 3;
  double cell_radius_m = 500.0;
  double user_distance_m = 400.0;
  double noise_power_dbw = -134.0;
  double broadcast_rate = 3.0;
  // One entry per user in linear order (cell-major).
  std::vector<double> unicast_rates;
  ClusterMode cluster_mode = ClusterMode::non_cooperative;
  std::map<UserId, std::vector<int>> custom_clusters;
  std::vector<double> tdm_fraction_grid;
  double csi_error_variance = 0.0;
  double snr_gap_broadcast_db = 0.0;
  double snr_gap_unicast_db = 0.0;
  std::uint64_t rng_seed = 1;

  int num_users() const { return n_cells * users_per_cell; }
  double noise_power_w() const;
};

// Grid {0.05, 0.10, ..., 0.95}.
std::vector<double> default_tdm_fraction_grid();

// Fills defaults (common unicast rate, fraction grid) and checks invariants.
void validate(const NetworkConfig& config);

NetworkConfig parse_config(const nlohmann::json& doc);
NetworkConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const NetworkConfig& config);

// Builds a config with a common unicast rate for every user.
NetworkConfig make_config(int n_cells, int users_per_cell, int antennas,
                          double broadcast_rate, double unicast_rate);

double dbw_to_watts(double dbw);
double watts_to_dbw(double watts);
double db_to_linear(double db);

// 2^(rate/fraction) - 1. fraction = 1 is accepted and gives the LDM value.
double rate_to_sinr_tdm(double rate, double fraction);
double rate_to_sinr_ldm(double rate);

struct QosTargets {
  double gamma_broadcast = 0.0;
  std::vector<double> gamma_unicast;
  Scheme scheme = Scheme::ldm;
  double tdm_fraction = 1.0;  // unicast share T0/T, TDM only
};

// Targets for the given scheme; coding gaps from the config are applied.
QosTargets make_targets(const NetworkConfig& config, Scheme scheme, double tdm_fraction = 0.5);

QosTargets apply_coding_gap(const QosTargets& targets, double gap_broadcast_db,
                            double gap_unicast_db);

struct ClusterMap {
  int n_cells = 0;
  int users_per_cell = 0;
  std::vector<std::vector<int>> clusters;   // per user, sorted BS indices
  std::vector<std::vector<int>> served_by;  // per BS, sorted user indices

  int num_users() const { return static_cast<int>(clusters.size()); }
  const std::vector<int>& cluster(int user) const { return clusters.at(user); }
};

ClusterMap build_clusters(const NetworkConfig& config);

double injection_level(double power_broadcast, double power_unicast);

}  // namespace beamnet
