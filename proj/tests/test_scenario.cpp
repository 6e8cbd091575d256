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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "beamnet/scenario.hpp"

using namespace beamnet;
using doctest::Approx;

namespace {

nlohmann::json minimal_doc() {
  return {{"n_cells", 3},         {"users_per_cell", 3},   {"antennas_per_bs", 3},
          {"cell_radius_m", 500}, {"user_distance_m", 400}, {"noise_power_dbw", -134},
          {"broadcast_rate", 3},  {"unicast_rate", 0.5},    {"rng_seed", 7}};
}

}  // namespace

TEST_CASE("rate to SINR, TDM") {
  CHECK(rate_to_sinr_tdm(0.5, 0.5) == Approx(1.0));
  CHECK(rate_to_sinr_tdm(3, 0.5) == Approx(63.0));
  CHECK(rate_to_sinr_tdm(0, 0.7) == 0.0);
  CHECK_THROWS_AS(rate_to_sinr_tdm(1, 0.0), std::domain_error);
  CHECK_THROWS_AS(rate_to_sinr_tdm(1, 1.5), std::domain_error);
  CHECK_THROWS_AS(rate_to_sinr_tdm(-1, 0.5), std::domain_error);
}

TEST_CASE("rate to SINR, LDM") {
  CHECK(rate_to_sinr_ldm(3) == Approx(7.0));
  CHECK(rate_to_sinr_ldm(0.5) == Approx(0.41421356237).epsilon(1e-10));
  CHECK(rate_to_sinr_ldm(0) == 0.0);
}

TEST_CASE("rate conversions agree at fraction 1 and are monotone") {
  for (double r : {0.0, 0.1, 0.5, 1.0, 3.0, 6.0}) CHECK(rate_to_sinr_tdm(r, 1.0) == rate_to_sinr_ldm(r));
  double prev = -1;
  for (double r = 0; r <= 5; r += 0.25) {
    CHECK(rate_to_sinr_ldm(r) > prev);
    prev = rate_to_sinr_ldm(r);
  }
  prev = 1e300;
  for (double f = 0.05; f < 1; f += 0.05) {
    CHECK(rate_to_sinr_tdm(1.0, f) < prev);
    prev = rate_to_sinr_tdm(1.0, f);
  }
}

TEST_CASE("coding gap rescales targets") {
  QosTargets t;
  t.gamma_broadcast = 7;
  t.gamma_unicast = {1.0, 2.0};
  CHECK(apply_coding_gap(t, 0, 0).gamma_broadcast == 7.0);
  CHECK(apply_coding_gap(t, -1, 0).gamma_broadcast == Approx(8.8125).epsilon(1e-4));
  CHECK(apply_coding_gap(t, 0, -3).gamma_unicast[0] == Approx(1.9953).epsilon(1e-4));
  CHECK(apply_coding_gap(t, 0, -3).gamma_unicast[1] == Approx(2 * 1.99526231).epsilon(1e-8));

  // gaps add in dB
  QosTargets two = apply_coding_gap(apply_coding_gap(t, -1, -0.5), -2, -1.5);
  QosTargets one = apply_coding_gap(t, -3, -2);
  CHECK(two.gamma_broadcast == Approx(one.gamma_broadcast).epsilon(1e-12));
  CHECK(two.gamma_unicast[1] == Approx(one.gamma_unicast[1]).epsilon(1e-12));
}

TEST_CASE("targets per scheme") {
  NetworkConfig c = make_config(2, 1, 2, 3.0, 0.5);
  QosTargets l = make_targets(c, Scheme::ldm);
  CHECK(l.gamma_broadcast == Approx(7.0));
  CHECK(l.gamma_unicast[0] == Approx(std::sqrt(2.0) - 1));
  QosTargets t = make_targets(c, Scheme::tdm, 0.5);
  CHECK(t.gamma_broadcast == Approx(63.0));
  CHECK(t.gamma_unicast[1] == Approx(1.0));
  CHECK(t.tdm_fraction == 0.5);
  CHECK_THROWS(make_targets(c, Scheme::tdm, 1.0));

  c.snr_gap_broadcast_db = -1;
  CHECK(make_targets(c, Scheme::ldm).gamma_broadcast == Approx(8.8125).epsilon(1e-4));
}

TEST_CASE("clusters") {
  NetworkConfig c = make_config(3, 1, 2, 1, 1);
  ClusterMap m = build_clusters(c);
  REQUIRE(m.num_users() == 3);
  for (int u = 0; u < 3; ++u) CHECK(m.cluster(u) == std::vector<int>{u});

  NetworkConfig f = make_config(2, 2, 1, 1, 1);
  f.cluster_mode = ClusterMode::full_cooperative;
  ClusterMap fm = build_clusters(f);
  for (int u = 0; u < 4; ++u) CHECK(fm.cluster(u) == std::vector<int>{0, 1});

  NetworkConfig x = make_config(2, 1, 1, 1, 1);
  x.cluster_mode = ClusterMode::custom;
  x.custom_clusters[{0, 0}] = {1, 0};
  CHECK_THROWS_AS(build_clusters(x), ConfigError);
  CHECK_THROWS_AS(validate(x), ConfigError);
  x.custom_clusters[{1, 0}] = {1};
  ClusterMap xm = build_clusters(x);
  CHECK(xm.cluster(0) == std::vector<int>{0, 1});  // sorted
  CHECK(xm.served_by[0] == std::vector<int>{0});
  CHECK(xm.served_by[1] == std::vector<int>{0, 1});
}

TEST_CASE("served_by is the inverse of the clusters") {
  NetworkConfig c = make_config(3, 2, 1, 1, 1);
  c.cluster_mode = ClusterMode::custom;
  c.custom_clusters[{0, 0}] = {0, 2};
  c.custom_clusters[{0, 1}] = {0};
  c.custom_clusters[{1, 0}] = {0, 1, 2};
  c.custom_clusters[{1, 1}] = {1};
  c.custom_clusters[{2, 0}] = {2, 1};
  c.custom_clusters[{2, 1}] = {2};
  ClusterMap m = build_clusters(c);
  for (int i = 0; i < 3; ++i)
    for (int u = 0; u < 6; ++u) {
      bool in_cluster = std::count(m.cluster(u).begin(), m.cluster(u).end(), i) > 0;
      bool served = std::count(m.served_by[i].begin(), m.served_by[i].end(), u) > 0;
      CHECK(in_cluster == served);
    }
}

TEST_CASE("injection level") {
  CHECK(injection_level(1.0, 1.0) == Approx(0.0));
  CHECK(injection_level(10.0, 1.0) == Approx(10.0));
  CHECK_THROWS_AS(injection_level(0.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(injection_level(1.0, -1.0), std::domain_error);
}

TEST_CASE("config parsing") {
  NetworkConfig c = parse_config(minimal_doc());
  CHECK(c.n_cells == 3);
  CHECK(c.users_per_cell == 3);
  CHECK(c.antennas_per_bs == 3);
  CHECK(c.noise_power_w() == Approx(dbw_to_watts(-134)));
  CHECK(c.unicast_rates == std::vector<double>(9, 0.5));
  CHECK(c.csi_error_variance == 0.0);
  CHECK(c.tdm_fraction_grid.size() == 19);
  CHECK(c.tdm_fraction_grid.front() == Approx(0.05));
  CHECK(c.tdm_fraction_grid.back() == Approx(0.95));
  CHECK(c.cluster_mode == ClusterMode::non_cooperative);
  CHECK(c.rng_seed == 7);

  auto bad = minimal_doc();
  bad["user_distance_m"] = 600;
  CHECK_THROWS_WITH_AS(parse_config(bad), doctest::Contains("user_distance_m"), ConfigError);

  bad = minimal_doc();
  bad["colour"] = "red";
  CHECK_THROWS_WITH_AS(parse_config(bad), doctest::Contains("colour"), ConfigError);

  bad = minimal_doc();
  bad["tdm_fraction_grid"] = {0.5, 1.0};
  CHECK_THROWS_AS(parse_config(bad), ConfigError);

  bad = minimal_doc();
  bad["broadcast_rate"] = {{"1:1", 2}};
  CHECK_THROWS_AS(parse_config(bad), ConfigError);

  bad = minimal_doc();
  bad.erase("unicast_rate");
  bad["unicast_rates"] = {{"1:1", 1.0}};
  CHECK_THROWS_WITH_AS(parse_config(bad), doctest::Contains("unicast_rates"), ConfigError);
}

TEST_CASE("per-user rates and custom clusters from JSON") {
  nlohmann::json doc = minimal_doc();
  doc["n_cells"] = 2;
  doc["users_per_cell"] = 1;
  doc.erase("unicast_rate");
  doc["unicast_rates"] = {{"1:1", 1.0}, {"2:1", 2.0}};
  doc["cluster_mode"] = {{"1:1", {1, 2}}, {"2:1", {2}}};
  NetworkConfig c = parse_config(doc);
  CHECK(c.unicast_rates == std::vector<double>{1.0, 2.0});
  CHECK(build_clusters(c).cluster(0) == std::vector<int>{0, 1});

  doc["cluster_mode"] = {{"1:1", {2}}, {"2:1", {2}}};
  CHECK_THROWS_AS(parse_config(doc), ConfigError);
}

TEST_CASE("config round trip through JSON and file") {
  NetworkConfig c = make_config(2, 2, 2, 1.5, 0.25);
  c.csi_error_variance = 1e-15;
  c.snr_gap_unicast_db = -1;
  c.tdm_fraction_grid = {0.3, 0.6};
  c.rng_seed = 123456789012345ULL;
  NetworkConfig back = parse_config(to_json(c));
  CHECK(to_json(back) == to_json(c));

  auto path = std::filesystem::temp_directory_path() / "beamnet_cfg_test.json";
  {
    std::ofstream out(path);
    out << to_json(c).dump(2);
  }
  CHECK(to_json(load_config(path)) == to_json(c));
  {
    std::ofstream out(path);
    out << "{ \"n_cells\": 3, ";
  }
  CHECK_THROWS_AS(load_config(path), ConfigError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_config(path), ConfigError);
}

TEST_CASE("dB conversions") {
  CHECK(dbw_to_watts(0) == 1.0);
  CHECK(watts_to_dbw(100) == Approx(20));
  CHECK(watts_to_dbw(95) == Approx(19.777).epsilon(1e-4));
  CHECK(db_to_linear(-3) == Approx(0.501187).epsilon(1e-5));
}
