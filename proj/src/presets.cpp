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

#include <cstdio>

#include "beamnet/harness.hpp"

namespace beamnet {

namespace {

// Simulation defaults: three users per cell at 400 m in 500 m cells, three
// antennas per BS, -134 dBW noise, non-cooperative unicast.
NetworkConfig base(int n_cells, double rb, double ru) {
  NetworkConfig c = make_config(n_cells, 3, 3, rb, ru);
  validate(c);
  return c;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"fig_cdf",          "fig_cells",  "fig_cooperation", "fig_rate",
          "fig_distance",     "fig_coding_gap", "fig_csi_error", "fig_distributed"};
}

Preset make_preset(const std::string& name) {
  Preset p;
  p.name = name;
  p.schemes = {Scheme::ldm, Scheme::tdm};
  if (name == "fig_cdf") {
    p.description = "power-per-BS CDF, N=3, R^B=3, R^U=0.5";
    p.points.push_back({"n3", base(3, 3.0, 0.5)});
  } else if (name == "fig_cells") {
    p.description = "power per BS versus number of cells, R^B=3, R^U=0.5";
    for (int n = 1; n <= 7; ++n) p.points.push_back({"n" + std::to_string(n), base(n, 3.0, 0.5)});
  } else if (name == "fig_cooperation") {
    p.description = "non-cooperative versus fully cooperative unicast, N=3, R^B=2, T0/T=0.8";
    for (double ru : {0.5, 1.0, 1.5, 2.0}) {
      for (ClusterMode m : {ClusterMode::non_cooperative, ClusterMode::full_cooperative}) {
        NetworkConfig c = base(3, 2.0, ru);
        c.cluster_mode = m;
        c.tdm_fraction_grid = {0.8};
        std::string tag = m == ClusterMode::non_cooperative ? "noncoop" : "coop";
        p.points.push_back({tag + fmt("_ru%.1f", ru), c});
      }
    }
  } else if (name == "fig_rate") {
    p.description = "power per BS versus broadcast rate, N=3, R^U=0.5";
    for (double rb : {0.0, 1.0, 2.0, 3.0, 4.0}) p.points.push_back({fmt("rb%.0f", rb), base(3, rb, 0.5)});
  } else if (name == "fig_distance") {
    p.description = "power per BS versus user distance, N=5, M=5, K in {1,5}";
    for (int k : {1, 5}) {
      for (double d : {100.0, 200.0, 300.0, 400.0, 500.0}) {
        NetworkConfig c = make_config(5, k, 5, 3.0, 0.5);
        c.user_distance_m = d;
        validate(c);
        p.points.push_back({"k" + std::to_string(k) + fmt("_d%.0f", d), c});
      }
    }
  } else if (name == "fig_coding_gap") {
    p.description = "SNR gap to capacity on both layers, N=3, R^B=3, R^U=0.5";
    for (double g : {0.0, -1.0, -3.0}) {
      NetworkConfig c = base(3, 3.0, 0.5);
      c.snr_gap_broadcast_db = c.snr_gap_unicast_db = g;
      p.points.push_back({fmt("gap%.0f", -g), c});
    }
  } else if (name == "fig_csi_error") {
    p.description = "power per BS versus CSI error bound, N=3, R^B=1, R^U=1";
    for (double ratio : {0.0, 0.02, 0.04, 0.06, 0.08, 0.10}) {
      NetworkConfig c = base(3, 1.0, 1.0);
      c.csi_error_variance = csi_variance_for_ratio(c, ratio);
      p.points.push_back({fmt("err%.2f", ratio), c});
    }
  } else if (name == "fig_distributed") {
    p.description = "dual-decomposition convergence on an LDM subproblem, N=3, K=2, M=2";
    p.schemes = {Scheme::ldm};
    p.default_trials = 1;
    p.distributed = true;
    NetworkConfig c = make_config(3, 2, 2, 3.0, 0.5);
    validate(c);
    p.points.push_back({"n3", c});
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  return p;
}

}  // namespace beamnet
