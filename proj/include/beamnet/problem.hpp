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

#include <vector>

#include "beamnet/channel.hpp"
#include "beamnet/scenario.hpp"
#include "beamnet/types.hpp"

namespace beamnet {

// Noise-normalised view of one instance shared by the SDR, SCA and
// distributed solvers. Channels and error shapes are divided by sigma, so
// the noise power is 1 and powers stay in watts.
struct ProblemData {
  int n_cells = 0;
  int users_per_cell = 0;
  int antennas = 0;
  Scheme scheme = Scheme::ldm;
  double gamma_broadcast = 0.0;
  std::vector<double> gamma_unicast;
  ClusterMap clusters;
  std::vector<CVector> h;  // aggregated estimate / sigma, per user
  // per user, per BS: sqrt(N) Q_{i,u}^{-1/2} / sigma (M x M)
  std::vector<std::vector<CMatrix>> error_blocks;
  bool perfect_csi = true;

  int num_users() const { return n_cells * users_per_cell; }
  int nm() const { return n_cells * antennas; }
  bool has_broadcast() const { return gamma_broadcast > 0; }
  bool has_unicast(int u) const { return gamma_unicast[u] > 0; }
  int stream_dim(int u) const { return static_cast<int>(clusters.cluster(u).size()) * antennas; }

  // Estimated channel from stream v's cluster to receiver u.
  CVector cluster_channel(int receiver, int stream) const;
  // Error shape restricted to stream v's cluster (square, |C_v| M).
  CMatrix cluster_shape(int receiver, int stream) const;
  // Full aggregated error shape of receiver u (N M square).
  CMatrix full_shape(int receiver) const;
};

ProblemData make_problem(const CsiEstimate& csi, const ClusterMap& clusters, const QosTargets& targets,
                         double noise_power_w);

// Copy keeping only one layer (used to split the separable TDM problem).
ProblemData broadcast_only(const ProblemData& p);
ProblemData unicast_only(const ProblemData& p);

}  // namespace beamnet
