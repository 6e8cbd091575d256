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

#include "beamnet/problem.hpp"

#include <cmath>

namespace beamnet {

CVector ProblemData::cluster_channel(int receiver, int stream) const {
  return restrict_to_cluster(h[receiver], clusters.cluster(stream), antennas);
}

CMatrix ProblemData::cluster_shape(int receiver, int stream) const {
  const auto& c = clusters.cluster(stream);
  const int d = static_cast<int>(c.size()) * antennas;
  CMatrix P = CMatrix::Zero(d, d);
  for (size_t j = 0; j < c.size(); ++j)
    P.block(static_cast<int>(j) * antennas, static_cast<int>(j) * antennas, antennas, antennas) =
        error_blocks[receiver][c[j]];
  return P;
}

CMatrix ProblemData::full_shape(int receiver) const {
  CMatrix P = CMatrix::Zero(nm(), nm());
  for (int i = 0; i < n_cells; ++i) P.block(i * antennas, i * antennas, antennas, antennas) = error_blocks[receiver][i];
  return P;
}

ProblemData make_problem(const CsiEstimate& csi, const ClusterMap& clusters, const QosTargets& targets,
                         double noise_power_w) {
  ProblemData p;
  p.n_cells = csi.estimated.n_cells;
  p.users_per_cell = csi.estimated.users_per_cell;
  p.antennas = csi.estimated.antennas;
  p.scheme = targets.scheme;
  p.gamma_broadcast = targets.gamma_broadcast;
  p.gamma_unicast = targets.gamma_unicast;
  p.clusters = clusters;
  p.perfect_csi = csi.perfect();
  if (static_cast<int>(p.gamma_unicast.size()) != p.num_users())
    throw std::invalid_argument("targets do not match the number of users");
  const double sigma = std::sqrt(noise_power_w);
  const double rootn = std::sqrt(static_cast<double>(p.n_cells));
  for (int u = 0; u < p.num_users(); ++u) {
    p.h.push_back(aggregate_channel(csi.estimated, u) / sigma);
    std::vector<CMatrix> blocks;
    for (int i = 0; i < p.n_cells; ++i) blocks.push_back(rootn * csi.link_shape_inv_sqrt(i, u) / sigma);
    p.error_blocks.push_back(std::move(blocks));
  }
  return p;
}

ProblemData broadcast_only(const ProblemData& p) {
  ProblemData q = p;
  q.gamma_unicast.assign(p.num_users(), 0.0);
  return q;
}

ProblemData unicast_only(const ProblemData& p) {
  ProblemData q = p;
  q.gamma_broadcast = 0.0;
  return q;
}

}  // namespace beamnet
