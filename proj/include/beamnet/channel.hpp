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
#include <random>
#include <vector>

#include <json.hpp>

#include "beamnet/scenario.hpp"
#include "beamnet/types.hpp"

namespace beamnet {

// Deterministic generator: mt19937_64 seeded through splitmix64, normals by
// Box-Muller so streams do not depend on the standard library vendor.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  double uniform();  // [0,1)
  double normal();
  Complex complex_normal();  // unit variance, circularly symmetric
 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_trial_seed(std::uint64_t rng_seed, std::uint64_t trial_index);

struct Geometry {
  std::vector<Eigen::Vector2d> bs;     // per cell
  std::vector<Eigen::Vector2d> users;  // linear user order
};

// Hexagonal lattice: cell 0 at the origin, then rings at inter-site distance
// 2 R cos(30 deg).
std::vector<Eigen::Vector2d> bs_layout(int n_cells, double cell_radius_m);

double path_loss_gain(double distance_km);

struct ChannelSet {
  int n_cells = 0;
  int users_per_cell = 0;
  int antennas = 0;
  std::vector<CVector> links;  // index bs * num_users + user

  int num_users() const { return n_cells * users_per_cell; }
  const CVector& link(int bs, int user) const { return links.at(bs * num_users() + user); }
  CVector& link(int bs, int user) { return links.at(bs * num_users() + user); }
};

struct CsiEstimate {
  ChannelSet estimated;
  double error_variance = 0.0;          // eps^2; 0 means perfect CSI
  std::vector<CMatrix> shape;           // Q_{i,u}, empty when perfect
  std::vector<CMatrix> shape_inv_sqrt;  // Q_{i,u}^{-1/2}, zero when perfect

  bool perfect() const { return error_variance == 0.0; }
  const CMatrix& link_shape(int bs, int user) const;
  const CMatrix& link_shape_inv_sqrt(int bs, int user) const;
  // (1/N) blockdiag(Q_{1,u} .. Q_{N,u}); requires imperfect CSI.
  CMatrix aggregated_shape(int user) const;
  // Q_u^{-1/2} for the aggregated set: sqrt(N) blockdiag(Q_{i,u}^{-1/2}).
  CMatrix aggregated_shape_inv_sqrt(int user) const;
};

struct ChannelDraw {
  Geometry geometry;
  ChannelSet truth;
  CsiEstimate csi;
};

ChannelDraw sample_channels(const NetworkConfig& config, std::uint64_t trial_seed);

CVector aggregate_channel(const ChannelSet& set, int user);

// |C| M x N M 0/1 selector of the cluster's BS blocks.
Matrix selection_matrix(const ClusterMap& clusters, int user, int antennas, int n_cells);

// Stack of the cluster's blocks of an aggregated vector.
CVector restrict_to_cluster(const CVector& aggregated, const std::vector<int>& cluster, int antennas);

enum class ErrorMode { boundary, interior };

CVector sample_error_on_ellipsoid(const CMatrix& Q, ErrorMode mode, Rng& rng);
// Same draw from a given inverse square root P = Q^{-1/2} (P may be singular).
CVector sample_error_from_shape(const CMatrix& P, ErrorMode mode, Rng& rng);

// max(|est^H w| - ||Q^{-1/2} w||, 0).
double worst_case_gain(const CVector& est, const CMatrix& Q, const CVector& w);
double worst_case_gain_from_shape(const CVector& est, const CMatrix& P, const CVector& w);

CMatrix hermitian_inv_sqrt(const CMatrix& Q);

nlohmann::json channel_dump(const ChannelDraw& draw);
ChannelDraw channel_draw_from_json(const nlohmann::json& doc);

}  // namespace beamnet
