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

#include "beamnet/channel.hpp"

#include <cmath>
#include <numbers>

namespace beamnet {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// seed_t = splitmix64(rng_seed ^ splitmix64(t)); the inner mix keeps
// neighbouring trial indices from producing related seeds.
std::uint64_t derive_trial_seed(std::uint64_t rng_seed, std::uint64_t trial_index) {
  return splitmix64(rng_seed ^ splitmix64(trial_index));
}

Rng::Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

double Rng::uniform() {
  // 53 random mantissa bits.
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = 0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

Complex Rng::complex_normal() {
  double x = normal();
  double y = normal();
  return Complex(x, y) / std::sqrt(2.0);
}

std::vector<Eigen::Vector2d> bs_layout(int n_cells, double cell_radius_m) {
  std::vector<Eigen::Vector2d> pos;
  if (n_cells < 1) return pos;
  const double isd = 2.0 * cell_radius_m * std::cos(std::numbers::pi / 6.0);
  Eigen::Vector2d dir[6];
  for (int j = 0; j < 6; ++j)
    dir[j] = isd * Eigen::Vector2d(std::cos(j * std::numbers::pi / 3.0), std::sin(j * std::numbers::pi / 3.0));
  pos.push_back(Eigen::Vector2d::Zero());
  for (int ring = 1; static_cast<int>(pos.size()) < n_cells; ++ring) {
    for (int side = 0; side < 6 && static_cast<int>(pos.size()) < n_cells; ++side)
      for (int s = 0; s < ring && static_cast<int>(pos.size()) < n_cells; ++s)
        pos.push_back(ring * dir[side] + s * dir[(side + 2) % 6]);
  }
  return pos;
}

double path_loss_gain(double distance_km) {
  if (!(distance_km > 0)) throw std::domain_error("distance must be positive");
  double pl_db = 148.1 + 37.6 * std::log10(distance_km);
  return std::pow(10.0, -pl_db / 10.0);
}

const CMatrix& CsiEstimate::link_shape(int bs, int user) const {
  if (perfect()) throw std::logic_error("perfect CSI has no uncertainty shape");
  return shape.at(bs * estimated.num_users() + user);
}

const CMatrix& CsiEstimate::link_shape_inv_sqrt(int bs, int user) const {
  return shape_inv_sqrt.at(bs * estimated.num_users() + user);
}

CMatrix CsiEstimate::aggregated_shape(int user) const {
  const int n = estimated.n_cells, m = estimated.antennas;
  CMatrix q = CMatrix::Zero(n * m, n * m);
  for (int i = 0; i < n; ++i) q.block(i * m, i * m, m, m) = link_shape(i, user) / static_cast<double>(n);
  return q;
}

CMatrix CsiEstimate::aggregated_shape_inv_sqrt(int user) const {
  const int n = estimated.n_cells, m = estimated.antennas;
  CMatrix p = CMatrix::Zero(n * m, n * m);
  for (int i = 0; i < n; ++i)
    p.block(i * m, i * m, m, m) = std::sqrt(static_cast<double>(n)) * link_shape_inv_sqrt(i, user);
  return p;
}

ChannelDraw sample_channels(const NetworkConfig& config, std::uint64_t trial_seed) {
  Rng rng(config.rng_seed ^ splitmix64(trial_seed));
  const int n = config.n_cells, k = config.users_per_cell, m = config.antennas_per_bs;
  const int users = n * k;

  ChannelDraw draw;
  draw.geometry.bs = bs_layout(n, config.cell_radius_m);
  for (int u = 0; u < users; ++u) {
    UserId id = user_from_linear(u, k);
    double angle = 2.0 * std::numbers::pi * rng.uniform();
    draw.geometry.users.push_back(draw.geometry.bs[id.cell] +
                                  config.user_distance_m * Eigen::Vector2d(std::cos(angle), std::sin(angle)));
  }

  ChannelSet& truth = draw.truth;
  truth.n_cells = n;
  truth.users_per_cell = k;
  truth.antennas = m;
  truth.links.resize(static_cast<size_t>(n) * users);
  for (int i = 0; i < n; ++i) {
    for (int u = 0; u < users; ++u) {
      double d_km = (draw.geometry.users[u] - draw.geometry.bs[i]).norm() / 1000.0;
      double amp = std::sqrt(path_loss_gain(d_km));
      CVector h(m);
      for (int a = 0; a < m; ++a) h(a) = amp * rng.complex_normal();
      truth.link(i, u) = h;
    }
  }

  CsiEstimate& csi = draw.csi;
  csi.error_variance = config.csi_error_variance;
  csi.estimated = truth;
  csi.shape_inv_sqrt.assign(truth.links.size(), CMatrix::Zero(m, m));
  if (config.csi_error_variance > 0) {
    const double eps = std::sqrt(config.csi_error_variance);
    csi.shape.assign(truth.links.size(), CMatrix::Identity(m, m) / config.csi_error_variance);
    for (int i = 0; i < n; ++i) {
      for (int u = 0; u < users; ++u) {
        CMatrix p = eps * CMatrix::Identity(m, m);
        csi.shape_inv_sqrt[i * users + u] = p;
        CVector e = sample_error_from_shape(p, ErrorMode::interior, rng);
        csi.estimated.link(i, u) = truth.link(i, u) - e;
      }
    }
  }
  return draw;
}

CVector aggregate_channel(const ChannelSet& set, int user) {
  const int m = set.antennas;
  CVector h(set.n_cells * m);
  for (int i = 0; i < set.n_cells; ++i) {
    const CVector& b = set.link(i, user);
    if (b.size() != m) throw std::invalid_argument("missing channel block");
    h.segment(i * m, m) = b;
  }
  return h;
}

Matrix selection_matrix(const ClusterMap& clusters, int user, int antennas, int n_cells) {
  const auto& c = clusters.cluster(user);
  Matrix t = Matrix::Zero(static_cast<int>(c.size()) * antennas, n_cells * antennas);
  for (size_t j = 0; j < c.size(); ++j)
    t.block(static_cast<int>(j) * antennas, c[j] * antennas, antennas, antennas).setIdentity();
  return t;
}

CVector restrict_to_cluster(const CVector& aggregated, const std::vector<int>& cluster, int antennas) {
  CVector out(static_cast<int>(cluster.size()) * antennas);
  for (size_t j = 0; j < cluster.size(); ++j)
    out.segment(static_cast<int>(j) * antennas, antennas) = aggregated.segment(cluster[j] * antennas, antennas);
  return out;
}

CMatrix hermitian_inv_sqrt(const CMatrix& Q) {
  if (Q.rows() != Q.cols()) throw std::invalid_argument("shape matrix must be square");
  if ((Q - Q.adjoint()).norm() > 1e-10 * (1.0 + Q.norm())) throw std::invalid_argument("shape matrix must be Hermitian");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(Q);
  if (es.eigenvalues().minCoeff() <= 0) throw std::invalid_argument("shape matrix must be positive definite");
  return es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() * es.eigenvectors().adjoint();
}

CVector sample_error_from_shape(const CMatrix& P, ErrorMode mode, Rng& rng) {
  const int dim = static_cast<int>(P.cols());
  CVector u(dim);
  for (int a = 0; a < dim; ++a) u(a) = Complex(rng.normal(), rng.normal());
  double norm = u.norm();
  while (norm == 0.0) {
    for (int a = 0; a < dim; ++a) u(a) = Complex(rng.normal(), rng.normal());
    norm = u.norm();
  }
  u /= norm;
  if (mode == ErrorMode::interior) u *= std::pow(rng.uniform(), 1.0 / (2.0 * dim));
  return P * u;
}

CVector sample_error_on_ellipsoid(const CMatrix& Q, ErrorMode mode, Rng& rng) {
  return sample_error_from_shape(hermitian_inv_sqrt(Q), mode, rng);
}

double worst_case_gain_from_shape(const CVector& est, const CMatrix& P, const CVector& w) {
  double g = std::abs(est.dot(w)) - (P * w).norm();
  return g > 0 ? g : 0.0;
}

double worst_case_gain(const CVector& est, const CMatrix& Q, const CVector& w) {
  return worst_case_gain_from_shape(est, hermitian_inv_sqrt(Q), w);
}

namespace {

nlohmann::json dump_set(const ChannelSet& set) {
  nlohmann::json links = nlohmann::json::object();
  for (int i = 0; i < set.n_cells; ++i) {
    for (int u = 0; u < set.num_users(); ++u) {
      nlohmann::json arr = nlohmann::json::array();
      for (const Complex& z : set.link(i, u)) arr.push_back({z.real(), z.imag()});
      links[std::to_string(i + 1) + ":" + to_string(user_from_linear(u, set.users_per_cell))] = arr;
    }
  }
  return links;
}

ChannelSet parse_set(const nlohmann::json& links, int n, int k, int m) {
  ChannelSet set;
  set.n_cells = n;
  set.users_per_cell = k;
  set.antennas = m;
  set.links.resize(static_cast<size_t>(n) * n * k);
  for (int i = 0; i < n; ++i) {
    for (int u = 0; u < n * k; ++u) {
      const auto& arr = links.at(std::to_string(i + 1) + ":" + to_string(user_from_linear(u, k)));
      if (static_cast<int>(arr.size()) != m) throw std::invalid_argument("channel dump has wrong link length");
      CVector h(m);
      for (int a = 0; a < m; ++a) h(a) = Complex(arr[a][0].get<double>(), arr[a][1].get<double>());
      set.link(i, u) = h;
    }
  }
  return set;
}

}  // namespace

nlohmann::json channel_dump(const ChannelDraw& draw) {
  nlohmann::json j;
  j["n_cells"] = draw.truth.n_cells;
  j["users_per_cell"] = draw.truth.users_per_cell;
  j["antennas_per_bs"] = draw.truth.antennas;
  j["csi_error_variance"] = draw.csi.error_variance;
  nlohmann::json bs = nlohmann::json::array(), users = nlohmann::json::array();
  for (const auto& p : draw.geometry.bs) bs.push_back({p.x(), p.y()});
  for (const auto& p : draw.geometry.users) users.push_back({p.x(), p.y()});
  j["bs_positions_m"] = bs;
  j["user_positions_m"] = users;
  j["true"] = dump_set(draw.truth);
  j["estimated"] = dump_set(draw.csi.estimated);
  return j;
}

ChannelDraw channel_draw_from_json(const nlohmann::json& doc) {
  const int n = doc.at("n_cells").get<int>();
  const int k = doc.at("users_per_cell").get<int>();
  const int m = doc.at("antennas_per_bs").get<int>();
  ChannelDraw draw;
  for (const auto& p : doc.at("bs_positions_m")) draw.geometry.bs.emplace_back(p[0].get<double>(), p[1].get<double>());
  for (const auto& p : doc.at("user_positions_m")) draw.geometry.users.emplace_back(p[0].get<double>(), p[1].get<double>());
  draw.truth = parse_set(doc.at("true"), n, k, m);
  draw.csi.estimated = parse_set(doc.at("estimated"), n, k, m);
  draw.csi.error_variance = doc.at("csi_error_variance").get<double>();
  const size_t links = draw.truth.links.size();
  draw.csi.shape_inv_sqrt.assign(links, CMatrix::Zero(m, m));
  if (draw.csi.error_variance > 0) {
    draw.csi.shape.assign(links, CMatrix::Identity(m, m) / draw.csi.error_variance);
    draw.csi.shape_inv_sqrt.assign(links, std::sqrt(draw.csi.error_variance) * CMatrix::Identity(m, m));
  }
  return draw;
}

}  // namespace beamnet
