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

#include "beamnet/sdr.hpp"

#include <algorithm>
#include <cmath>

namespace beamnet {

using conic::HermitianAffine;
using conic::HermitianVar;
using conic::LinExpr;

bool SdrSolution::rank_one(double threshold) const {
  if (!feasible()) return false;
  if (w_broadcast.size() && rank_ratio_broadcast >= threshold) return false;
  for (size_t u = 0; u < w_unicast.size(); ++u)
    if (w_unicast[u].size() && rank_ratio_unicast[u] >= threshold) return false;
  return true;
}

namespace {

// Adds c * Phi W Phi^H for Hermitian variable W.
void add_quadratic(HermitianAffine& a, const CMatrix& Phi, const HermitianVar& W, double c) {
  const int d = W.side;
  for (int i = 0; i < d; ++i) a.terms.emplace_back(W.offset + i, c * Phi.col(i) * Phi.col(i).adjoint());
  int p = W.offset + d;
  const Complex j(0, 1);
  for (int r = 0; r < d; ++r)
    for (int s = r + 1; s < d; ++s) {
      CMatrix R = Phi.col(r) * Phi.col(s).adjoint();
      a.terms.emplace_back(p, c * (R + R.adjoint()));
      a.terms.emplace_back(p + 1, c * (j * R - j * R.adjoint()));
      p += 2;
    }
}

// [P T_v'; h^H T_v'] for receiver u and stream v (v = -1: broadcast, all BSs).
CMatrix exposure(const ProblemData& p, int u, int v) {
  const int nm = p.nm();
  if (v < 0) {
    CMatrix Phi(nm + 1, nm);
    Phi.topRows(nm) = p.full_shape(u);
    Phi.row(nm) = p.h[u].adjoint();
    return Phi;
  }
  const auto& c = p.clusters.cluster(v);
  const int d = p.stream_dim(v);
  CMatrix P = p.full_shape(u);
  CMatrix Phi(nm + 1, d);
  for (size_t k = 0; k < c.size(); ++k)
    Phi.block(0, static_cast<int>(k) * p.antennas, nm, p.antennas) = P.middleCols(c[k] * p.antennas, p.antennas);
  Phi.row(nm) = p.cluster_channel(u, v).adjoint();
  return Phi;
}

HermitianAffine lmi_frame(const ProblemData& p, int lambda) {
  const int nm = p.nm();
  HermitianAffine a(nm + 1);
  a.constant(nm, nm) = -1.0;
  CMatrix L = CMatrix::Identity(nm + 1, nm + 1);
  L(nm, nm) = -1.0;
  a.terms.emplace_back(lambda, L);
  return a;
}

void add_unicast_interference(HermitianAffine& a, const ProblemData& p, const SdrLayout& l, int u, bool include_own) {
  for (int v = 0; v < p.num_users(); ++v) {
    if (!l.w_unicast[v].valid()) continue;
    if (v == u && !include_own) continue;
    add_quadratic(a, exposure(p, u, v), l.w_unicast[v], -1.0);
  }
}

// Scalar h^H V h from an LMI built with P = 0: its (NM, NM) entry.
LinExpr last_entry(const HermitianAffine& a) {
  const int k = a.side() - 1;
  LinExpr e(a.constant(k, k).real());
  for (const auto& [j, F] : a.terms) e.add(j, F(k, k).real());
  return e;
}

ProblemData without_errors(const ProblemData& p) {
  ProblemData q = p;
  for (auto& blocks : q.error_blocks)
    for (auto& b : blocks) b.setZero();
  return q;
}

}  // namespace

SdrLayout allocate_sdr_variables(conic::ProgramBuilder& b, const ProblemData& p, bool s_procedure) {
  SdrLayout l;
  const int users = p.num_users();
  if (p.has_broadcast()) {
    l.w_broadcast = b.add_hermitian(p.nm());
    b.add_hermitian_psd(l.w_broadcast);
  }
  l.w_unicast.resize(users);
  for (int u = 0; u < users; ++u)
    if (p.has_unicast(u)) {
      l.w_unicast[u] = b.add_hermitian(p.stream_dim(u));
      b.add_hermitian_psd(l.w_unicast[u]);
    }
  l.lambda_broadcast.assign(users, -1);
  l.lambda_unicast.assign(users, -1);
  if (s_procedure) {
    for (int u = 0; u < users; ++u) {
      if (p.has_broadcast()) {
        l.lambda_broadcast[u] = b.add_variables(1);
        b.add_nonnegative(LinExpr::var(l.lambda_broadcast[u]));
      }
      if (p.has_unicast(u)) {
        l.lambda_unicast[u] = b.add_variables(1);
        b.add_nonnegative(LinExpr::var(l.lambda_unicast[u]));
      }
    }
  }
  return l;
}

HermitianAffine build_lmi_unicast(const ProblemData& p, const SdrLayout& l, int u) {
  HermitianAffine a = lmi_frame(p, l.lambda_unicast[u]);
  add_quadratic(a, exposure(p, u, u), l.w_unicast[u], 1.0 / p.gamma_unicast[u]);
  add_unicast_interference(a, p, l, u, false);
  return a;
}

HermitianAffine build_lmi_broadcast_tdm(const ProblemData& p, const SdrLayout& l, int u, BroadcastLmiForm form) {
  HermitianAffine a = lmi_frame(p, l.lambda_broadcast[u]);
  const double g = p.gamma_broadcast;
  if (form == BroadcastLmiForm::standard) {
    add_quadratic(a, exposure(p, u, -1), l.w_broadcast, 1.0 / g);
  } else {
    HermitianAffine tmp(a.side());
    add_quadratic(tmp, exposure(p, u, -1), l.w_broadcast, 1.0);
    const int k = a.side() - 1;
    for (auto& [j, F] : tmp.terms) {
      F(k, k) /= g;
      a.terms.emplace_back(j, F);
    }
  }
  return a;
}

HermitianAffine build_lmi_broadcast_ldm(const ProblemData& p, const SdrLayout& l, int u) {
  HermitianAffine a = lmi_frame(p, l.lambda_broadcast[u]);
  add_quadratic(a, exposure(p, u, -1), l.w_broadcast, 1.0 / p.gamma_broadcast);
  add_unicast_interference(a, p, l, u, true);
  return a;
}

LinExpr direct_unicast(const ProblemData& p, const SdrLayout& l, int u) {
  SdrLayout tmp = l;
  tmp.lambda_unicast.assign(p.num_users(), 0);
  HermitianAffine a = build_lmi_unicast(without_errors(p), tmp, u);
  a.terms.erase(a.terms.begin());  // drop the multiplier term
  return last_entry(a);
}

LinExpr direct_broadcast_tdm(const ProblemData& p, const SdrLayout& l, int u) {
  SdrLayout tmp = l;
  tmp.lambda_broadcast.assign(p.num_users(), 0);
  HermitianAffine a = build_lmi_broadcast_tdm(without_errors(p), tmp, u);
  a.terms.erase(a.terms.begin());
  return last_entry(a);
}

LinExpr direct_broadcast_ldm(const ProblemData& p, const SdrLayout& l, int u) {
  SdrLayout tmp = l;
  tmp.lambda_broadcast.assign(p.num_users(), 0);
  HermitianAffine a = build_lmi_broadcast_ldm(without_errors(p), tmp, u);
  a.terms.erase(a.terms.begin());
  return last_entry(a);
}

SdrProgram build_sdr(const ProblemData& p, const SdrOptions& opt) {
  bool sp = opt.path == SdrPath::s_procedure || (opt.path == SdrPath::automatic && !p.perfect_csi);
  if (opt.path == SdrPath::direct && !p.perfect_csi)
    throw std::invalid_argument("direct SDR ignores CSI errors; use the S-procedure path");
  conic::ProgramBuilder b;
  SdrProgram out;
  out.layout = allocate_sdr_variables(b, p, sp);
  const SdrLayout& l = out.layout;
  LinExpr objective;
  if (l.w_broadcast.valid())
    for (int i = 0; i < l.w_broadcast.side; ++i) objective.add(l.w_broadcast.offset + i, 1.0);
  for (const auto& w : l.w_unicast)
    if (w.valid())
      for (int i = 0; i < w.side; ++i) objective.add(w.offset + i, 1.0);
  b.set_objective(objective);
  for (int u = 0; u < p.num_users(); ++u) {
    if (p.has_unicast(u)) {
      if (sp) b.add_hermitian_psd(build_lmi_unicast(p, l, u));
      else b.add_nonnegative(direct_unicast(p, l, u));
    }
    if (p.has_broadcast()) {
      if (p.scheme == Scheme::tdm) {
        if (sp) b.add_hermitian_psd(build_lmi_broadcast_tdm(p, l, u, opt.broadcast_form));
        else b.add_nonnegative(direct_broadcast_tdm(p, l, u));
      } else {
        if (sp) b.add_hermitian_psd(build_lmi_broadcast_ldm(p, l, u));
        else b.add_nonnegative(direct_broadcast_ldm(p, l, u));
      }
    }
  }
  out.program = b.build();
  return out;
}

namespace {

SdrSolution solve_single(const ProblemData& p, const SdrOptions& opt) {
  SdrProgram sp = build_sdr(p, opt);
  SdrSolution s;
  conic::SolveResult r;
  if (sp.program.num_vars == 0) {
    r.status = conic::SolveStatus::optimal;
  } else {
    r = conic::solve(sp.program, {opt.tol, 100});
  }
  s.status = r.status;
  s.iterations = r.iterations;
  const int users = p.num_users();
  s.w_unicast.assign(users, CMatrix());
  s.lambda_broadcast = Vector::Zero(users);
  s.lambda_unicast = Vector::Zero(users);
  s.rank_ratio_unicast.assign(users, 0.0);
  if (!r.optimal()) return s;
  const SdrLayout& l = sp.layout;
  if (l.w_broadcast.valid()) s.w_broadcast = l.w_broadcast.value(r.primal);
  for (int u = 0; u < users; ++u) {
    if (l.w_unicast[u].valid()) s.w_unicast[u] = l.w_unicast[u].value(r.primal);
    if (l.lambda_broadcast[u] >= 0) s.lambda_broadcast(u) = r.primal(l.lambda_broadcast[u]);
    if (l.lambda_unicast[u] >= 0) s.lambda_unicast(u) = r.primal(l.lambda_unicast[u]);
  }
  s.objective_w = r.objective_value;
  return s;
}

void fill_ranks(const ProblemData& p, SdrSolution& s) {
  if (!s.feasible()) return;
  if (s.w_broadcast.size()) s.rank_ratio_broadcast = principal_component(s.w_broadcast).second;
  for (int u = 0; u < p.num_users(); ++u)
    if (s.w_unicast[u].size()) s.rank_ratio_unicast[u] = principal_component(s.w_unicast[u]).second;
}

}  // namespace

SdrSolution solve_sdr(const ProblemData& p, const SdrOptions& opt) {
  SdrSolution s;
  if (p.scheme == Scheme::tdm && p.has_broadcast()) {
    // TDM layers share no constraints, so the two SDRs are solved apart.
    // The broadcast SDR is homogeneous in gamma^B (W^B = gamma^B W'), so it
    // is solved at gamma^B = 1 and rescaled; large targets stay conditioned.
    // The printed form is not homogeneous and is solved as is.
    const bool rescale = opt.broadcast_form == BroadcastLmiForm::standard;
    ProblemData unit = broadcast_only(p);
    if (rescale) unit.gamma_broadcast = 1.0;
    SdrSolution b = solve_single(unit, opt);
    if (b.feasible() && rescale) {
      b.w_broadcast *= p.gamma_broadcast;
      b.objective_w *= p.gamma_broadcast;
    }
    SdrSolution u = solve_single(unicast_only(p), opt);
    s = u;
    s.status = b.status != conic::SolveStatus::optimal ? b.status : u.status;
    s.w_broadcast = b.w_broadcast;
    s.lambda_broadcast = b.lambda_broadcast;
    s.objective_w = b.objective_w + u.objective_w;
    s.iterations = b.iterations + u.iterations;
  } else {
    s = solve_single(p, opt);
  }
  if (s.feasible() && !s.w_broadcast.size() && p.has_broadcast()) s.status = conic::SolveStatus::numerical_limit;
  fill_ranks(p, s);
  return s;
}

std::pair<CVector, double> principal_component(const CMatrix& W) {
  const int n = static_cast<int>(W.rows());
  if (n == 0) return {CVector(), 0.0};
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (W + W.adjoint()));
  const Vector& ev = es.eigenvalues();
  double l1 = std::max(ev(n - 1), 0.0);
  if (l1 <= 0) return {CVector::Zero(n), 0.0};
  double l2 = n > 1 ? std::max(ev(n - 2), 0.0) : 0.0;
  CVector v = std::sqrt(l1) * es.eigenvectors().col(n - 1);
  int idx = 0;
  v.cwiseAbs().maxCoeff(&idx);
  if (std::abs(v(idx)) > 0) v *= std::conj(v(idx)) / std::abs(v(idx));
  v(idx) = Complex(v(idx).real(), 0.0);
  return {v, l2 / l1};
}

}  // namespace beamnet
