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

#include "beamnet/sca.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "beamnet/channel.hpp"

namespace beamnet {

using conic::ComplexVar;
using conic::LinExpr;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kGuard = 1e-12;
}  // namespace

void BeamformerSet::refresh() {
  power_broadcast = w_broadcast.squaredNorm();
  power_unicast = 0.0;
  for (const auto& w : w_unicast) power_unicast += w.squaredNorm();
  injection_level_db = power_broadcast > 0 && power_unicast > 0 ? injection_level(power_broadcast, power_unicast)
                                                                : std::numeric_limits<double>::quiet_NaN();
}

BeamformerSet BeamformerSet::scaled(double unicast, double broadcast) const {
  BeamformerSet s = *this;
  s.w_broadcast *= broadcast;
  for (auto& w : s.w_unicast) w *= unicast;
  s.refresh();
  return s;
}

BeamformerSet zero_beamformers(const ProblemData& p) {
  BeamformerSet s;
  s.w_broadcast = CVector::Zero(p.nm());
  for (int u = 0; u < p.num_users(); ++u) s.w_unicast.push_back(CVector::Zero(p.stream_dim(u)));
  s.refresh();
  return s;
}

Auxiliaries compute_auxiliaries(const ProblemData& p, const BeamformerSet& w) {
  const int users = p.num_users();
  Auxiliaries a;
  a.t_unicast = Vector::Zero(users);
  a.t_broadcast = Vector::Zero(users);
  a.beta = Matrix::Zero(users, users);
  for (int u = 0; u < users; ++u) {
    for (int v = 0; v < users; ++v) {
      if (!p.has_unicast(v)) continue;
      const CVector hv = p.cluster_channel(u, v);
      const CMatrix P = p.cluster_shape(u, v);
      const double amp = std::abs(hv.dot(w.w_unicast[v]));
      const double err = (P * w.w_unicast[v]).norm();
      if (v == u) a.t_unicast(u) = amp - err;
      a.beta(u, v) = amp + err;
    }
    if (p.has_broadcast())
      a.t_broadcast(u) = std::abs(p.h[u].dot(w.w_broadcast)) - (p.full_shape(u) * w.w_broadcast).norm();
  }
  return a;
}

namespace {

// Interference sum over streams for receiver u.
double interference(const ProblemData& p, const Auxiliaries& a, int u, bool include_own) {
  double s = 0.0;
  for (int v = 0; v < p.num_users(); ++v) {
    if (!p.has_unicast(v) || (v == u && !include_own)) continue;
    s += a.beta(u, v) * a.beta(u, v);
  }
  return s;
}

bool quotient_ok(double t, double gamma, double interf, double& slack) {
  double need = gamma * (interf + 1.0);
  double have = t > 0 ? t * t : 0.0;
  slack = std::max(slack, (need - have) / need);
  return t >= 0 && have >= need;
}

}  // namespace

ConstraintCheck check_tightened(const ProblemData& p, const BeamformerSet& w) {
  ConstraintCheck c;
  const Auxiliaries a = compute_auxiliaries(p, w);
  c.max_slack = -kInf;
  for (int u = 0; u < p.num_users(); ++u) {
    if (p.has_unicast(u) && !quotient_ok(a.t_unicast(u), p.gamma_unicast[u], interference(p, a, u, false), c.max_slack))
      c.unicast_ok = false;
    if (p.has_broadcast()) {
      bool ok;
      if (p.scheme == Scheme::tdm) {
        ok = quotient_ok(a.t_broadcast(u), p.gamma_broadcast, 0.0, c.max_slack);
      } else {
        ok = quotient_ok(a.t_broadcast(u), p.gamma_broadcast, interference(p, a, u, true), c.max_slack);
      }
      if (!ok) c.broadcast_ok = false;
    }
  }
  if (c.max_slack == -kInf) c.max_slack = -1.0;
  return c;
}

namespace {

// c with (c t)^2 >= gamma ((cu b)^2 + 1) where cu is c itself (common) or
// a fixed unicast factor.
double needed(double t, double gamma, double interf_unit) {
  double den = t * t - gamma * interf_unit;
  if (t <= 0 || den <= 0) return kInf;
  return std::sqrt(gamma / den);
}

}  // namespace

double required_common_scale(const ProblemData& p, const BeamformerSet& w) {
  const Auxiliaries a = compute_auxiliaries(p, w);
  double c = 0.0;
  for (int u = 0; u < p.num_users(); ++u) {
    if (p.has_unicast(u)) c = std::max(c, needed(a.t_unicast(u), p.gamma_unicast[u], interference(p, a, u, false)));
    if (p.has_broadcast()) {
      double interf = p.scheme == Scheme::tdm ? 0.0 : interference(p, a, u, true);
      c = std::max(c, needed(a.t_broadcast(u), p.gamma_broadcast, interf));
    }
  }
  return c;
}

namespace {

// Nudges a candidate that misses the constraints by rounding only.
bool exact_repair(const ProblemData& p, BeamformerSet& w, double max_factor) {
  if (check_tightened(p, w).feasible()) return true;
  double c = required_common_scale(p, w);
  if (!(c <= max_factor)) return false;
  double f = std::max(c, 1.0) * (1.0 + 1e-14);
  for (int k = 0; k < 60; ++k) {
    BeamformerSet s = w.scaled(f, f);
    if (check_tightened(p, s).feasible()) {
      w = s;
      return true;
    }
    f *= 1.0 + 1e-13 * (1 << std::min(k, 20));
    if (f > max_factor) break;
  }
  return false;
}

std::vector<double> scale_grid(const ScaParams& prm) {
  std::vector<double> g;
  for (double t = prm.grid_min; t <= prm.grid_max * (1.0 + 1e-12); t *= prm.grid_ratio) g.push_back(t);
  return g;
}

}  // namespace

InitResult scale_to_feasible(const ProblemData& p, const BeamformerSet& candidate, const ScaParams& prm) {
  InitResult r;
  BeamformerSet cand = candidate;
  cand.refresh();
  if (check_tightened(p, cand).feasible()) {
    r.feasible = true;
    r.set = cand;
    r.scale_unicast = r.scale_broadcast = 1.0;
    return r;
  }
  // Solver rounding: a candidate within 1e-6 of feasible is repaired exactly.
  BeamformerSet near = cand;
  if (exact_repair(p, near, 1.0 + 1e-6)) {
    r.feasible = true;
    r.set = near;
    r.scale_unicast = r.scale_broadcast = std::sqrt(near.total_power() / cand.total_power());
    return r;
  }
  const std::vector<double> grid = scale_grid(prm);
  for (double t : grid) {
    BeamformerSet s = cand.scaled(t, t);
    if (check_tightened(p, s).feasible()) {
      r.feasible = true;
      r.set = s;
      r.scale_unicast = r.scale_broadcast = t;
      return r;
    }
  }
  if (!prm.layer_scaling_fallback) return r;
  // Unicast constraints do not involve the broadcast layer, so the unicast
  // factor is fixed first and the broadcast factor second.
  double tu = -1.0;
  for (double t : grid)
    if (check_tightened(p, cand.scaled(t, 1.0)).unicast_ok) {
      tu = t;
      break;
    }
  if (tu < 0) return r;
  for (double t : grid) {
    BeamformerSet s = cand.scaled(tu, t);
    if (check_tightened(p, s).feasible()) {
      r.feasible = true;
      r.used_fallback = true;
      r.set = s;
      r.scale_unicast = tu;
      r.scale_broadcast = t;
      return r;
    }
  }
  return r;
}

InitResult initialize_from_sdr(const SdrSolution& sdr, const ProblemData& p, const ScaParams& prm) {
  BeamformerSet cand = zero_beamformers(p);
  if (p.has_broadcast() && sdr.w_broadcast.size()) cand.w_broadcast = principal_component(sdr.w_broadcast).first;
  for (int u = 0; u < p.num_users(); ++u)
    if (p.has_unicast(u) && sdr.w_unicast[u].size()) cand.w_unicast[u] = principal_component(sdr.w_unicast[u]).first;
  cand.refresh();
  return scale_to_feasible(p, cand, prm);
}

// ---- subproblems ------------------------------------------------------------

CVector linearization_direction(const CVector& h, const CVector& point, bool* guard) {
  Complex z0 = h.dot(point);
  double mag = std::abs(z0);
  if (mag < kGuard) {
    if (guard) *guard = true;
    return h * (kGuard / std::max(h.norm(), kGuard));
  }
  return h * (z0 / mag);
}

namespace {

std::vector<LinExpr> stack(const conic::ComplexExpr& e) {
  std::vector<LinExpr> rows = e.re;
  rows.insert(rows.end(), e.im.begin(), e.im.end());
  return rows;
}

// Re(a^H w) - offset >= ||P w|| (linear when the error shape vanishes).
void add_signal_constraint(conic::ProgramBuilder& b, const CVector& a, const CMatrix& P, const ComplexVar& w,
                           const LinExpr& offset, bool perfect) {
  LinExpr head = conic::inner(a, w).first - offset;
  if (perfect) {
    b.add_nonnegative(head);
    return;
  }
  std::vector<LinExpr> rows{head};
  auto tail = stack(conic::apply(P, w));
  rows.insert(rows.end(), tail.begin(), tail.end());
  b.add_second_order(rows);
}

// beta >= |h^H w| + ||P w||
void add_beta_constraint(conic::ProgramBuilder& b, const CVector& h, const CMatrix& P, const ComplexVar& w, int beta,
                         bool perfect) {
  auto [re, im] = conic::inner(h, w);
  if (perfect) {
    b.add_second_order({LinExpr::var(beta), re, im});
    return;
  }
  int aux = b.add_variables(2);
  b.add_second_order({LinExpr::var(aux), re, im});
  std::vector<LinExpr> rows{LinExpr::var(aux + 1)};
  auto tail = stack(conic::apply(P, w));
  rows.insert(rows.end(), tail.begin(), tail.end());
  b.add_second_order(rows);
  b.add_nonnegative(LinExpr::var(beta) - LinExpr::var(aux) - LinExpr::var(aux + 1));
}

// gamma (sum beta^2 + 1) <= 2 t0 t - t0^2
void add_quotient(conic::ProgramBuilder& b, double gamma, const std::vector<int>& betas, int t, double t0) {
  std::vector<LinExpr> rows;
  const double g = std::sqrt(gamma);
  for (int j : betas) rows.push_back(LinExpr::var(j, g));
  rows.push_back(LinExpr(g));
  LinExpr r = LinExpr::var(t, 2.0 * t0) - LinExpr(t0 * t0);
  b.add_sum_squares_bound(rows, r);
}

ScaSubproblem build_common(const ProblemData& p, const BeamformerSet& point) {
  ScaSubproblem sp;
  conic::ProgramBuilder b;
  SubproblemLayout& l = sp.layout;
  const int users = p.num_users();
  const bool ldm = p.scheme == Scheme::ldm;
  const Auxiliaries a0 = compute_auxiliaries(p, point);

  if (p.has_broadcast()) l.w_broadcast = b.add_complex(p.nm());
  l.w_unicast.resize(users);
  for (int u = 0; u < users; ++u)
    if (p.has_unicast(u)) l.w_unicast[u] = b.add_complex(p.stream_dim(u));
  l.beta.assign(users, std::vector<int>(users, -1));
  l.t_unicast.assign(users, -1);
  l.t_broadcast.assign(users, -1);

  for (int u = 0; u < users; ++u) {
    const bool need_u = p.has_unicast(u);
    const bool need_b = ldm && p.has_broadcast();
    for (int v = 0; v < users; ++v) {
      if (!p.has_unicast(v)) continue;
      if (!(need_b || (need_u && v != u))) continue;
      l.beta[u][v] = b.add_variables(1);
      add_beta_constraint(b, p.cluster_channel(u, v), p.cluster_shape(u, v), l.w_unicast[v], l.beta[u][v],
                          p.perfect_csi);
    }
  }

  for (int u = 0; u < users; ++u) {
    if (p.has_unicast(u)) {
      l.t_unicast[u] = b.add_variables(1);
      std::vector<int> betas;
      for (int v = 0; v < users; ++v)
        if (v != u && l.beta[u][v] >= 0) betas.push_back(l.beta[u][v]);
      add_quotient(b, p.gamma_unicast[u], betas, l.t_unicast[u], a0.t_unicast(u));
      CVector dir = linearization_direction(p.cluster_channel(u, u), point.w_unicast[u], &sp.guard_triggered);
      add_signal_constraint(b, dir, p.cluster_shape(u, u), l.w_unicast[u], LinExpr::var(l.t_unicast[u]),
                            p.perfect_csi);
    }
    if (p.has_broadcast()) {
      CVector dir = linearization_direction(p.h[u], point.w_broadcast, &sp.guard_triggered);
      if (!ldm) {
        add_signal_constraint(b, dir, p.full_shape(u), l.w_broadcast, LinExpr(std::sqrt(p.gamma_broadcast)),
                              p.perfect_csi);
      } else {
        l.t_broadcast[u] = b.add_variables(1);
        std::vector<int> betas;
        for (int v = 0; v < users; ++v)
          if (l.beta[u][v] >= 0) betas.push_back(l.beta[u][v]);
        add_quotient(b, p.gamma_broadcast, betas, l.t_broadcast[u], a0.t_broadcast(u));
        add_signal_constraint(b, dir, p.full_shape(u), l.w_broadcast, LinExpr::var(l.t_broadcast[u]),
                              p.perfect_csi);
      }
    }
  }

  std::vector<LinExpr> rows;
  auto push = [&](const ComplexVar& w) {
    for (int i = 0; i < w.dim; ++i) {
      rows.push_back(LinExpr::var(w.re(i)));
      rows.push_back(LinExpr::var(w.im(i)));
    }
  };
  if (l.w_broadcast.valid()) push(l.w_broadcast);
  for (const auto& w : l.w_unicast)
    if (w.valid()) push(w);
  l.epigraph = b.quadratic_objective_to_soc(rows);
  b.set_objective(LinExpr::var(l.epigraph));
  sp.program = b.build();
  return sp;
}

}  // namespace

ScaSubproblem build_subproblem_tdm(const ProblemData& p, const BeamformerSet& point) {
  if (p.scheme != Scheme::tdm) throw std::invalid_argument("TDM subproblem needs TDM targets");
  return build_common(p, point);
}

ScaSubproblem build_subproblem_ldm(const ProblemData& p, const BeamformerSet& point) {
  if (p.scheme != Scheme::ldm) throw std::invalid_argument("LDM subproblem needs LDM targets");
  return build_common(p, point);
}

ScaSubproblem build_subproblem(const ProblemData& p, const BeamformerSet& point) {
  return p.scheme == Scheme::tdm ? build_subproblem_tdm(p, point) : build_subproblem_ldm(p, point);
}

BeamformerSet extract_beamformers(const ProblemData& p, const SubproblemLayout& l, const Vector& x) {
  BeamformerSet s = zero_beamformers(p);
  if (l.w_broadcast.valid()) s.w_broadcast = l.w_broadcast.value(x);
  for (int u = 0; u < p.num_users(); ++u)
    if (l.w_unicast[u].valid()) s.w_unicast[u] = l.w_unicast[u].value(x);
  s.refresh();
  return s;
}

std::string to_string(ScaStatus s) {
  switch (s) {
    case ScaStatus::converged: return "converged";
    case ScaStatus::max_iterations: return "max_iterations";
    case ScaStatus::sdr_infeasible: return "sdr_infeasible";
    case ScaStatus::init_infeasible: return "init_infeasible";
    case ScaStatus::solver_abort: return "solver_abort";
  }
  return "unknown";
}

namespace {

// One convex subproblem solve with up to three loosened retries.
bool solve_part(const ProblemData& p_in, const BeamformerSet& point_in, const ScaParams& prm, BeamformerSet& out,
                std::string& diag) {
  // A lone TDM broadcast layer is homogeneous in sqrt(gamma^B): solve at
  // gamma^B = 1 and rescale.
  double amp = 1.0;
  ProblemData p = p_in;
  BeamformerSet point = point_in;
  if (p.scheme == Scheme::tdm && p.has_broadcast()) {
    bool alone = true;
    for (int u = 0; u < p.num_users(); ++u) alone = alone && !p.has_unicast(u);
    if (alone) {
      amp = std::sqrt(p.gamma_broadcast);
      p.gamma_broadcast = 1.0;
      point.w_broadcast /= amp;
    }
  }
  ScaSubproblem sp = build_subproblem(p, point);
  double tol = prm.solver_tol;
  for (int attempt = 0; attempt < 4; ++attempt) {
    conic::SolveResult r = conic::solve(sp.program, {tol, 100});
    if (r.optimal()) {
      out = extract_beamformers(p, sp.layout, r.primal);
      if (amp != 1.0) {
        out.w_broadcast *= amp;
        out.refresh();
      }
      return true;
    }
    diag = "subproblem " + conic::to_string(r.status) + " at tol " + std::to_string(tol);
    tol *= 10.0;
  }
  return false;
}

void merge_layers(BeamformerSet& into, const BeamformerSet& from, bool broadcast) {
  if (broadcast) into.w_broadcast = from.w_broadcast;
  else into.w_unicast = from.w_unicast;
}

}  // namespace

ScaOutcome run_sca_from(const ProblemData& p, const BeamformerSet& start, const ScaParams& prm) {
  ScaOutcome out;
  if (!(prm.step_mu > 0 && prm.step_mu <= 1)) throw std::invalid_argument("step_mu must lie in (0,1]");
  ScaState& st = out.state;
  st.iterate = start;
  st.iterate.refresh();
  ConstraintCheck chk = check_tightened(p, st.iterate);
  if (!chk.feasible()) {
    out.status = ScaStatus::init_infeasible;
    out.diagnostic = "starting point violates the tightened constraints";
    return out;
  }
  st.aux = compute_auxiliaries(p, st.iterate);
  st.objective_history.push_back(st.iterate.total_power());
  st.trace.push_back({0, st.iterate.total_power(), chk.max_slack});

  // TDM layers decouple; each is its own convex subproblem.
  std::vector<std::pair<ProblemData, int>> parts;  // int: 0 whole, 1 broadcast, 2 unicast
  if (p.scheme == Scheme::tdm && p.has_broadcast()) {
    parts.emplace_back(broadcast_only(p), 1);
    parts.emplace_back(unicast_only(p), 2);
  } else {
    parts.emplace_back(p, 0);
  }

  int calm = 0;
  out.status = ScaStatus::max_iterations;
  for (int it = 1; it <= prm.max_outer_iters; ++it) {
    BeamformerSet target = st.iterate;
    bool ok = true;
    for (const auto& [part, which] : parts) {
      BeamformerSet sol;
      if (!solve_part(part, st.iterate, prm, sol, out.diagnostic)) {
        ok = false;
        break;
      }
      if (which == 0) target = sol;
      else merge_layers(target, sol, which == 1);
    }
    if (!ok) {
      out.status = ScaStatus::solver_abort;
      return out;
    }
    BeamformerSet next = st.iterate;
    next.w_broadcast += prm.step_mu * (target.w_broadcast - st.iterate.w_broadcast);
    for (int u = 0; u < p.num_users(); ++u)
      next.w_unicast[u] += prm.step_mu * (target.w_unicast[u] - st.iterate.w_unicast[u]);
    next.refresh();
    if (!exact_repair(p, next, 1.0 + 1e-5)) {
      out.status = ScaStatus::solver_abort;
      out.diagnostic = "subproblem solution misses the tightened constraints";
      return out;
    }
    const double f_old = st.iterate.total_power();
    const double f_new = next.total_power();
    if (!(f_new < f_old)) {
      // no numerical progress left
      out.status = ScaStatus::converged;
      break;
    }
    st.iterate = next;
    st.aux = compute_auxiliaries(p, st.iterate);
    st.iteration = it;
    st.objective_history.push_back(f_new);
    ConstraintCheck c = check_tightened(p, st.iterate);
    st.all_iterates_feasible = st.all_iterates_feasible && c.feasible();
    st.trace.push_back({it, f_new, c.max_slack});
    calm = (f_old - f_new) / f_old < prm.rel_tol ? calm + 1 : 0;
    if (calm >= prm.patience) {
      out.status = ScaStatus::converged;
      break;
    }
  }
  return out;
}

ScaOutcome run_sca(const ProblemData& p, const SdrSolution& sdr, const ScaParams& prm) {
  ScaOutcome out;
  if (!sdr.feasible()) {
    out.status = ScaStatus::sdr_infeasible;
    out.diagnostic = "SDR " + conic::to_string(sdr.status);
    return out;
  }
  out.init = initialize_from_sdr(sdr, p, prm);
  if (!out.init.feasible) {
    out.status = ScaStatus::init_infeasible;
    out.diagnostic = "no scaling of the principal components meets the tightened constraints";
    return out;
  }
  InitResult init = out.init;
  out = run_sca_from(p, init.set, prm);
  out.init = init;
  return out;
}

// ---- verification -------------------------------------------------------------

double sinr_unicast(const ProblemData& p, const BeamformerSet& w, const std::vector<CVector>& h, int u) {
  const int m = p.antennas;
  double interf = 1.0, sig = 0.0;
  for (int v = 0; v < p.num_users(); ++v) {
    if (!p.has_unicast(v)) continue;
    double g = std::norm(restrict_to_cluster(h[u], p.clusters.cluster(v), m).dot(w.w_unicast[v]));
    if (v == u) sig = g;
    else interf += g;
  }
  return sig / interf;
}

double sinr_broadcast(const ProblemData& p, const BeamformerSet& w, const std::vector<CVector>& h, int u) {
  double sig = std::norm(h[u].dot(w.w_broadcast));
  if (p.scheme == Scheme::tdm) return sig;
  double interf = 1.0;
  for (int v = 0; v < p.num_users(); ++v)
    if (p.has_unicast(v))
      interf += std::norm(restrict_to_cluster(h[u], p.clusters.cluster(v), p.antennas).dot(w.w_unicast[v]));
  return sig / interf;
}

VerifyReport verify_design(const ProblemData& p, const BeamformerSet& w, int n_samples, std::uint64_t seed) {
  VerifyReport rep;
  const int users = p.num_users();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  rep.tightened_ok = check_tightened(p, w).feasible();
  rep.min_sinr_unicast.assign(users, nan);
  rep.min_sinr_broadcast.assign(users, nan);
  Rng rng(seed);
  std::vector<CVector> h = p.h;
  for (int u = 0; u < users; ++u) {
    const CMatrix P = p.full_shape(u);
    double mu = kInf, mb = kInf;
    for (int s = 0; s <= n_samples; ++s) {
      h[u] = p.h[u];
      if (s > 0 && !p.perfect_csi) h[u] += sample_error_from_shape(P, ErrorMode::boundary, rng);
      if (p.has_unicast(u)) mu = std::min(mu, sinr_unicast(p, w, h, u));
      if (p.has_broadcast()) mb = std::min(mb, sinr_broadcast(p, w, h, u));
      if (p.perfect_csi) break;
    }
    h[u] = p.h[u];
    if (p.has_unicast(u)) rep.min_sinr_unicast[u] = mu;
    if (p.has_broadcast()) rep.min_sinr_broadcast[u] = mb;
  }
  rep.worst_ratio = kInf;
  for (int u = 0; u < users; ++u) {
    if (p.has_unicast(u)) rep.worst_ratio = std::min(rep.worst_ratio, rep.min_sinr_unicast[u] / p.gamma_unicast[u]);
    if (p.has_broadcast()) rep.worst_ratio = std::min(rep.worst_ratio, rep.min_sinr_broadcast[u] / p.gamma_broadcast);
  }
  rep.passed = rep.worst_ratio >= 1.0 - 1e-6;
  return rep;
}

void write_sca_trace(const std::string& path, const std::vector<ScaTraceRow>& trace) {
  std::ofstream out(path);
  out << "iter,objective_w,max_constraint_slack\n";
  out.precision(12);
  for (const auto& r : trace) out << r.iter << "," << r.objective_w << "," << r.max_constraint_slack << "\n";
}

}  // namespace beamnet
