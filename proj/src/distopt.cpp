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

#include "beamnet/distopt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

namespace beamnet {

using conic::LinExpr;

namespace {
constexpr double kDenFloor = 1e-12;
}

// ---- duals ------------------------------------------------------------------

DualVars DualVars::filled(int users, double value) {
  DualVars d;
  d.lambda = Matrix::Constant(users, users, value);
  d.mu = d.kappa = d.xi = d.rho = Vector::Constant(users, value);
  return d;
}

int DualVars::size() const {
  const int u = static_cast<int>(mu.size());
  return u * u + 4 * u;
}

Vector DualVars::flatten() const {
  const int u = static_cast<int>(mu.size());
  Vector v(size());
  v.head(u * u) = Eigen::Map<const Vector>(lambda.data(), u * u);
  v.segment(u * u, u) = mu;
  v.segment(u * u + u, u) = kappa;
  v.segment(u * u + 2 * u, u) = xi;
  v.segment(u * u + 3 * u, u) = rho;
  return v;
}

DualVars DualVars::unflatten(const Vector& v, int u) {
  if (v.size() != u * u + 4 * u) throw std::invalid_argument("dual vector has the wrong length");
  DualVars d;
  d.lambda = Eigen::Map<const Matrix>(v.data(), u, u);
  d.mu = v.segment(u * u, u);
  d.kappa = v.segment(u * u + u, u);
  d.xi = v.segment(u * u + 2 * u, u);
  d.rho = v.segment(u * u + 3 * u, u);
  return d;
}

void DualVars::project() {
  lambda = lambda.cwiseMax(0.0);
  mu = mu.cwiseMax(0.0);
  kappa = kappa.cwiseMax(0.0);
  xi = xi.cwiseMax(0.0);
  rho = rho.cwiseMax(0.0);
}

// ---- messages ---------------------------------------------------------------

std::string to_string(MessageKind k) {
  switch (k) {
    case MessageKind::broadcast_beamformer: return "broadcast_beamformer";
    case MessageKind::beta_exchange: return "beta_exchange";
    case MessageKind::lambda_exchange: return "lambda_exchange";
    case MessageKind::rho_report: return "rho_report";
  }
  return "unknown";
}

void MessageBus::send(Message m) { log_.push_back(std::move(m)); }

std::vector<const Message*> MessageBus::inbox(int receiver, int round) const {
  std::vector<const Message*> out;
  for (const auto& m : log_)
    if (m.round == round && (m.receiver == receiver || (m.receiver == kAllClusters && receiver >= 0)))
      out.push_back(&m);
  return out;
}

int MessageBus::count(int round) const {
  return static_cast<int>(std::count_if(log_.begin(), log_.end(), [&](const Message& m) { return m.round == round; }));
}

// ---- local views ------------------------------------------------------------

ClusterView::ClusterView(const ProblemData& p, int owner) : ClusterView(p, owner, p.clusters.cluster(owner)) {}

ClusterView::ClusterView(const ProblemData& p, int owner, std::vector<int> bss)
    : owner_(owner), bss_(std::move(bss)), perfect_(p.perfect_csi) {
  const int m = p.antennas;
  const int dim = static_cast<int>(bss_.size()) * m;
  for (int u = 0; u < p.num_users(); ++u) {
    CVector h(dim);
    CMatrix P = CMatrix::Zero(dim, dim);
    for (size_t b = 0; b < bss_.size(); ++b) {
      h.segment(b * m, m) = p.h[u].segment(bss_[b] * m, m);
      if (!p.perfect_csi) P.block(b * m, b * m, m, m) = p.error_blocks[u][bss_[b]];
    }
    h_.push_back(std::move(h));
    shape_.push_back(std::move(P));
  }
}

void ClusterView::record(int receiver) const {
  if (!log_) return;
  for (int b : bss_) log_->push_back({owner_, b, receiver});
}

const CVector& ClusterView::channel(int receiver) const {
  record(receiver);
  return h_.at(receiver);
}

const CMatrix& ClusterView::shape(int receiver) const {
  record(receiver);
  return shape_.at(receiver);
}

// ---- linearization ----------------------------------------------------------

Linearization make_linearization(const ProblemData& p, const BeamformerSet& point) {
  Linearization lin;
  const Auxiliaries aux = compute_auxiliaries(p, point);
  for (int u = 0; u < p.num_users(); ++u) {
    lin.unicast_dir.push_back(linearization_direction(p.cluster_channel(u, u), point.w_unicast[u]));
    lin.broadcast_dir.push_back(linearization_direction(p.h[u], point.w_broadcast));
  }
  lin.t_unicast = aux.t_unicast;
  lin.t_broadcast = aux.t_broadcast;
  return lin;
}

// ---- subproblems ------------------------------------------------------------

namespace {

std::vector<LinExpr> stacked(const conic::ComplexExpr& e) {
  std::vector<LinExpr> rows = e.re;
  rows.insert(rows.end(), e.im.begin(), e.im.end());
  return rows;
}

// New variable s with s >= ||B w||.
int norm_epigraph(conic::ProgramBuilder& b, const CMatrix& B, const conic::ComplexVar& w) {
  int s = b.add_variables(1);
  std::vector<LinExpr> rows{LinExpr::var(s)};
  auto tail = stacked(conic::apply(B, w));
  rows.insert(rows.end(), tail.begin(), tail.end());
  b.add_second_order(rows);
  return s;
}

int abs_epigraph(conic::ProgramBuilder& b, const CVector& h, const conic::ComplexVar& w) {
  int s = b.add_variables(1);
  auto [re, im] = conic::inner(h, w);
  b.add_second_order({LinExpr::var(s), re, im});
  return s;
}

int squared_norm_epigraph(conic::ProgramBuilder& b, const conic::ComplexVar& w) {
  std::vector<LinExpr> rows;
  for (int i = 0; i < w.dim; ++i) {
    rows.push_back(LinExpr::var(w.re(i)));
    rows.push_back(LinExpr::var(w.im(i)));
  }
  return b.quadratic_objective_to_soc(rows);
}

CVector solve_or_throw(conic::ProgramBuilder& b, const conic::ComplexVar& w, double tol, const char* what) {
  conic::SolveResult r = conic::solve(b.build(), {tol, 100});
  if (!r.optimal()) {
    r = conic::solve(b.build(), {tol * 100, 150});
    if (!r.optimal()) {
      throw std::runtime_error(std::string(what) + ": " + conic::to_string(r.status));
    }
  }
  return w.value(r.primal);
}

double t_minimizer(double slope, double center, double prox) {
  // argmin_{t >= 0} slope t + prox (t - center)^2
  return std::max(0.0, center - slope / (2.0 * prox));
}

double t_piece(double slope, double center, double prox, double t) {
  return slope * t + prox * (t - center) * (t - center);
}

}  // namespace

double broadcast_lagrangian(const ProblemData& p, const Vector& rho, const std::vector<CVector>& dir,
                            const CVector& w) {
  double v = w.squaredNorm();
  for (int u = 0; u < p.num_users(); ++u) {
    if (rho(u) == 0) continue;
    double err = p.perfect_csi ? 0.0 : (p.full_shape(u) * w).norm();
    v += rho(u) * (err - dir[u].dot(w).real());
  }
  return v;
}

CVector central_broadcast_subproblem(const ProblemData& p, const Vector& rho, const std::vector<CVector>& dir,
                                     double tol) {
  const int users = p.num_users();
  CVector lin = CVector::Zero(p.nm());
  for (int u = 0; u < users; ++u) lin += rho(u) * dir[u];
  if (p.perfect_csi || rho.maxCoeff() <= 0) return 0.5 * lin;  // stationarity of the smooth case
  conic::ProgramBuilder b;
  auto w = b.add_complex(p.nm());
  LinExpr obj = LinExpr::var(squared_norm_epigraph(b, w));
  for (int u = 0; u < users; ++u)
    if (rho(u) > 0) obj += LinExpr::var(norm_epigraph(b, p.full_shape(u), w), rho(u));
  auto [re, im] = conic::inner(lin, w);
  obj -= re;
  b.set_objective(obj);
  return solve_or_throw(b, w, tol, "broadcast subproblem");
}

ClusterSolution cluster_subproblem(const ClusterView& view, const ProblemData& tg, const Vector& lambda_out,
                                   const Vector& lambda_in, double mu, double kappa, double xi,
                                   const Linearization& lin, const DistParams& prm) {
  const int v = view.owner();
  const int users = view.num_users();
  const bool perfect = view.perfect_csi();
  const int dim = static_cast<int>(view.channel(v).size());
  ClusterSolution sol;

  // unicast beamformer
  const CVector& a = lin.unicast_dir[v];
  if (lambda_out.maxCoeff() <= 0 && kappa <= 0) {
    sol.w = CVector::Zero(dim);
  } else if (perfect && lambda_out.maxCoeff() <= 0) {
    sol.w = 0.5 * kappa * a;
  } else {
    conic::ProgramBuilder b;
    auto w = b.add_complex(dim);
    LinExpr obj = LinExpr::var(squared_norm_epigraph(b, w));
    for (int u = 0; u < users; ++u) {
      if (lambda_out(u) <= 0) continue;
      obj += LinExpr::var(abs_epigraph(b, view.channel(u), w), lambda_out(u));
      if (!perfect) obj += LinExpr::var(norm_epigraph(b, view.shape(u), w), lambda_out(u));
    }
    if (kappa > 0) {
      if (!perfect) obj += LinExpr::var(norm_epigraph(b, view.shape(v), w), kappa);
      obj -= kappa * conic::inner(a, w).first;
    }
    b.set_objective(obj);
    sol.w = solve_or_throw(b, w, prm.inner_tol, "cluster subproblem");
  }
  double val = sol.w.squaredNorm();
  for (int u = 0; u < users; ++u) {
    if (lambda_out(u) <= 0) continue;
    double err = perfect ? 0.0 : (view.shape(u) * sol.w).norm();
    val += lambda_out(u) * (std::abs(view.channel(u).dot(sol.w)) + err);
  }
  if (kappa > 0) {
    double err = perfect ? 0.0 : (view.shape(v) * sol.w).norm();
    val += kappa * (err - a.dot(sol.w).real());
  }

  // interference bounds at the owner as receiver
  const double gu = tg.gamma_unicast[v];
  const double gb = tg.gamma_broadcast;
  sol.beta = Vector::Zero(users);
  for (int q = 0; q < users; ++q) {
    if (!tg.has_unicast(q)) continue;
    double den = mu * gu * (q != v ? 1.0 : 0.0) + xi * gb;
    double bq = std::max(lambda_in(q), 0.0) / (2.0 * std::max(den, kDenFloor));
    sol.beta(q) = bq;
    val += -lambda_in(q) * bq + den * bq * bq;
  }

  // signal bounds with the proximal term
  const double tu0 = lin.t_unicast(v), tb0 = lin.t_broadcast(v);
  const double su = kappa - 2.0 * mu * tu0;
  sol.t_unicast = t_minimizer(su, tu0, prm.prox);
  val += t_piece(su, tu0, prm.prox, sol.t_unicast);
  sol.lagrangian = val + mu * (gu + tu0 * tu0) + xi * (gb + tb0 * tb0);
  return sol;
}

namespace {

// t^B depends on rho, which lives with the owner; split out so the central
// margin can be combined locally.
double broadcast_t(double rho, double xi, double tb0, const DistParams& prm, double& piece) {
  double s = rho - 2.0 * xi * tb0;
  double t = t_minimizer(s, tb0, prm.prox);
  piece = t_piece(s, tb0, prm.prox, t);
  return t;
}

double unicast_margin(const ProblemData& p, const Linearization& lin, int u, const CVector& w) {
  double err = p.perfect_csi ? 0.0 : (p.cluster_shape(u, u) * w).norm();
  return err - lin.unicast_dir[u].dot(w).real();
}

double broadcast_margin(const ProblemData& p, const Linearization& lin, int u, const CVector& w) {
  double err = p.perfect_csi ? 0.0 : (p.full_shape(u) * w).norm();
  return err - lin.broadcast_dir[u].dot(w).real();
}

}  // namespace

DualVars dual_gradients(const ProblemData& p, const PrimalEstimate& z, const Linearization& lin) {
  const int users = p.num_users();
  DualVars g = DualVars::filled(users, 0.0);
  for (int u = 0; u < users; ++u) {
    for (int v = 0; v < users; ++v) {
      if (!p.has_unicast(v)) continue;
      double err = p.perfect_csi ? 0.0 : (p.cluster_shape(u, v) * z.w_unicast[v]).norm();
      g.lambda(u, v) = std::abs(p.cluster_channel(u, v).dot(z.w_unicast[v])) + err - z.beta(u, v);
    }
    double iu = 0.0, ib = 0.0;
    for (int v = 0; v < users; ++v) {
      if (!p.has_unicast(v)) continue;
      ib += z.beta(u, v) * z.beta(u, v);
      if (v != u) iu += z.beta(u, v) * z.beta(u, v);
    }
    const double tu0 = lin.t_unicast(u), tb0 = lin.t_broadcast(u);
    g.mu(u) = p.gamma_unicast[u] * (iu + 1.0) + tu0 * tu0 - 2.0 * tu0 * z.t_unicast(u);
    g.kappa(u) = z.t_unicast(u) + unicast_margin(p, lin, u, z.w_unicast[u]);
    g.xi(u) = p.gamma_broadcast * (ib + 1.0) + tb0 * tb0 - 2.0 * tb0 * z.t_broadcast(u);
    g.rho(u) = z.t_broadcast(u) + broadcast_margin(p, lin, u, z.w_broadcast);
  }
  return g;
}

DualEvaluation dual_function(const ProblemData& p, const DualVars& d, const Linearization& lin,
                             const DistParams& prm) {
  const int users = p.num_users();
  DualEvaluation ev;
  PrimalEstimate& z = ev.primal;
  z.w_broadcast = central_broadcast_subproblem(p, d.rho, lin.broadcast_dir, prm.inner_tol);
  ev.value = broadcast_lagrangian(p, d.rho, lin.broadcast_dir, z.w_broadcast);
  z.beta = Matrix::Zero(users, users);
  z.t_unicast = Vector::Zero(users);
  z.t_broadcast = Vector::Zero(users);
  for (int v = 0; v < users; ++v) {
    ClusterView view(p, v);
    ClusterSolution s = cluster_subproblem(view, p, d.lambda.col(v), d.lambda.row(v).transpose(), d.mu(v),
                                           d.kappa(v), d.xi(v), lin, prm);
    double piece = 0.0;
    s.t_broadcast = broadcast_t(d.rho(v), d.xi(v), lin.t_broadcast(v), prm, piece);
    ev.value += s.lagrangian + piece;
    z.w_unicast.push_back(s.w);
    z.beta.row(v) = s.beta.transpose();
    z.t_unicast(v) = s.t_unicast;
    z.t_broadcast(v) = s.t_broadcast;
  }
  return ev;
}

namespace {

// Scales the dual gradient by a local curvature model of -D. Each cluster
// owns a 4x4 block over (mu, kappa, xi, rho): the t pieces couple kappa
// with mu (and rho with xi) through a rank-one term of weight 1/(2 eps),
// the beta pieces couple mu with xi. Lambda entries use beta / lambda, the
// exact curvature of their beta piece, read from the delivered beta.
DualVars scaled_direction(const ProblemData& p, const DualVars& d, const DualVars& g, const PrimalEstimate& z,
                          const Matrix& beta_seen, const Linearization& lin, const std::vector<double>& tb0,
                          const DistParams& prm) {
  const int users = p.num_users();
  const double w = 1.0 / (2.0 * prm.prox);
  DualVars out = g;
  for (int v = 0; v < users; ++v) {
    for (int u = 0; u < users; ++u) {
      double c = d.lambda(u, v) > 0.0 ? beta_seen(u, v) / d.lambda(u, v) : 0.0;
      out.lambda(u, v) = g.lambda(u, v) / std::max(c, 1.0);
    }
    const double gu = p.gamma_unicast[v], gb = p.gamma_broadcast;
    const double t0 = lin.t_unicast(v), s0 = tb0[v];
    double buu = 0.0, bub = 0.0, bbb = 0.0;
    for (int q = 0; q < users; ++q) {
      if (!p.has_unicast(q)) continue;
      double den = d.mu(v) * gu * (q != v ? 1.0 : 0.0) + d.xi(v) * gb;
      if (den <= 0.0) continue;
      double b2 = 2.0 * z.beta(v, q) * z.beta(v, q) / den;
      if (q != v) {
        buu += gu * gu * b2;
        bub += gu * gb * b2;
      }
      bbb += gb * gb * b2;
    }
    Eigen::Matrix4d H = Eigen::Matrix4d::Zero();  // order mu, kappa, xi, rho
    H(0, 0) = 4.0 * t0 * t0 * w + buu;
    H(0, 1) = H(1, 0) = -2.0 * t0 * w;
    H(1, 1) = w + 0.5 * lin.unicast_dir[v].squaredNorm();
    H(0, 2) = H(2, 0) = bub;
    H(2, 2) = 4.0 * s0 * s0 * w + bbb;
    H(2, 3) = H(3, 2) = -2.0 * s0 * w;
    H(3, 3) = w;
    H.diagonal() = H.diagonal() * (1.0 + 1e-6) + Eigen::Vector4d::Constant(1e-12);
    Eigen::Vector4d r(g.mu(v), g.kappa(v), g.xi(v), g.rho(v));
    Eigen::Vector4d x = H.ldlt().solve(r);
    out.mu(v) = x(0);
    out.kappa(v) = x(1);
    out.xi(v) = x(2);
    out.rho(v) = x(3);
  }
  return out;
}

}  // namespace

std::string to_string(StepRule r) {
  switch (r) {
    case StepRule::diminishing: return "diminishing";
    case StepRule::constant: return "constant";
    case StepRule::adaptive: return "adaptive";
  }
  return "unknown";
}

std::string to_string(DualStatus s) {
  switch (s) {
    case DualStatus::converged: return "converged";
    case DualStatus::max_iterations: return "max_iterations";
    case DualStatus::diverged: return "diverged";
    case DualStatus::reference_failed: return "reference_failed";
  }
  return "unknown";
}

// ---- dual ascent --------------------------------------------------------------

DualAscentResult run_dual_ascent(const ProblemData& p, const BeamformerSet& point, const DistParams& prm) {
  if (p.scheme != Scheme::ldm) throw std::invalid_argument("distributed solver handles the LDM subproblem");
  const int users = p.num_users();
  DualAscentResult out;
  const Linearization lin = make_linearization(p, point);

  // centralized reference of the same subproblem
  {
    ScaSubproblem ref = build_subproblem_ldm(p, point);
    conic::SolveResult r = conic::solve(ref.program, {1e-10, 150});
    if (!r.optimal()) {
      out.status = DualStatus::reference_failed;
      out.diagnostic = "centralized subproblem " + conic::to_string(r.status);
      return out;
    }
    out.reference_objective = extract_beamformers(p, ref.layout, r.primal).total_power();
  }
  const double pstar = out.reference_objective;

  std::vector<ClusterView> views;
  for (int v = 0; v < users; ++v) views.emplace_back(p, v);
  for (auto& v : views) v.attach_log(&out.access_log);

  DualVars d = DualVars::filled(users, prm.initial_dual);
  for (int u = 0; u < users; ++u)
    for (int v = 0; v < users; ++v)
      if (!p.has_unicast(v)) d.lambda(u, v) = 0.0;

  MessageBus& bus = out.bus;
  // Setup: the central node hands out t^B(nu); clusters publish their
  // starting multipliers.
  {
    std::vector<double> tb(lin.t_broadcast.data(), lin.t_broadcast.data() + users);
    bus.send({MessageKind::broadcast_beamformer, kCentralNode, kAllClusters, 0, tb});
    for (int v = 0; v < users; ++v) {
      for (int u = 0; u < users; ++u)
        if (u != v) bus.send({MessageKind::lambda_exchange, v, u, 0, {d.lambda(u, v)}});
      bus.send({MessageKind::rho_report, v, kCentralNode, 0, {d.rho(v)}});
    }
  }
  // what each cluster knows about multipliers held elsewhere
  std::vector<Vector> lambda_in(users, Vector::Zero(users));
  Vector rho_at_center = Vector::Zero(users);
  std::vector<double> tb0_local(users, 0.0);

  auto read_round = [&](int round) {
    for (int u = 0; u < users; ++u) {
      for (const Message* m : bus.inbox(u, round)) {
        if (m->kind == MessageKind::lambda_exchange) lambda_in[u](m->sender) = m->payload[0];
        if (m->kind == MessageKind::broadcast_beamformer && round == 0) tb0_local[u] = m->payload[u];
      }
      lambda_in[u](u) = d.lambda(u, u);
    }
    for (const Message* m : bus.inbox(kCentralNode, round))
      if (m->kind == MessageKind::rho_report) rho_at_center(m->sender) = m->payload[0];
  };
  read_round(0);

  double last_delta = std::numeric_limits<double>::infinity();
  int rising = 0;
  out.status = DualStatus::max_iterations;
  PrimalEstimate z;
  DualVars anchor = d, anchor_dir = d;
  double anchor_value = -std::numeric_limits<double>::infinity();
  double adaptive_step = prm.step_a;
  for (int j = 1; j <= prm.max_iters; ++j) {
    // STEP 2: primal updates
    double central_piece = 0.0, dual_value = 0.0;
    std::vector<double> pieces(users, 0.0);
    try {
      z.w_broadcast = central_broadcast_subproblem(p, rho_at_center, lin.broadcast_dir, prm.inner_tol);
      central_piece = broadcast_lagrangian(p, rho_at_center, lin.broadcast_dir, z.w_broadcast);
      dual_value = central_piece;
      z.w_unicast.assign(users, CVector());
      z.beta = Matrix::Zero(users, users);
      z.t_unicast = Vector::Zero(users);
      z.t_broadcast = Vector::Zero(users);
      for (int v = 0; v < users; ++v) {
        Linearization local;  // only the owner's entries are filled
        local.unicast_dir.assign(users, CVector());
        local.unicast_dir[v] = lin.unicast_dir[v];
        local.t_unicast = Vector::Zero(users);
        local.t_broadcast = Vector::Zero(users);
        local.t_unicast(v) = lin.t_unicast(v);
        local.t_broadcast(v) = tb0_local[v];
        ClusterSolution s = cluster_subproblem(views[v], p, d.lambda.col(v), lambda_in[v], d.mu(v), d.kappa(v),
                                               d.xi(v), local, prm);
        double piece = 0.0;
        s.t_broadcast = broadcast_t(d.rho(v), d.xi(v), tb0_local[v], prm, piece);
        pieces[v] = s.lagrangian + piece;
        dual_value += pieces[v];
        z.w_unicast[v] = s.w;
        z.beta.row(v) = s.beta.transpose();
        z.t_unicast(v) = s.t_unicast;
        z.t_broadcast(v) = s.t_broadcast;
      }
    } catch (const std::runtime_error& e) {
      out.status = DualStatus::diverged;
      out.diagnostic = std::string(e.what()) + " at round " + std::to_string(j) + "; reduce the dual step size";
      break;
    }

    // STEP 3: broadcast w^B (with the per-user margins) and beta exchange
    std::vector<double> margins(users);
    for (int u = 0; u < users; ++u) margins[u] = broadcast_margin(p, lin, u, z.w_broadcast);
    margins.push_back(central_piece);
    bus.send({MessageKind::broadcast_beamformer, kCentralNode, kAllClusters, j, margins});
    for (int u = 0; u < users; ++u)
      for (int v = 0; v < users; ++v)
        if (v != u) bus.send({MessageKind::beta_exchange, u, v, j, {z.beta(u, v), pieces[u]}});

    // STEP 4: local dual updates from delivered data only
    Matrix beta_seen = Matrix::Zero(users, users);  // beta(u, v) as known at cluster v
    std::vector<double> bmargin(users, 0.0);
    Vector dual_seen = Vector::Zero(users);  // D as summed by each cluster
    for (int v = 0; v < users; ++v) {
      dual_seen(v) = pieces[v];
      for (const Message* m : bus.inbox(v, j)) {
        if (m->kind == MessageKind::beta_exchange) {
          beta_seen(m->sender, v) = m->payload[0];
          dual_seen(v) += m->payload[1];
        }
        if (m->kind == MessageKind::broadcast_beamformer) {
          bmargin[v] = m->payload[v];
          dual_seen(v) += m->payload[users];
        }
      }
      beta_seen(v, v) = z.beta(v, v);
    }
    DualVars g = DualVars::filled(users, 0.0);
    for (int v = 0; v < users; ++v) {
      const ClusterView& view = views[v];
      if (p.has_unicast(v))
        for (int u = 0; u < users; ++u) {
          double err = p.perfect_csi ? 0.0 : (view.shape(u) * z.w_unicast[v]).norm();
          g.lambda(u, v) = std::abs(view.channel(u).dot(z.w_unicast[v])) + err - beta_seen(u, v);
        }
      double iu = 0.0, ib = 0.0;
      for (int q = 0; q < users; ++q) {
        if (!p.has_unicast(q)) continue;
        ib += z.beta(v, q) * z.beta(v, q);
        if (q != v) iu += z.beta(v, q) * z.beta(v, q);
      }
      const double tu0 = lin.t_unicast(v), tb0 = tb0_local[v];
      g.mu(v) = p.gamma_unicast[v] * (iu + 1.0) + tu0 * tu0 - 2.0 * tu0 * z.t_unicast(v);
      double uerr = p.perfect_csi ? 0.0 : (view.shape(v) * z.w_unicast[v]).norm();
      g.kappa(v) = z.t_unicast(v) + uerr - lin.unicast_dir[v].dot(z.w_unicast[v]).real();
      g.xi(v) = p.gamma_broadcast * (ib + 1.0) + tb0 * tb0 - 2.0 * tb0 * z.t_broadcast(v);
      g.rho(v) = z.t_broadcast(v) + bmargin[v];
    }
    for (int u = 0; u < users; ++u)
      for (int v = 0; v < users; ++v)
        if (!p.has_unicast(v)) g.lambda(u, v) = 0.0;
    const DualVars dir = prm.precondition ? scaled_direction(p, d, g, z, beta_seen, lin, tb0_local, prm) : g;
    double step = 0.0;
    switch (prm.step_rule) {
      case StepRule::diminishing: step = prm.step_a / (prm.step_b + j); break;
      case StepRule::constant: step = prm.step_a; break;
      case StepRule::adaptive:
        // Every cluster holds the same sum, so they all take the same branch:
        // a round that lowered D is undone and retried with half the step.
        if (dual_seen(0) < anchor_value) {
          adaptive_step *= 0.5;
        } else {
          anchor = d;
          anchor_dir = dir;
          anchor_value = dual_seen(0);
          adaptive_step = std::min(prm.step_a, adaptive_step * prm.step_grow);
        }
        step = adaptive_step;
        break;
    }
    const bool revert = prm.step_rule == StepRule::adaptive;
    // A multiplier may shrink by at most 90% per round: D is -inf once the
    // beta pieces lose their curvature (mu = xi = 0 with lambda > 0).
    const Vector cur = revert ? anchor.flatten() : d.flatten();
    const Vector move = revert ? anchor_dir.flatten() : dir.flatten();
    d = DualVars::unflatten((cur + step * move).cwiseMax(0.1 * cur), users);
    d.project();
    for (int v = 0; v < users; ++v) {
      for (int u = 0; u < users; ++u)
        if (u != v) bus.send({MessageKind::lambda_exchange, v, u, j, {d.lambda(u, v)}});
      bus.send({MessageKind::rho_report, v, kCentralNode, j, {d.rho(v)}});
    }
    read_round(j);

    // bookkeeping
    double primal = z.w_broadcast.squaredNorm();
    for (const auto& w : z.w_unicast) primal += w.squaredNorm();
    double delta = std::abs(primal - pstar) / pstar;
    // the primal power may cross p* long before the prices settle
    const bool settled = std::abs(dual_value - pstar) <= 10.0 * prm.target_delta * pstar;
    out.trace.push_back({j, dual_value, primal, delta, bus.count(j)});
    out.rounds = j;
    out.delta = delta;
    rising = delta > last_delta ? rising + 1 : 0;
    last_delta = delta;
    if (rising >= prm.divergence_window) {
      out.status = DualStatus::diverged;
      out.diagnostic = "relative error grew for " + std::to_string(rising) + " consecutive rounds; reduce the dual step size";
      break;
    }
    if (delta <= prm.target_delta && settled) {
      out.status = DualStatus::converged;
      break;
    }
  }
  out.duals = d;
  out.design = zero_beamformers(p);
  out.design.w_broadcast = z.w_broadcast;
  out.design.w_unicast = z.w_unicast;
  out.design.refresh();
  return out;
}

bool verify_locality(const MessageBus& bus, const std::vector<AccessRecord>& access, const ClusterMap& clusters,
                     std::string* reason) {
  auto fail = [&](const std::string& why) {
    if (reason) *reason = why;
    return false;
  };
  for (const auto& a : access) {
    const auto& c = clusters.cluster(a.reader);
    if (!std::binary_search(c.begin(), c.end(), a.bs))
      return fail("cluster " + std::to_string(a.reader) + " read CSI of BS " + std::to_string(a.bs));
  }
  // routing per round: one broadcast, beta and lambda between every ordered
  // pair of clusters, one rho report per cluster
  const int users = clusters.num_users();
  std::map<int, std::vector<const Message*>> by_round;
  for (const auto& m : bus.log()) by_round[m.round].push_back(&m);
  for (const auto& [round, msgs] : by_round) {
    if (round == 0) continue;
    int bcast = 0, rho = 0;
    std::set<std::pair<int, int>> beta, lam;
    for (const Message* m : msgs) {
      switch (m->kind) {
        case MessageKind::broadcast_beamformer:
          if (m->sender != kCentralNode || m->receiver != kAllClusters) return fail("broadcast from a cluster");
          ++bcast;
          break;
        case MessageKind::beta_exchange:
          if (m->sender < 0 || m->receiver < 0 || m->sender == m->receiver) return fail("misrouted beta");
          beta.insert({m->sender, m->receiver});
          break;
        case MessageKind::lambda_exchange:
          if (m->sender < 0 || m->receiver < 0 || m->sender == m->receiver) return fail("misrouted lambda");
          lam.insert({m->sender, m->receiver});
          break;
        case MessageKind::rho_report:
          if (m->receiver != kCentralNode) return fail("rho report not sent to the central node");
          ++rho;
          break;
      }
    }
    const size_t pairs = static_cast<size_t>(users) * (users - 1);
    if (bcast != 1 || rho != users || beta.size() != pairs || lam.size() != pairs)
      return fail("round " + std::to_string(round) + " is missing messages");
  }
  return true;
}

void write_dual_trace(const std::string& path, const std::vector<DualTraceRow>& trace) {
  std::ofstream out(path);
  out << "round,dual_objective,primal_objective,delta,messages_sent\n";
  out.precision(12);
  for (const auto& r : trace)
    out << r.round << "," << r.dual_objective << "," << r.primal_objective << "," << r.delta << ","
        << r.messages_sent << "\n";
}

}  // namespace beamnet
