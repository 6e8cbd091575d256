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

#include <string>
#include <vector>

#include "beamnet/problem.hpp"
#include "beamnet/sca.hpp"

namespace beamnet {

// Multipliers of the LDM SCA subproblem. lambda(u, v) prices the bound on
// stream v's amplitude at receiver u; mu/kappa the unicast quotient and
// signal bounds, xi/rho the broadcast ones.
struct DualVars {
  Matrix lambda;
  Vector mu, kappa, xi, rho;

  static DualVars filled(int users, double value);
  int size() const;
  Vector flatten() const;
  static DualVars unflatten(const Vector& v, int users);
  void project();  // onto the nonnegative orthant
};

enum class MessageKind { broadcast_beamformer, beta_exchange, lambda_exchange, rho_report };
std::string to_string(MessageKind k);

constexpr int kCentralNode = -1;
constexpr int kAllClusters = -2;

struct Message {
  MessageKind kind;
  int sender;    // cluster index (its user) or kCentralNode
  int receiver;  // cluster index, kCentralNode or kAllClusters
  int round;
  std::vector<double> payload;
};

// Deterministic FIFO per (sender, receiver, round).
class MessageBus {
 public:
  void send(Message m);
  // Messages addressed to `receiver` (or to all) in `round`, in send order.
  std::vector<const Message*> inbox(int receiver, int round) const;
  const std::vector<Message>& log() const { return log_; }
  int count(int round) const;

 private:
  std::vector<Message> log_;
};

struct AccessRecord {
  int reader;    // cluster index
  int bs;        // BS whose coefficients were read
  int receiver;  // user the channel leads to
};

// Local CSI of one cluster: channels from its own BSs to every user. Reads
// are logged so locality can be audited afterwards.
class ClusterView {
 public:
  ClusterView(const ProblemData& p, int owner);
  // Test hook: a view over an arbitrary BS set (used as a negative control).
  ClusterView(const ProblemData& p, int owner, std::vector<int> bss);

  int owner() const { return owner_; }
  const std::vector<int>& bss() const { return bss_; }
  int num_users() const { return static_cast<int>(h_.size()); }
  bool perfect_csi() const { return perfect_; }
  const CVector& channel(int receiver) const;  // stacked over bss()
  const CMatrix& shape(int receiver) const;
  void attach_log(std::vector<AccessRecord>* log) { log_ = log; }

 private:
  void record(int receiver) const;
  int owner_;
  std::vector<int> bss_;
  bool perfect_;
  std::vector<CVector> h_;
  std::vector<CMatrix> shape_;
  std::vector<AccessRecord>* log_ = nullptr;
};

// Values fixed at the SCA linearization point.
struct Linearization {
  std::vector<CVector> unicast_dir;    // per user, in its cluster coordinates
  std::vector<CVector> broadcast_dir;  // per user, N M
  Vector t_unicast, t_broadcast;       // t(nu)
};

Linearization make_linearization(const ProblemData& p, const BeamformerSet& point);

struct ClusterSolution {
  CVector w;            // unicast beamformer of the owner
  double t_unicast = 0.0;
  double t_broadcast = 0.0;
  Vector beta;          // beta(owner, v) for every stream v
  double lagrangian = 0.0;  // minimum of the owner's Lagrangian pieces
};

enum class StepRule { diminishing, constant, adaptive };
std::string to_string(StepRule r);

struct DistParams {
  double prox = 1e-3;  // eps_t on (t - t(nu))^2
  // diminishing: a / (b + j); constant: a; adaptive: starts at a, halves
  // and retries whenever D drops, grows 5% per accepted round up to a.
  StepRule step_rule = StepRule::adaptive;
  double step_a = 0.5;
  double step_b = 10.0;
  double step_grow = 1.05;
  // Divide each step by a diagonal curvature estimate of its multiplier.
  bool precondition = true;
  double initial_dual = 1.0;
  int max_iters = 2000;
  double target_delta = 1e-3;
  double inner_tol = 1e-10;
  int divergence_window = 100;
};

// min ||w||^2 + sum rho_u ||P_u w|| - sum rho_u Re(a_u^H w)
CVector central_broadcast_subproblem(const ProblemData& p, const Vector& rho, const std::vector<CVector>& directions,
                                     double tol = 1e-10);
double broadcast_lagrangian(const ProblemData& p, const Vector& rho, const std::vector<CVector>& directions,
                            const CVector& w);

// lambda_out(u) = lambda(u, owner) is local; lambda_in(v) = lambda(owner, v)
// arrives from cluster v.
ClusterSolution cluster_subproblem(const ClusterView& view, const ProblemData& targets, const Vector& lambda_out,
                                   const Vector& lambda_in, double mu, double kappa, double xi,
                                   const Linearization& lin, const DistParams& params);

struct PrimalEstimate {
  CVector w_broadcast;
  std::vector<CVector> w_unicast;
  Matrix beta;
  Vector t_unicast, t_broadcast;
};

// Gradients of the dual function: constraint residuals at the minimizers.
DualVars dual_gradients(const ProblemData& p, const PrimalEstimate& z, const Linearization& lin);

struct DualEvaluation {
  double value = 0.0;
  PrimalEstimate primal;
};

// D(duals) with every subproblem solved (centrally; used for checks).
DualEvaluation dual_function(const ProblemData& p, const DualVars& duals, const Linearization& lin,
                             const DistParams& params = {});

struct DualTraceRow {
  int round = 0;
  double dual_objective = 0.0;
  double primal_objective = 0.0;
  double delta = 0.0;
  int messages_sent = 0;
};

enum class DualStatus { converged, max_iterations, diverged, reference_failed };
std::string to_string(DualStatus s);

struct DualAscentResult {
  DualStatus status = DualStatus::max_iterations;
  BeamformerSet design;
  DualVars duals;
  double reference_objective = 0.0;  // centralized optimum p*
  double delta = 0.0;
  int rounds = 0;
  std::vector<DualTraceRow> trace;
  MessageBus bus;
  std::vector<AccessRecord> access_log;
  std::string diagnostic;
};

// Synchronous message-passing rounds on the LDM subproblem linearized at `point`.
DualAscentResult run_dual_ascent(const ProblemData& p, const BeamformerSet& point, const DistParams& params = {});

// Every read stays inside the reader's cluster and every cross-cluster
// scalar a cluster consumed was delivered by a logged message.
bool verify_locality(const MessageBus& bus, const std::vector<AccessRecord>& access, const ClusterMap& clusters,
                     std::string* reason = nullptr);

void write_dual_trace(const std::string& path, const std::vector<DualTraceRow>& trace);

}  // namespace beamnet
