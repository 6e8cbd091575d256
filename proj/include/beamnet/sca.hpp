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
#include <string>
#include <vector>

#include "beamnet/conic.hpp"
#include "beamnet/problem.hpp"
#include "beamnet/sdr.hpp"

namespace beamnet {

struct BeamformerSet {
  CVector w_broadcast;               // N M, zero when the layer is off
  std::vector<CVector> w_unicast;    // |C_u| M per user
  double power_broadcast = 0.0;
  double power_unicast = 0.0;
  double injection_level_db = 0.0;   // NaN unless both powers are positive

  void refresh();
  double total_power() const { return power_broadcast + power_unicast; }
  // Multiplies the unicast and broadcast layers by the given amplitudes.
  BeamformerSet scaled(double unicast, double broadcast) const;
};

BeamformerSet zero_beamformers(const ProblemData& p);

// Worst-case signal lower bounds t and interference upper bounds beta,
// evaluated exactly from the beamformers. beta(u, v) bounds the amplitude
// of stream v at receiver u.
struct Auxiliaries {
  Vector t_unicast;
  Vector t_broadcast;
  Matrix beta;
};

Auxiliaries compute_auxiliaries(const ProblemData& p, const BeamformerSet& w);

struct ConstraintCheck {
  bool unicast_ok = true;
  bool broadcast_ok = true;
  // max over constraints of (required - achieved) / required; <= 0 when met
  double max_slack = -1.0;
  bool feasible() const { return unicast_ok && broadcast_ok; }
};

// Exact test of the tightened deterministic constraints (no tolerance).
ConstraintCheck check_tightened(const ProblemData& p, const BeamformerSet& w);

// Smallest common amplitude factor making every tightened constraint hold
// (infinity if none does); values below 1 mean spare margin.
double required_common_scale(const ProblemData& p, const BeamformerSet& w);

struct ScaParams {
  double step_mu = 1.0;
  int max_outer_iters = 100;
  double rel_tol = 1e-5;
  int patience = 3;
  double grid_min = 1.0;
  double grid_max = 1e3;
  double grid_ratio = 1.02;
  // Scale unicast then broadcast separately when no common factor works.
  bool layer_scaling_fallback = true;
  double solver_tol = 1e-7;
};

struct InitResult {
  bool feasible = false;
  BeamformerSet set;
  double scale_unicast = 0.0;
  double scale_broadcast = 0.0;
  bool used_fallback = false;
};

InitResult scale_to_feasible(const ProblemData& p, const BeamformerSet& candidate, const ScaParams& params);
InitResult initialize_from_sdr(const SdrSolution& sdr, const ProblemData& p, const ScaParams& params);

struct SubproblemLayout {
  conic::ComplexVar w_broadcast;
  std::vector<conic::ComplexVar> w_unicast;
  std::vector<std::vector<int>> beta;  // [receiver][stream], -1 if absent
  std::vector<int> t_unicast, t_broadcast;
  int epigraph = -1;
};

struct ScaSubproblem {
  conic::ConicProgram program;
  SubproblemLayout layout;
  bool guard_triggered = false;  // a linearisation denominator was clamped
};

// Tangent direction a of |h^H w| at the point: Re(a^H w) is a minorant
// that touches at the point. |h^H point| below 1e-12 is clamped and
// flagged through `guard`.
CVector linearization_direction(const CVector& h, const CVector& point, bool* guard = nullptr);

ScaSubproblem build_subproblem_tdm(const ProblemData& p, const BeamformerSet& point);
ScaSubproblem build_subproblem_ldm(const ProblemData& p, const BeamformerSet& point);
ScaSubproblem build_subproblem(const ProblemData& p, const BeamformerSet& point);
BeamformerSet extract_beamformers(const ProblemData& p, const SubproblemLayout& layout, const Vector& x);

enum class ScaStatus { converged, max_iterations, sdr_infeasible, init_infeasible, solver_abort };
std::string to_string(ScaStatus s);

struct ScaTraceRow {
  int iter = 0;
  double objective_w = 0.0;
  double max_constraint_slack = 0.0;
};

struct ScaState {
  BeamformerSet iterate;
  Auxiliaries aux;
  int iteration = 0;
  std::vector<double> objective_history;
  std::vector<ScaTraceRow> trace;
  bool all_iterates_feasible = true;
};

struct ScaOutcome {
  ScaStatus status = ScaStatus::init_infeasible;
  ScaState state;
  InitResult init;
  std::string diagnostic;
  bool feasible() const { return status == ScaStatus::converged || status == ScaStatus::max_iterations; }
};

ScaOutcome run_sca(const ProblemData& p, const SdrSolution& sdr, const ScaParams& params = {});
// Starts from an already scaled, tightened-feasible point.
ScaOutcome run_sca_from(const ProblemData& p, const BeamformerSet& start, const ScaParams& params = {});

struct VerifyReport {
  bool tightened_ok = false;
  bool passed = false;
  std::vector<double> min_sinr_unicast;    // NaN where no constraint
  std::vector<double> min_sinr_broadcast;  // NaN where no constraint
  double worst_ratio = 0.0;                // min over constraints of sinr / gamma
};

// Samples n_samples boundary errors per user from the aggregated ellipsoid
// (plus the nominal channel) and evaluates the true SINR expressions.
VerifyReport verify_design(const ProblemData& p, const BeamformerSet& w, int n_samples, std::uint64_t seed);

// SINRs with explicit (noise-normalised, aggregated) channels per user.
double sinr_unicast(const ProblemData& p, const BeamformerSet& w, const std::vector<CVector>& h, int user);
double sinr_broadcast(const ProblemData& p, const BeamformerSet& w, const std::vector<CVector>& h, int user);

void write_sca_trace(const std::string& path, const std::vector<ScaTraceRow>& trace);

}  // namespace beamnet
