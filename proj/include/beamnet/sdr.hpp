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

#include "beamnet/conic.hpp"
#include "beamnet/problem.hpp"

namespace beamnet {

// Broadcast LMI for TDM. `standard` scales the whole W^B block by
// 1/gamma^B (S-lemma form); `as_printed` scales only the (2,2) entry and is
// kept for comparison because it is not sound for gamma^B < 1.
enum class BroadcastLmiForm { standard, as_printed };

// automatic: direct SDR for perfect CSI, S-procedure LMIs otherwise.
enum class SdrPath { automatic, direct, s_procedure };

struct SdrOptions {
  SdrPath path = SdrPath::automatic;
  BroadcastLmiForm broadcast_form = BroadcastLmiForm::standard;
  double tol = 1e-8;
};

struct SdrLayout {
  conic::HermitianVar w_broadcast;              // invalid if gamma^B = 0
  std::vector<conic::HermitianVar> w_unicast;   // invalid entries for gamma^U = 0
  std::vector<int> lambda_broadcast;            // -1 where absent
  std::vector<int> lambda_unicast;
};

struct SdrSolution {
  conic::SolveStatus status = conic::SolveStatus::numerical_limit;
  CMatrix w_broadcast;
  std::vector<CMatrix> w_unicast;
  Vector lambda_broadcast;
  Vector lambda_unicast;
  double objective_w = 0.0;
  double rank_ratio_broadcast = 0.0;
  std::vector<double> rank_ratio_unicast;
  int iterations = 0;

  bool feasible() const { return status == conic::SolveStatus::optimal; }
  bool rank_one(double threshold = 1e-6) const;
};

struct SdrProgram {
  conic::ConicProgram program;
  SdrLayout layout;
};

// Allocates the matrix variables, their PSD constraints and multipliers.
SdrLayout allocate_sdr_variables(conic::ProgramBuilder& b, const ProblemData& p, bool s_procedure);

// Complex LMIs in the congruent form diag(P,1)^H [.] diag(P,1), P = Q^{-1/2}:
//   [[P V P + lambda I, P V h], [h^H V P, h^H V h - 1 - lambda]] >= 0.
conic::HermitianAffine build_lmi_unicast(const ProblemData& p, const SdrLayout& l, int user);
conic::HermitianAffine build_lmi_broadcast_tdm(const ProblemData& p, const SdrLayout& l, int user,
                                               BroadcastLmiForm form = BroadcastLmiForm::standard);
conic::HermitianAffine build_lmi_broadcast_ldm(const ProblemData& p, const SdrLayout& l, int user);

// Direct SDR constraints h^H V h - 1 >= 0 (perfect CSI).
conic::LinExpr direct_unicast(const ProblemData& p, const SdrLayout& l, int user);
conic::LinExpr direct_broadcast_tdm(const ProblemData& p, const SdrLayout& l, int user);
conic::LinExpr direct_broadcast_ldm(const ProblemData& p, const SdrLayout& l, int user);

SdrProgram build_sdr(const ProblemData& p, const SdrOptions& options = {});
SdrSolution solve_sdr(const ProblemData& p, const SdrOptions& options = {});

// sqrt(l1) v1 with the largest-magnitude entry made real and nonnegative;
// second member is l2/l1 (0 when l1 = 0).
std::pair<CVector, double> principal_component(const CMatrix& W);

}  // namespace beamnet
