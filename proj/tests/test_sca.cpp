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

#include <cmath>
#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "beamnet/sca.hpp"

using namespace beamnet;
using doctest::Approx;

namespace {

ProblemData drawn(const NetworkConfig& c, Scheme s, std::uint64_t trial, double fraction = 0.5) {
  ChannelDraw d = sample_channels(c, derive_trial_seed(c.rng_seed, trial));
  return make_problem(d.csi, build_clusters(c), make_targets(c, s, fraction), c.noise_power_w());
}

// Scalar N=M=K=1 instance with channel h (already noise-normalised).
ProblemData scalar(Scheme s, double gb, double gu, Complex h) {
  NetworkConfig c = make_config(1, 1, 1, 0, 0);
  ProblemData p;
  p.n_cells = p.users_per_cell = p.antennas = 1;
  p.scheme = s;
  p.gamma_broadcast = gb;
  p.gamma_unicast = {gu};
  p.clusters = build_clusters(c);
  p.h = {CVector::Constant(1, h)};
  p.error_blocks = {{CMatrix::Zero(1, 1)}};
  return p;
}

bool non_increasing(const std::vector<double>& f) {
  for (size_t i = 1; i < f.size(); ++i)
    if (f[i] > f[i - 1] * (1 + 1e-7)) return false;
  return true;
}

}  // namespace

TEST_CASE("single-user unicast converges to the MRT power") {
  NetworkConfig c = make_config(1, 1, 3, 0.0, 1.0);
  for (std::uint64_t t = 0; t < 10; ++t) {
    ChannelDraw d = sample_channels(c, t);
    ProblemData p = make_problem(d.csi, build_clusters(c), make_targets(c, Scheme::tdm, 0.5), c.noise_power_w());
    ScaOutcome o = run_sca(p, solve_sdr(p));
    REQUIRE(o.feasible());
    double expect = p.gamma_unicast[0] * c.noise_power_w() / d.truth.link(0, 0).squaredNorm();
    CHECK(o.state.iterate.total_power() == Approx(expect).epsilon(1e-4));
  }
}

TEST_CASE("tangent minorant of |h^H w|") {
  CVector h = CVector::Random(4), u = CVector::Random(4);
  CVector a = linearization_direction(h, u);
  CHECK(std::real(a.dot(u)) == Approx(std::abs(h.dot(u))));
  for (int k = 0; k < 200; ++k) {
    CVector w = 3.0 * CVector::Random(4);
    CHECK(std::real(a.dot(w)) <= std::abs(h.dot(w)) + 1e-12);
  }
  bool guard = false;
  linearization_direction(h, CVector::Zero(4), &guard);
  CHECK(guard);
  guard = false;
  linearization_direction(h, u, &guard);
  CHECK_FALSE(guard);
}

TEST_CASE("auxiliaries follow the worst-case bounds") {
  NetworkConfig c = make_config(2, 1, 2, 1.0, 0.5);
  c.csi_error_variance = 0.05 * 0.05 * 2 * path_loss_gain(0.4);
  ProblemData p = drawn(c, Scheme::ldm, 3);
  BeamformerSet w = zero_beamformers(p);
  w.w_broadcast = CVector::Random(4) * 1e7;
  for (auto& x : w.w_unicast) x = CVector::Random(2) * 1e7;
  w.refresh();
  Auxiliaries a = compute_auxiliaries(p, w);
  for (int u = 0; u < 2; ++u) {
    CHECK(a.t_unicast(u) == Approx(worst_case_gain_from_shape(p.cluster_channel(u, u), p.cluster_shape(u, u),
                                                              w.w_unicast[u])));
    CHECK(a.t_broadcast(u) == Approx(worst_case_gain_from_shape(p.h[u], p.full_shape(u), w.w_broadcast)));
    for (int v = 0; v < 2; ++v)
      CHECK(a.beta(u, v) == Approx(std::abs(p.cluster_channel(u, v).dot(w.w_unicast[v])) +
                                   (p.cluster_shape(u, v) * w.w_unicast[v]).norm()));
  }
}

TEST_CASE("beamformer powers") {
  NetworkConfig c = make_config(2, 1, 2, 1.0, 0.5);
  ProblemData p = drawn(c, Scheme::ldm, 0);
  BeamformerSet w = zero_beamformers(p);
  w.w_broadcast << 1, 2, 0, 0;
  w.w_unicast[0] << 1, 0;
  w.w_unicast[1] << 0, 3;
  w.refresh();
  CHECK(w.power_broadcast == Approx(5));
  CHECK(w.power_unicast == Approx(10));
  CHECK(w.injection_level_db == Approx(10 * std::log10(0.5)));
  BeamformerSet s = w.scaled(2, 1);
  CHECK(s.power_unicast == Approx(40));
  CHECK(s.power_broadcast == Approx(5));
  CHECK(std::isnan(zero_beamformers(p).injection_level_db));
}

TEST_CASE("initialisation: unchanged when already feasible") {
  ProblemData p = scalar(Scheme::tdm, 0.0, 2.0, 1.0);
  SdrSolution sdr = solve_sdr(p);
  REQUIRE(sdr.feasible());
  sdr.w_unicast[0] *= 1.001;
  InitResult r = initialize_from_sdr(sdr, p, {});
  REQUIRE(r.feasible);
  CHECK(r.scale_unicast == 1.0);
  CHECK(r.set.w_unicast[0].squaredNorm() == Approx(sdr.w_unicast[0](0, 0).real()));
}

TEST_CASE("initialisation: half amplitude needs factor two") {
  ProblemData p = scalar(Scheme::tdm, 0.0, 4.0, 1.0);
  BeamformerSet w = zero_beamformers(p);
  w.w_unicast[0] << 1.0;  // required amplitude 2
  ScaParams prm;
  InitResult r = scale_to_feasible(p, w, prm);
  REQUIRE(r.feasible);
  CHECK(r.scale_unicast >= 2.0);
  CHECK(r.scale_unicast <= 2.0 * prm.grid_ratio);
  CHECK(required_common_scale(p, w) == Approx(2.0));
}

TEST_CASE("initialisation: LDM broadcast beyond reach of a common scale") {
  // t^2 S / (t^2 I + 1) never reaches gamma^B when S / I < gamma^B
  ProblemData p = scalar(Scheme::ldm, 2.0, 0.5, 1.0);
  BeamformerSet w = zero_beamformers(p);
  w.w_broadcast << 1.0;
  w.w_unicast[0] << 1.0;  // S / I = 1 < 2
  ScaParams prm;
  prm.layer_scaling_fallback = false;
  CHECK_FALSE(scale_to_feasible(p, w, prm).feasible);
  CHECK(std::isinf(required_common_scale(p, w)));
  // scaling the layers apart does work here
  prm.layer_scaling_fallback = true;
  InitResult r = scale_to_feasible(p, w, prm);
  CHECK(r.feasible);
  CHECK(r.used_fallback);
}

TEST_CASE("subproblem at the point: feasible and no worse") {
  NetworkConfig c = make_config(2, 2, 2, 2.0, 0.5);
  c.csi_error_variance = 0.02 * 0.02 * 2 * path_loss_gain(0.4);
  for (Scheme s : {Scheme::ldm, Scheme::tdm}) {
    ProblemData p = drawn(c, s, 1);
    SdrSolution sdr = solve_sdr(p);
    REQUIRE(sdr.feasible());
    InitResult init = initialize_from_sdr(sdr, p, {});
    REQUIRE(init.feasible);
    ScaSubproblem sp = build_subproblem(p, init.set);
    conic::SolveResult r = conic::solve(sp.program, {1e-8, 100});
    REQUIRE(r.optimal());
    BeamformerSet next = extract_beamformers(p, sp.layout, r.primal);
    CHECK(next.total_power() <= init.set.total_power() * (1 + 1e-6));
    CHECK(required_common_scale(p, next) <= 1 + 1e-5);
  }
}

TEST_CASE("SCA contract: monotone, feasible iterates, above the SDR") {
  NetworkConfig c = make_config(2, 2, 2, 2.0, 0.5);
  c.csi_error_variance = 0.02 * 0.02 * 2 * path_loss_gain(0.4);
  int runs = 0;
  for (std::uint64_t t = 0; t < 3; ++t)
    for (Scheme s : {Scheme::ldm, Scheme::tdm}) {
      ProblemData p = drawn(c, s, t);
      SdrSolution sdr = solve_sdr(p);
      ScaOutcome o = run_sca(p, sdr);
      if (!o.feasible()) continue;
      ++runs;
      CHECK(non_increasing(o.state.objective_history));
      CHECK(o.state.all_iterates_feasible);
      CHECK(check_tightened(p, o.state.iterate).feasible());
      double f = o.state.iterate.total_power();
      CHECK(sdr.objective_w <= f + 1e-6 * (1 + f));
      CHECK(o.state.trace.size() == o.state.objective_history.size());
    }
  CHECK(runs >= 3);
}

TEST_CASE("converged point is a fixed point") {
  NetworkConfig c = make_config(2, 1, 2, 1.0, 0.5);
  ProblemData p = drawn(c, Scheme::ldm, 2);
  ScaParams prm;
  prm.rel_tol = 1e-9;
  prm.max_outer_iters = 200;
  ScaOutcome o = run_sca(p, solve_sdr(p), prm);
  REQUIRE(o.feasible());
  ScaSubproblem sp = build_subproblem(p, o.state.iterate);
  conic::SolveResult r = conic::solve(sp.program, {1e-9, 100});
  REQUIRE(r.optimal());
  double f = o.state.iterate.total_power();
  CHECK(extract_beamformers(p, sp.layout, r.primal).total_power() == Approx(f).epsilon(1e-6));
}

TEST_CASE("LDM with no unicast traffic is the TDM broadcast problem") {
  NetworkConfig c = make_config(2, 2, 2, 1.0, 0.0);
  ChannelDraw d = sample_channels(c, 4);
  ClusterMap cl = build_clusters(c);
  QosTargets t = make_targets(c, Scheme::ldm);
  ProblemData ldm = make_problem(d.csi, cl, t, c.noise_power_w());
  t.scheme = Scheme::tdm;
  t.tdm_fraction = 0.5;
  ProblemData tdm = make_problem(d.csi, cl, t, c.noise_power_w());
  ScaOutcome a = run_sca(ldm, solve_sdr(ldm)), b = run_sca(tdm, solve_sdr(tdm));
  REQUIRE(a.feasible());
  REQUIRE(b.feasible());
  CHECK(a.state.iterate.total_power() == Approx(b.state.iterate.total_power()).epsilon(1e-5));
  CHECK(a.state.aux.beta.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("vanishing broadcast target leaves the unicast problem") {
  NetworkConfig c = make_config(2, 1, 2, 0.0, 1.0);
  ChannelDraw d = sample_channels(c, 6);
  ClusterMap cl = build_clusters(c);
  QosTargets t = make_targets(c, Scheme::ldm);
  ProblemData uni = make_problem(d.csi, cl, t, c.noise_power_w());
  ScaOutcome base = run_sca(uni, solve_sdr(uni));
  REQUIRE(base.feasible());
  t.gamma_broadcast = 1e-6;
  ProblemData tiny = make_problem(d.csi, cl, t, c.noise_power_w());
  ScaOutcome o = run_sca(tiny, solve_sdr(tiny));
  REQUIRE(o.feasible());
  CHECK(o.state.iterate.power_unicast == Approx(base.state.iterate.total_power()).epsilon(1e-3));
  CHECK(o.state.iterate.power_broadcast < 1e-3 * o.state.iterate.power_unicast);
}

TEST_CASE("verify_design") {
  NetworkConfig c = make_config(2, 1, 2, 1.0, 0.5);
  ProblemData p = drawn(c, Scheme::ldm, 0);
  VerifyReport z = verify_design(p, zero_beamformers(p), 10, 1);
  CHECK_FALSE(z.passed);
  CHECK(z.worst_ratio == 0.0);
  CHECK(z.min_sinr_unicast[0] == 0.0);

  ScaOutcome o = run_sca(p, solve_sdr(p));
  REQUIRE(o.feasible());
  VerifyReport v = verify_design(p, o.state.iterate, 10, 1);
  CHECK(v.passed);
  CHECK(v.tightened_ok);

  c.csi_error_variance = 0.05 * 0.05 * 2 * path_loss_gain(0.4);
  for (Scheme s : {Scheme::ldm, Scheme::tdm}) {
    ProblemData q = drawn(c, s, 1);
    ScaOutcome r = run_sca(q, solve_sdr(q));
    REQUIRE(r.feasible());
    VerifyReport rep = verify_design(q, r.state.iterate, 1000, 9);
    CHECK(rep.passed);
    // sampled SINRs never fall under what the tightened bounds guarantee
    Auxiliaries a = compute_auxiliaries(q, r.state.iterate);
    for (int u = 0; u < 2; ++u) {
      double interf = 1;
      for (int v2 = 0; v2 < 2; ++v2)
        if (v2 != u) interf += a.beta(u, v2) * a.beta(u, v2);
      CHECK(rep.min_sinr_unicast[u] >= a.t_unicast(u) * a.t_unicast(u) / interf * (1 - 1e-9));
    }
  }
}

TEST_CASE("tightened check flags violations") {
  ProblemData p = scalar(Scheme::ldm, 1.0, 1.0, 1.0);
  BeamformerSet w = zero_beamformers(p);
  ConstraintCheck z = check_tightened(p, w);
  CHECK_FALSE(z.feasible());
  CHECK(z.max_slack > 0);
  w.w_unicast[0] << 1.1;
  w.w_broadcast << std::sqrt(1.1 * 1.1 + 1) * 1.01;
  ConstraintCheck ok = check_tightened(p, w);
  CHECK(ok.feasible());
  CHECK(ok.max_slack <= 0);
}

TEST_CASE("step size is validated and smaller steps stay monotone") {
  NetworkConfig c = make_config(2, 1, 2, 1.0, 0.5);
  ProblemData p = drawn(c, Scheme::ldm, 5);
  SdrSolution sdr = solve_sdr(p);
  ScaParams prm;
  prm.step_mu = 0.0;
  InitResult init = initialize_from_sdr(sdr, p, prm);
  REQUIRE(init.feasible);
  CHECK_THROWS(run_sca_from(p, init.set, prm));
  prm.step_mu = 0.5;
  ScaOutcome o = run_sca_from(p, init.set, prm);
  REQUIRE(o.feasible());
  CHECK(non_increasing(o.state.objective_history));
  CHECK(o.state.all_iterates_feasible);
}

TEST_CASE("infeasible SDR propagates") {
  SdrSolution bad;
  bad.status = conic::SolveStatus::infeasible;
  ProblemData p = scalar(Scheme::ldm, 1.0, 1.0, 1.0);
  CHECK(run_sca(p, bad).status == ScaStatus::sdr_infeasible);
  CHECK(run_sca_from(p, zero_beamformers(p)).status == ScaStatus::init_infeasible);
}

TEST_CASE("trace file") {
  auto path = std::filesystem::temp_directory_path() / "beamnet_sca_trace.csv";
  write_sca_trace(path.string(), {{0, 2.5, -0.1}, {1, 2.0, -1e-9}});
  std::ifstream in(path);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == "iter,objective_w,max_constraint_slack");
  CHECK(row == "0,2.5,-0.1");
  std::filesystem::remove(path);
}
