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

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "beamnet/harness.hpp"

using namespace beamnet;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// 1. matched-filter oracle on a single unicast user
Outcome oracle() {
  const auto t0 = Clock::now();
  double worst_lo = 0, worst_up = 0;
  for (int seed = 1; seed <= 50; ++seed) {
    NetworkConfig c = make_config(1, 1, 3, 0.0, 1.0);
    c.rng_seed = seed;
    QosTargets t = make_targets(c, Scheme::ldm);
    TrialResult r = run_trial(c, t, 0);
    if (!r.feasible) return {false, fmt("seed %d infeasible", seed)};
    ChannelDraw d = sample_channels(c, derive_trial_seed(c.rng_seed, 0));
    const double want = t.gamma_unicast[0] * c.noise_power_w() / d.truth.link(0, 0).squaredNorm();
    worst_lo = std::max(worst_lo, rel(r.lower_bound_w, want));
    worst_up = std::max(worst_up, rel(r.upper_bound_w, want));
  }
  const double s = seconds_since(t0);
  return {worst_lo <= 1e-4 && worst_up <= 1e-4 && s < 10,
          fmt("50 seeds, max rel err lower %.2e upper %.2e, %.1f s", worst_lo, worst_up, s)};
}

struct DeskCampaign {
  Campaign ldm, tdm;
  double ldm_seconds = 0, tdm_seconds = 0;
};

DeskCampaign desk_campaign() {
  NetworkConfig c = make_config(3, 2, 2, 3.0, 0.5);
  DeskCampaign out;
  auto t0 = Clock::now();
  out.ldm = run_campaign(c, {Scheme::ldm}, 200);
  out.ldm_seconds = seconds_since(t0);
  t0 = Clock::now();
  out.tdm = run_campaign(c, {Scheme::tdm}, 200);  // 19 fractions per trial
  out.tdm_seconds = seconds_since(t0);
  return out;
}

// 2. SDR <= SCA everywhere, gap <= 0.5 dB on 90% of the feasible trials
Outcome sandwich(const DeskCampaign& d) {
  int feasible = 0, close = 0, violations = 0;
  double worst_gap = 0;
  std::vector<TrialResult> all = d.ldm.trials;
  all.insert(all.end(), d.tdm.trials.begin(), d.tdm.trials.end());
  for (const auto& t : all) {
    if (!t.feasible) continue;
    ++feasible;
    if (t.lower_bound_w > t.upper_bound_w + 1e-6 * (1 + t.upper_bound_w)) ++violations;
    const double gap = 10 * std::log10(t.upper_bound_w / t.lower_bound_w);
    worst_gap = std::max(worst_gap, gap);
    close += gap <= 0.5;
  }
  const double share = feasible ? static_cast<double>(close) / feasible : 0.0;
  // the time limit applies to the 200-trial LDM campaign; the TDM search
  // runs 19 fractions per trial on top
  return {feasible > 0 && violations == 0 && share >= 0.9 && d.ldm_seconds < 600,
          fmt("LDM+TDM: %d feasible results, %d sandwich violations, gap <= 0.5 dB on %.1f%% (max %.2f dB); "
              "LDM %.0f s, TDM search %.0f s",
              feasible, violations, 100 * share, worst_gap, d.ldm_seconds, d.tdm_seconds)};
}

// 3. LDM beats best-fraction TDM by 3 dB at the 95th percentile
Outcome ldm_vs_tdm(const DeskCampaign& d) {
  const SchemeSummary* l = d.ldm.summary.find(Scheme::ldm);
  const SchemeSummary* t = d.tdm.summary.find(Scheme::tdm);
  const double margin = t->percentile_95_dbw - l->percentile_95_dbw;
  const bool pass = std::isfinite(l->percentile_95_dbw) && margin >= 3.0 &&
                    l->outage_probability <= t->outage_probability;
  return {pass, fmt("p95 LDM %.2f dBW, TDM %.2f dBW (margin %.2f dB); outage LDM %.3f, TDM %.3f",
                    l->percentile_95_dbw, t->percentile_95_dbw, margin, l->outage_probability, t->outage_probability)};
}

// 4. monotone objective and tightened-feasible iterates on every SCA run
Outcome sca_contract(const DeskCampaign& d, const std::vector<TrialResult>& robust) {
  int runs = 0, bad_mono = 0, bad_feas = 0;
  auto scan = [&](const std::vector<TrialResult>& ts) {
    for (const auto& t : ts) {
      runs += t.sca_runs;
      bad_mono += !t.sca_monotone;
      bad_feas += !t.sca_iterates_feasible;
    }
  };
  scan(d.ldm.trials);
  scan(d.tdm.trials);
  scan(robust);
  return {runs > 0 && bad_mono == 0 && bad_feas == 0,
          fmt("%d SCA runs, %d non-monotone, %d with an infeasible iterate", runs, bad_mono, bad_feas)};
}

// 5. robust designs survive 1000 boundary errors per user
Outcome robust_feasibility(std::vector<TrialResult>& trials_out) {
  NetworkConfig c = make_config(3, 1, 3, 1.0, 1.0);
  c.csi_error_variance = csi_variance_for_ratio(c, 0.1);
  const ClusterMap cl = build_clusters(c);
  int feasible = 0, passed = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (int t = 0; t < 20; ++t) {
    const ChannelDraw d = sample_channels(c, derive_trial_seed(c.rng_seed, t));
    const QosTargets q = make_targets(c, Scheme::ldm);
    TrialResult r = evaluate_trial(c, d, q, t);
    if (r.feasible) {
      ++feasible;
      const ProblemData p = make_problem(d.csi, cl, q, c.noise_power_w());
      VerifyReport v = verify_design(p, r.design, 1000, 1000 + t);
      passed += v.passed && v.worst_ratio >= 1 - 1e-6;
      worst = std::min(worst, v.worst_ratio);
    }
    trials_out.push_back(std::move(r));
  }
  return {feasible > 0 && passed == feasible,
          fmt("N=3 K=1 M=3, ||e|| ratio 0.1: %d of 20 trials feasible, %d passed, min SINR/target %.8f", feasible,
              passed, feasible ? worst : 0.0)};
}

// 6. direct SDR equals the S-procedure path under perfect CSI
Outcome s_procedure() {
  NetworkConfig c = make_config(2, 2, 2, 2.0, 0.5);
  const ClusterMap cl = build_clusters(c);
  double worst = 0;
  int compared = 0;
  for (int t = 0; t < 20; ++t) {
    const ChannelDraw d = sample_channels(c, derive_trial_seed(7, t));
    const Scheme s = t % 2 ? Scheme::tdm : Scheme::ldm;
    const ProblemData p = make_problem(d.csi, cl, make_targets(c, s, 0.5), c.noise_power_w());
    SdrOptions direct, lmi;
    direct.path = SdrPath::direct;
    lmi.path = SdrPath::s_procedure;
    direct.tol = lmi.tol = 1e-10;
    SdrSolution a = solve_sdr(p, direct), b = solve_sdr(p, lmi);
    if (a.feasible() != b.feasible()) return {false, fmt("instance %d: feasibility differs", t)};
    if (!a.feasible()) continue;
    ++compared;
    worst = std::max(worst, rel(b.objective_w, a.objective_w));
  }
  return {compared > 0 && worst <= 1e-6, fmt("%d of 20 instances feasible, max rel diff %.2e", compared, worst)};
}

struct LdmInstance {
  ProblemData p;
  BeamformerSet point;
};

LdmInstance ldm_instance(std::uint64_t seed) {
  NetworkConfig c = make_config(3, 2, 2, 3.0, 0.5);
  const ChannelDraw d = sample_channels(c, derive_trial_seed(seed, 1));
  LdmInstance in{make_problem(d.csi, build_clusters(c), make_targets(c, Scheme::ldm), c.noise_power_w()), {}};
  ScaOutcome o = run_sca(in.p, solve_sdr(in.p));
  if (!o.init.feasible) throw std::runtime_error("no feasible SCA start");
  in.point = o.init.set;
  return in;
}

// 7. dual ascent reaches the centralized subproblem optimum from local data
Outcome distributed() {
  const auto t0 = Clock::now();
  LdmInstance in = ldm_instance(1);
  DualAscentResult r = run_dual_ascent(in.p, in.point);
  std::string why;
  const bool local = verify_locality(r.bus, r.access_log, in.p.clusters, &why);
  const double s = seconds_since(t0);
  return {r.status == DualStatus::converged && r.delta <= 1e-3 && r.rounds <= 2000 && local && s < 300,
          fmt("%s after %d rounds, delta %.2e, p* %.4g W, locality %s, %.1f s", to_string(r.status).c_str(), r.rounds,
              r.delta, r.reference_objective, local ? "ok" : why.c_str(), s)};
}

// 8. closed-form dual gradients against central differences
Outcome gradients() {
  LdmInstance in = ldm_instance(1);
  const Linearization lin = make_linearization(in.p, in.point);
  const int users = in.p.num_users();
  const double h = 1e-4;
  Rng rng(3);
  double worst = 0;
  for (int k = 0; k < 10; ++k) {
    Vector x = DualVars::filled(users, 0.0).flatten();
    for (int i = 0; i < x.size(); ++i) x(i) = 0.5 + 1.5 * rng.uniform();
    const DualEvaluation ev = dual_function(in.p, DualVars::unflatten(x, users), lin);
    const Vector g = dual_gradients(in.p, ev.primal, lin).flatten();
    for (int i = 0; i < x.size(); ++i) {
      Vector xp = x, xm = x;
      xp(i) += h;
      xm(i) -= h;
      const double fd = (dual_function(in.p, DualVars::unflatten(xp, users), lin).value -
                         dual_function(in.p, DualVars::unflatten(xm, users), lin).value) /
                        (2 * h);
      worst = std::max(worst, std::abs(fd - g(i)) / std::max(1.0, std::abs(g(i))));
    }
  }
  return {worst <= 1e-5, fmt("10 points x %d multipliers, max rel err %.2e", static_cast<int>(DualVars::filled(users, 0).size()), worst)};
}

// 9. power grows with the CSI error radius and the coding gap
Outcome monotone_sweeps() {
  NetworkConfig c = make_config(3, 1, 3, 1.0, 1.0);
  const ChannelDraw d = sample_channels(c, derive_trial_seed(c.rng_seed, 0));
  const ClusterMap cl = build_clusters(c);
  const int dim = c.antennas_per_bs;
  std::vector<double> err_power, gap_power;
  for (double ratio : {0.0, 0.02, 0.04, 0.06, 0.08}) {
    // same estimate, growing error ball
    CsiEstimate e = d.csi;
    e.error_variance = csi_variance_for_ratio(c, ratio);
    if (ratio > 0) {
      e.shape.assign(e.estimated.links.size(), CMatrix::Identity(dim, dim) / e.error_variance);
      e.shape_inv_sqrt.assign(e.estimated.links.size(), std::sqrt(e.error_variance) * CMatrix::Identity(dim, dim));
    }
    const ProblemData p = make_problem(e, cl, make_targets(c, Scheme::ldm), c.noise_power_w());
    ScaOutcome o = run_sca(p, solve_sdr(p));
    err_power.push_back(o.feasible() ? o.state.iterate.total_power() : std::numeric_limits<double>::infinity());
  }
  for (double gap : {0.0, -1.0, -3.0}) {
    NetworkConfig g = c;
    g.snr_gap_broadcast_db = g.snr_gap_unicast_db = gap;
    TrialResult r = evaluate_trial(g, d, make_targets(g, Scheme::ldm), 0);
    gap_power.push_back(r.feasible ? r.upper_bound_w : std::numeric_limits<double>::infinity());
  }
  auto nondecreasing = [](const std::vector<double>& v) {
    for (size_t i = 1; i < v.size(); ++i)
      if (v[i] < v[i - 1] * (1 - 1e-6)) return false;
    return std::isfinite(v.front());
  };
  std::string s = "eps sweep W:";
  for (double v : err_power) s += fmt(" %.4g", v);
  s += "; gap sweep W:";
  for (double v : gap_power) s += fmt(" %.4g", v);
  return {nondecreasing(err_power) && nondecreasing(gap_power), s};
}

// 10. same preset, same seed, same bytes
Outcome determinism() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "beamnet_acceptance_det";
  fs::remove_all(root);
  Preset pre = make_preset("fig_cdf");
  NetworkConfig c = pre.points.front().config;
  c.tdm_fraction_grid = {0.3, 0.5, 0.7};
  std::string bytes[2];
  for (int k = 0; k < 2; ++k) {
    CampaignOptions o;
    o.workers = k + 1;  // worker count must not leak into the output
    Campaign run = run_campaign(c, pre.schemes, 4, o);
    write_campaign(root / std::to_string(k), run, false);
    std::ifstream f(root / std::to_string(k) / "trials.csv", std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    bytes[k] = ss.str();
  }
  fs::remove_all(root);
  return {!bytes[0].empty() && bytes[0] == bytes[1],
          fmt("fig_cdf, 4 trials, 3 fractions: trials.csv %zu bytes, %s", bytes[0].size(),
              bytes[0] == bytes[1] ? "identical" : "different")};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& f) {
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
  };

  report(1, "closed-form oracle", oracle);
  DeskCampaign desk;
  bool have_desk = false;
  try {
    desk = desk_campaign();
    have_desk = true;
  } catch (const std::exception& e) {
    std::printf("desk campaign failed: %s\n", e.what());
  }
  auto need_desk = [&](const std::function<Outcome(const DeskCampaign&)>& f) {
    return [&, f] { return have_desk ? f(desk) : Outcome{false, "desk campaign unavailable"}; };
  };
  report(2, "bound sandwich", need_desk(sandwich));
  report(3, "LDM beats TDM", need_desk(ldm_vs_tdm));
  std::vector<TrialResult> robust;
  Outcome five;
  try {
    five = robust_feasibility(robust);
  } catch (const std::exception& e) {
    five = {false, std::string("exception: ") + e.what()};
  }
  report(4, "SCA contract", need_desk([&](const DeskCampaign& d) { return sca_contract(d, robust); }));
  report(5, "robust feasibility", [&] { return five; });
  report(6, "S-procedure equivalence", s_procedure);
  report(7, "distributed equivalence", distributed);
  report(8, "dual gradients", gradients);
  report(9, "monotone sweeps", monotone_sweeps);
  report(10, "determinism", determinism);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures ? 1 : 0;
}
