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

// beamnet: Monte Carlo campaigns for joint unicast/broadcast beamforming.
//
//   beamnet run --config net.json --scheme both --trials 200 --out results
//   beamnet run --preset fig_cells --trials 20 --out results
//   beamnet presets

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "beamnet/harness.hpp"

using namespace beamnet;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

// min x s.t. x >= ||(1, 1)||; the backend is usable if this comes out right.
bool solver_available() {
  try {
    conic::ProgramBuilder b;
    int x = b.add_variables(1);
    b.add_second_order({conic::LinExpr::var(x), conic::LinExpr(1.0), conic::LinExpr(1.0)});
    b.set_objective(conic::LinExpr::var(x));
    conic::SolveResult r = conic::solve(b.build());
    return r.optimal() && std::abs(r.objective_value - std::sqrt(2.0)) < 1e-6;
  } catch (...) {
    return false;
  }
}

std::vector<Scheme> parse_schemes(const std::string& s) {
  if (s == "both") return {Scheme::ldm, Scheme::tdm};
  return {scheme_from_string(s)};
}

void report(const std::string& label, const Campaign& c) {
  std::printf("%s", label.empty() ? "" : (label + ":\n").c_str());
  for (const auto& s : c.summary.schemes) {
    std::printf("  %-3s trials %d  outage %.3f  p95 %s dBW", to_string(s.scheme).c_str(), s.n_trials,
                s.outage_probability,
                std::isfinite(s.percentile_95_dbw) ? std::to_string(s.percentile_95_dbw).c_str() : "inf");
    if (std::isfinite(s.mean_injection_level_db)) std::printf("  IL %.2f dB", s.mean_injection_level_db);
    std::printf("\n");
  }
  if (c.distributed)
    std::printf("  distributed: %s after %d rounds, delta %.3e\n", to_string(c.distributed->status).c_str(),
                c.distributed->rounds, c.distributed->delta);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint unicast/broadcast beamforming under TDM and LDM"};
  app.require_subcommand(1);

  CLI::App* run = app.add_subcommand("run", "run a Monte Carlo campaign");
  std::string config_path, preset, scheme = "both", bound = "both", out = "beamnet_out";
  std::optional<int> trials;
  std::optional<std::uint64_t> seed;
  std::optional<double> solver_tol;
  int workers = 1;
  bool distributed = false, timing = false;
  auto* cfg_opt = run->add_option("--config", config_path, "network JSON file")->check(CLI::ExistingFile);
  auto* preset_opt = run->add_option("--preset", preset, "named experiment preset");
  cfg_opt->excludes(preset_opt);
  run->add_option("--scheme", scheme, "tdm, ldm or both")->check(CLI::IsMember({"tdm", "ldm", "both"}));
  run->add_option("--trials", trials, "number of channel draws")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "overrides rng_seed");
  run->add_option("--bound", bound, "sdr, sca or both")->check(CLI::IsMember({"sdr", "sca", "both"}));
  run->add_option("--out", out, "output directory");
  run->add_flag("--distributed", distributed, "also run the dual-decomposition solver");
  run->add_option("--workers", workers, "parallel trials")->check(CLI::PositiveNumber);
  run->add_option("--solver-tol", solver_tol, "conic solver tolerance")->check(CLI::PositiveNumber);
  run->add_flag("--timing", timing, "record wall time per trial (not reproducible)");

  app.add_subcommand("presets", "list experiment presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (app.got_subcommand("presets")) {
    for (const auto& name : preset_names()) {
      Preset p = make_preset(name);
      std::printf("%-16s %zu point(s)  %s\n", name.c_str(), p.points.size(), p.description.c_str());
    }
    return 0;
  }

  std::vector<SweepPoint> points;
  std::vector<Scheme> schemes;
  int n_trials = 200;
  bool want_distributed = distributed;
  try {
    if (config_path.empty() && preset.empty()) throw ConfigError("either --config or --preset is required");
    if (!preset.empty()) {
      Preset p = make_preset(preset);
      points = p.points;
      schemes = p.schemes;
      n_trials = p.default_trials;
      want_distributed = want_distributed || p.distributed;
      if (run->count("--scheme")) schemes = parse_schemes(scheme);
    } else {
      points.push_back({"", load_config(config_path)});
      schemes = parse_schemes(scheme);
    }
    if (trials) n_trials = *trials;
    for (auto& pt : points) {
      if (seed) pt.config.rng_seed = *seed;
      validate(pt.config);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  if (!solver_available()) {
    std::cerr << "conic solver backend failed its self-check\n";
    return kExitSolver;
  }

  CampaignOptions opt;
  opt.workers = workers;
  opt.distributed = want_distributed;
  opt.trial.bound = bound_from_string(bound);
  opt.trial.timing = timing;
  if (solver_tol) {
    opt.trial.sdr.tol = *solver_tol;
    opt.trial.sca.solver_tol = *solver_tol;
  }
  if (want_distributed && opt.trial.bound == BoundMode::sdr) {
    std::cerr << "config error: --distributed needs SCA designs (--bound sca or both)\n";
    return kExitConfig;
  }
  if (want_distributed && std::find(schemes.begin(), schemes.end(), Scheme::ldm) == schemes.end()) {
    std::cerr << "config error: --distributed works on LDM trials\n";
    return kExitConfig;
  }

  try {
    for (const auto& pt : points) {
      Campaign c = run_campaign(pt.config, schemes, n_trials, opt);
      std::filesystem::path dir = pt.label.empty() ? std::filesystem::path(out) : std::filesystem::path(out) / pt.label;
      write_campaign(dir, c, timing);
      report(pt.label, c);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
