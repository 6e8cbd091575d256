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

#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "beamnet/channel.hpp"
#include "beamnet/distopt.hpp"
#include "beamnet/scenario.hpp"
#include "beamnet/sca.hpp"
#include "beamnet/sdr.hpp"

namespace beamnet {

enum class BoundMode { sdr, sca, both };
std::string to_string(BoundMode b);
BoundMode bound_from_string(const std::string& s);

struct TrialOptions {
  BoundMode bound = BoundMode::both;
  SdrOptions sdr;
  ScaParams sca;
  bool timing = false;  // time_ms stays empty otherwise, keeping CSVs reproducible
};

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct TrialResult {
  int trial_index = 0;
  Scheme scheme = Scheme::ldm;
  bool feasible = false;
  // why an infeasible trial failed: sdr_infeasible, init_infeasible,
  // solver_abort; empty when feasible
  std::string tag;
  bool sdr_feasible = false;
  double lower_bound_w = kNaN;
  double upper_bound_w = kNaN;
  double power_per_bs_dbw = kNaN;
  double power_broadcast_w = kNaN;
  double power_unicast_w = kNaN;
  double injection_level_db = kNaN;
  double tdm_fraction_used = kNaN;  // NaN for LDM
  int sca_iterations = 0;
  double solve_time_ms = kNaN;
  // SCA contract over every run behind this result (all fractions for TDM)
  bool sca_monotone = true;
  bool sca_iterates_feasible = true;
  int sca_runs = 0;
  BeamformerSet design;  // SCA design when feasible
};

// Solves one draw for fixed targets.
TrialResult evaluate_trial(const NetworkConfig& config, const ChannelDraw& draw, const QosTargets& targets,
                           int trial_index, const TrialOptions& options = {});

// Samples the trial's channels from the config seed, then evaluates.
TrialResult run_trial(const NetworkConfig& config, const QosTargets& targets, int trial_index,
                      const TrialOptions& options = {});

struct FractionSearch {
  double best_fraction = kNaN;  // NaN when every fraction is an outage
  TrialResult best;
  std::vector<TrialResult> evaluated;  // one per grid fraction
};

// Line search over config.tdm_fraction_grid (targets from rate_to_sinr_tdm);
// picks the smallest upper bound (lower bound with BoundMode::sdr).
FractionSearch optimize_tdm_fraction(const NetworkConfig& config, const ChannelDraw& draw, int trial_index,
                                     const TrialOptions& options = {});
FractionSearch optimize_tdm_fraction(const NetworkConfig& config, int trial_index, const TrialOptions& options = {});

// Nearest-rank percentile (rank ceil(p n / 100)) of the improper sample in
// which every outage counts as +infinity. Returns dBW, or +infinity when
// the rank falls into the outage mass.
double percentile(const std::vector<double>& values_w, int outages, double p);

struct CdfPoint {
  double power_dbw;
  double cum_prob;
};

// Improper empirical CDF: steps of 1/(n + outages); ends at 1 - outage.
std::vector<CdfPoint> empirical_cdf(const std::vector<double>& values_w, int outages);

struct SchemeSummary {
  Scheme scheme = Scheme::ldm;
  int n_trials = 0;
  int outages = 0;
  int sdr_outages = 0;
  double outage_probability = 0.0;
  double sdr_outage_probability = 0.0;
  double percentile_95_dbw = kNaN;  // +inf sentinel when in the outage mass
  double mean_injection_level_db = kNaN;
  std::vector<CdfPoint> cdf;  // power per BS
};

struct CampaignSummary {
  int n_trials = 0;
  std::vector<SchemeSummary> schemes;
  const SchemeSummary* find(Scheme s) const;
};

struct CampaignOptions {
  TrialOptions trial;
  int workers = 1;
  // Re-solve the last LDM SCA subproblem of the first feasible trial with
  // the distributed solver and keep its trace.
  bool distributed = false;
  DistParams dist;
};

struct Campaign {
  NetworkConfig config;
  std::vector<TrialResult> trials;  // trial-major, schemes in request order
  CampaignSummary summary;
  std::optional<DualAscentResult> distributed;
  int distributed_trial = -1;
};

Campaign run_campaign(const NetworkConfig& config, const std::vector<Scheme>& schemes, int n_trials,
                      const CampaignOptions& options = {});
CampaignSummary summarize(const std::vector<TrialResult>& trials, const std::vector<Scheme>& schemes, int n_trials);

// Output files (fixed schemas).
void write_trials_csv(const std::filesystem::path& path, const std::vector<TrialResult>& trials, bool timing);
void write_cdf_csv(const std::filesystem::path& path, const CampaignSummary& summary);
nlohmann::json summary_to_json(const CampaignSummary& summary);
void write_summary_json(const std::filesystem::path& path, const Campaign& campaign);
// Writes trials.csv, summary.json, cdf.csv and (if present) dual_trace.csv.
void write_campaign(const std::filesystem::path& dir, const Campaign& campaign, bool timing);

// Experiment presets: named parameter sweeps.
struct SweepPoint {
  std::string label;  // used as the output subdirectory
  NetworkConfig config;
};

struct Preset {
  std::string name;
  std::string description;
  std::vector<Scheme> schemes;
  int default_trials = 200;
  bool distributed = false;
  std::vector<SweepPoint> points;
};

std::vector<std::string> preset_names();
Preset make_preset(const std::string& name);  // throws ConfigError if unknown

// eps^2 with ||e|| about `ratio` times the RMS norm of a serving link at
// the configured user distance.
double csi_variance_for_ratio(const NetworkConfig& config, double ratio);

}  // namespace beamnet
