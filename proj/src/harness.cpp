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

#include "beamnet/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace beamnet {

std::string to_string(BoundMode b) {
  switch (b) {
    case BoundMode::sdr: return "sdr";
    case BoundMode::sca: return "sca";
    case BoundMode::both: return "both";
  }
  return "unknown";
}

BoundMode bound_from_string(const std::string& s) {
  if (s == "sdr") return BoundMode::sdr;
  if (s == "sca") return BoundMode::sca;
  if (s == "both") return BoundMode::both;
  throw ConfigError("unknown bound '" + s + "' (expected sdr, sca or both)");
}

// ---- trials -------------------------------------------------------------------

namespace {

bool non_increasing(const std::vector<double>& h) {
  for (size_t i = 1; i < h.size(); ++i)
    if (h[i] > h[i - 1] + 1e-7 * std::abs(h[i - 1])) return false;
  return true;
}

std::string outage_tag(const ScaOutcome& o) {
  switch (o.status) {
    case ScaStatus::sdr_infeasible: return "sdr_infeasible";
    case ScaStatus::init_infeasible: return "init_infeasible";
    case ScaStatus::solver_abort: return "solver_abort";
    default: return "";
  }
}

void clear_powers(TrialResult& r) {
  r.lower_bound_w = r.upper_bound_w = r.power_per_bs_dbw = kNaN;
  r.power_broadcast_w = r.power_unicast_w = r.injection_level_db = kNaN;
}

}  // namespace

TrialResult evaluate_trial(const NetworkConfig& config, const ChannelDraw& draw, const QosTargets& targets,
                           int trial_index, const TrialOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  TrialResult r;
  r.trial_index = trial_index;
  r.scheme = targets.scheme;
  if (targets.scheme == Scheme::tdm) r.tdm_fraction_used = targets.tdm_fraction;

  const ProblemData p = make_problem(draw.csi, build_clusters(config), targets, config.noise_power_w());
  SdrOptions sdr_opt = opt.sdr;
  const SdrSolution sdr = solve_sdr(p, sdr_opt);
  r.sdr_feasible = sdr.feasible();
  if (sdr.feasible()) r.lower_bound_w = sdr.objective_w;

  if (opt.bound == BoundMode::sdr) {
    r.feasible = sdr.feasible();
    if (r.feasible) {
      r.power_broadcast_w = sdr.w_broadcast.size() ? sdr.w_broadcast.trace().real() : 0.0;
      double pu = 0.0;
      for (const auto& W : sdr.w_unicast)
        if (W.size()) pu += W.trace().real();
      r.power_unicast_w = pu;
      r.power_per_bs_dbw = watts_to_dbw(sdr.objective_w / config.n_cells);
    } else {
      r.tag = sdr.status == conic::SolveStatus::infeasible ? "sdr_infeasible" : "solver_abort";
    }
  } else {
    const ScaOutcome o = run_sca(p, sdr, opt.sca);
    r.sca_runs = 1;
    r.sca_monotone = non_increasing(o.state.objective_history);
    r.sca_iterates_feasible = o.state.all_iterates_feasible;
    r.feasible = o.feasible();
    r.sca_iterations = o.state.iteration;
    if (r.feasible) {
      r.design = o.state.iterate;
      r.upper_bound_w = o.state.iterate.total_power();
      r.power_broadcast_w = o.state.iterate.power_broadcast;
      r.power_unicast_w = o.state.iterate.power_unicast;
      r.power_per_bs_dbw = watts_to_dbw(r.upper_bound_w / config.n_cells);
    } else {
      r.tag = outage_tag(o);
      if (o.status == ScaStatus::sdr_infeasible && sdr.status != conic::SolveStatus::infeasible)
        r.tag = "solver_abort";
    }
  }
  if (r.feasible && r.power_broadcast_w > 0 && r.power_unicast_w > 0)
    r.injection_level_db = injection_level(r.power_broadcast_w, r.power_unicast_w);
  if (!r.feasible) clear_powers(r);
  if (opt.timing)
    r.solve_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return r;
}

TrialResult run_trial(const NetworkConfig& config, const QosTargets& targets, int trial_index,
                      const TrialOptions& opt) {
  const ChannelDraw draw = sample_channels(config, derive_trial_seed(config.rng_seed, trial_index));
  return evaluate_trial(config, draw, targets, trial_index, opt);
}

FractionSearch optimize_tdm_fraction(const NetworkConfig& config, const ChannelDraw& draw, int trial_index,
                                     const TrialOptions& opt) {
  if (config.tdm_fraction_grid.empty()) throw std::invalid_argument("empty TDM fraction grid");
  const auto start = std::chrono::steady_clock::now();
  FractionSearch s;
  const bool by_upper = opt.bound != BoundMode::sdr;
  double best = std::numeric_limits<double>::infinity();
  bool monotone = true, iterates_ok = true;
  int runs = 0, sdr_feasible = 0;
  for (double f : config.tdm_fraction_grid) {
    TrialOptions o = opt;
    o.timing = false;
    TrialResult r = evaluate_trial(config, draw, make_targets(config, Scheme::tdm, f), trial_index, o);
    monotone = monotone && r.sca_monotone;
    iterates_ok = iterates_ok && r.sca_iterates_feasible;
    runs += r.sca_runs;
    sdr_feasible += r.sdr_feasible ? 1 : 0;
    if (r.feasible) {
      double v = by_upper ? r.upper_bound_w : r.lower_bound_w;
      if (v < best) {
        best = v;
        s.best_fraction = f;
        s.best = r;
      }
    }
    s.evaluated.push_back(std::move(r));
  }
  if (std::isnan(s.best_fraction)) {
    // outage at every fraction; report the first failure reason seen
    s.best = s.evaluated.front();
    s.best.tdm_fraction_used = kNaN;
    s.best.sdr_feasible = sdr_feasible > 0;
    for (const auto& r : s.evaluated)
      if (r.tag != "sdr_infeasible") {
        s.best.tag = r.tag;
        break;
      }
  }
  s.best.sca_monotone = monotone;
  s.best.sca_iterates_feasible = iterates_ok;
  s.best.sca_runs = runs;
  if (opt.timing)
    s.best.solve_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return s;
}

FractionSearch optimize_tdm_fraction(const NetworkConfig& config, int trial_index, const TrialOptions& opt) {
  const ChannelDraw draw = sample_channels(config, derive_trial_seed(config.rng_seed, trial_index));
  return optimize_tdm_fraction(config, draw, trial_index, opt);
}

// ---- statistics ---------------------------------------------------------------

double percentile(const std::vector<double>& values_w, int outages, double p) {
  if (!(p > 0 && p < 100)) throw std::domain_error("percentile must lie in (0,100)");
  const size_t n = values_w.size() + static_cast<size_t>(std::max(outages, 0));
  if (n == 0) throw std::invalid_argument("percentile of an empty sample");
  std::vector<double> v = values_w;
  std::sort(v.begin(), v.end());
  size_t rank = static_cast<size_t>(std::ceil(p / 100.0 * static_cast<double>(n) - 1e-9));
  rank = std::clamp<size_t>(rank, 1, n);
  if (rank > v.size()) return std::numeric_limits<double>::infinity();
  return watts_to_dbw(v[rank - 1]);
}

std::vector<CdfPoint> empirical_cdf(const std::vector<double>& values_w, int outages) {
  std::vector<double> v = values_w;
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size() + std::max(outages, 0));
  std::vector<CdfPoint> out;
  for (size_t i = 0; i < v.size(); ++i) out.push_back({watts_to_dbw(v[i]), static_cast<double>(i + 1) / n});
  return out;
}

const SchemeSummary* CampaignSummary::find(Scheme s) const {
  for (const auto& x : schemes)
    if (x.scheme == s) return &x;
  return nullptr;
}

CampaignSummary summarize(const std::vector<TrialResult>& trials, const std::vector<Scheme>& schemes, int n_trials) {
  CampaignSummary sum;
  sum.n_trials = n_trials;
  for (Scheme s : schemes) {
    SchemeSummary ss;
    ss.scheme = s;
    std::vector<double> per_bs;
    double il = 0.0;
    int il_n = 0;
    for (const auto& t : trials) {
      if (t.scheme != s) continue;
      ++ss.n_trials;
      if (!t.sdr_feasible) ++ss.sdr_outages;
      if (!t.feasible) {
        ++ss.outages;
        continue;
      }
      per_bs.push_back(dbw_to_watts(t.power_per_bs_dbw));
      if (std::isfinite(t.injection_level_db)) {
        il += t.injection_level_db;
        ++il_n;
      }
    }
    if (ss.n_trials > 0) {
      ss.outage_probability = static_cast<double>(ss.outages) / ss.n_trials;
      ss.sdr_outage_probability = static_cast<double>(ss.sdr_outages) / ss.n_trials;
      ss.percentile_95_dbw = percentile(per_bs, ss.outages, 95.0);
    }
    if (il_n) ss.mean_injection_level_db = il / il_n;
    ss.cdf = empirical_cdf(per_bs, ss.outages);
    sum.schemes.push_back(std::move(ss));
  }
  return sum;
}

// ---- campaign -----------------------------------------------------------------

Campaign run_campaign(const NetworkConfig& config_in, const std::vector<Scheme>& schemes, int n_trials,
                      const CampaignOptions& opt) {
  if (n_trials < 1) throw std::invalid_argument("need at least one trial");
  if (schemes.empty()) throw std::invalid_argument("no scheme requested");
  NetworkConfig config = config_in;
  validate(config);
  Campaign c;
  c.config = config;
  const size_t per_trial = schemes.size();
  c.trials.resize(static_cast<size_t>(n_trials) * per_trial);

  std::atomic<int> next{0};
  std::mutex err_mu;
  std::exception_ptr error;
  auto worker = [&] {
    for (;;) {
      const int t = next.fetch_add(1);
      if (t >= n_trials) return;
      try {
        const ChannelDraw draw = sample_channels(config, derive_trial_seed(config.rng_seed, t));
        for (size_t k = 0; k < per_trial; ++k) {
          TrialResult r = schemes[k] == Scheme::ldm
                              ? evaluate_trial(config, draw, make_targets(config, Scheme::ldm), t, opt.trial)
                              : optimize_tdm_fraction(config, draw, t, opt.trial).best;
          c.trials[static_cast<size_t>(t) * per_trial + k] = std::move(r);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!error) error = std::current_exception();
        next = n_trials;
      }
    }
  };
  const int workers = std::clamp(opt.workers, 1, n_trials);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);

  c.summary = summarize(c.trials, schemes, n_trials);

  if (opt.distributed) {
    for (const auto& t : c.trials) {
      if (t.scheme != Scheme::ldm || !t.feasible) continue;
      const ChannelDraw draw = sample_channels(config, derive_trial_seed(config.rng_seed, t.trial_index));
      const ProblemData p =
          make_problem(draw.csi, build_clusters(config), make_targets(config, Scheme::ldm), config.noise_power_w());
      c.distributed = run_dual_ascent(p, t.design, opt.dist);
      c.distributed_trial = t.trial_index;
      break;
    }
  }
  return c;
}

// ---- output -------------------------------------------------------------------

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

nlohmann::json json_num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return nullptr;
}

}  // namespace

void write_trials_csv(const std::filesystem::path& path, const std::vector<TrialResult>& trials, bool timing) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << "trial,scheme,fraction,feasible,lower_dbw,upper_dbw,per_bs_dbw,p_broadcast_w,p_unicast_w,il_db,sca_iters,"
       "time_ms\n";
  for (const auto& t : trials) {
    f << t.trial_index << ',' << to_string(t.scheme) << ',' << num(t.tdm_fraction_used) << ','
      << (t.feasible ? 1 : 0) << ',' << num(std::isnan(t.lower_bound_w) ? kNaN : watts_to_dbw(t.lower_bound_w))
      << ',' << num(std::isnan(t.upper_bound_w) ? kNaN : watts_to_dbw(t.upper_bound_w)) << ','
      << num(t.power_per_bs_dbw) << ',' << num(t.power_broadcast_w) << ',' << num(t.power_unicast_w) << ','
      << num(t.injection_level_db) << ',' << t.sca_iterations << ',' << (timing ? num(t.solve_time_ms) : "")
      << '\n';
  }
}

void write_cdf_csv(const std::filesystem::path& path, const CampaignSummary& s) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << "scheme,power_dbw,cum_prob\n";
  for (const auto& ss : s.schemes)
    for (const auto& pt : ss.cdf) f << to_string(ss.scheme) << ',' << num(pt.power_dbw) << ',' << num(pt.cum_prob) << '\n';
}

nlohmann::json summary_to_json(const CampaignSummary& s) {
  nlohmann::json j;
  j["n_trials"] = s.n_trials;
  nlohmann::json schemes = nlohmann::json::object();
  for (const auto& ss : s.schemes) {
    nlohmann::json x;
    x["trials"] = ss.n_trials;
    x["outages"] = ss.outages;
    x["outage_probability"] = ss.outage_probability;
    x["sdr_outage_probability"] = ss.sdr_outage_probability;
    x["percentile_95_dbw"] = json_num(ss.percentile_95_dbw);
    x["mean_injection_level_db"] = json_num(ss.mean_injection_level_db);
    nlohmann::json cdf = nlohmann::json::array();
    for (const auto& pt : ss.cdf) cdf.push_back({pt.power_dbw, pt.cum_prob});
    x["cdf"] = cdf;
    schemes[to_string(ss.scheme)] = x;
  }
  j["schemes"] = schemes;
  return j;
}

void write_summary_json(const std::filesystem::path& path, const Campaign& c) {
  nlohmann::json j = summary_to_json(c.summary);
  j["config"] = to_json(c.config);
  if (c.distributed) {
    const auto& d = *c.distributed;
    j["distributed"] = {{"trial", c.distributed_trial},
                        {"status", to_string(d.status)},
                        {"rounds", d.rounds},
                        {"delta", json_num(d.delta)},
                        {"reference_objective_w", json_num(d.reference_objective)},
                        {"diagnostic", d.diagnostic}};
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << j.dump(2) << '\n';
}

void write_campaign(const std::filesystem::path& dir, const Campaign& c, bool timing) {
  std::filesystem::create_directories(dir);
  write_trials_csv(dir / "trials.csv", c.trials, timing);
  write_summary_json(dir / "summary.json", c);
  write_cdf_csv(dir / "cdf.csv", c.summary);
  if (c.distributed) write_dual_trace((dir / "dual_trace.csv").string(), c.distributed->trace);
}

double csi_variance_for_ratio(const NetworkConfig& config, double ratio) {
  return ratio * ratio * config.antennas_per_bs * path_loss_gain(config.user_distance_m / 1000.0);
}

}  // namespace beamnet
