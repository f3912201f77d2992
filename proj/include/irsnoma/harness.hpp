// SPDX-License-Identifier: Apache-2.0
//
// irsnoma  C++ toolkit for IRS-assisted mmWave NOMA downlink simulation
// Copyright (C) 2026 the irsnoma contributors
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
//
// Configuration, Monte-Carlo campaign driver and CSV/JSON emitters. Every
// number a campaign produces is a pure function of (config, master seed).

#ifndef irsnoma_harness_H
#define irsnoma_harness_H

#include <optional>
#include <string>
#include <vector>

#include "irsnoma/baselines.hpp"
#include "irsnoma/optimizer.hpp"

namespace irsnoma
{

struct NoiseSpec
{
    // Either a spectral density integrated over the bandwidth or a literal
    // total power; configuring both is rejected.
    bool literal = false;
    double psd_dbm_per_hz = -174.0;
    double sigma2_dbm = -94.0;
};

struct ScenarioConfig
{
    // geometry [m]
    Eigen::Vector3d bs_position{0.0, 0.0, 15.0};
    Eigen::Vector3d irs_position{20.0, 20.0, 15.0};
    Eigen::Vector3d user_center{30.0, 30.0, 0.0};
    double user_radius = 8.0;

    // counts
    int n_tx = 64;
    int l_x = 10;
    int l_z = 10;
    std::vector<int> users_per_cluster{3, 3, 3};
    int n_paths_bs_irs = 3;
    int n_paths_irs_user = 3;
    std::optional<std::vector<std::vector<int>>> cluster_membership;  // explicit lists

    // radio
    double carrier_ghz = 28.0;
    double bandwidth_hz = 100e6;
    NoiseSpec noise;
    double p_max_dbm = 35.0;
    double r_min_bits = 0.01;
    PathLossModel path_loss;

    // algorithm
    ScaConfig sca;  // includes phase_bits and continuous_phases
    bool oma_per_slot_passive = false;

    // campaign
    int n_trials = 20;
    std::uint64_t master_seed = 1;
    int parallel = 1;
    std::string sweep_axis;             // "", "l_irs", "p_max_dbm", "phase_bits", "n_tx"
    std::vector<double> sweep_values;
    std::vector<std::string> schemes{"proposed"};
    bool emit_traces = false;

    double noise_w() const;
    double p_max_w() const;
    double wavelength_m() const;
    ArrayGeometry geometry() const;
    void validate() const;  // throws std::invalid_argument with a field path
};

/// Parses a JSON config; missing fields take defaults, unknown keys are
/// rejected with their path. An empty document means "all defaults".
ScenarioConfig config_from_json(const std::string &text);
ScenarioConfig load_config(const std::string &path);
/// Full echo of the resolved config, including derived quantities such as
/// the total noise power.
std::string config_echo_json(const ScenarioConfig &config);

/// Area-uniform draw over the configured user disk (z = 0 plane).
std::vector<Eigen::Vector3d> place_users(const ScenarioConfig &config, int count, Rng &rng);

/// Deterministic per-trial scenario assembled from the config and the trial
/// substream: user positions, cluster assignment by polar angle around the
/// disk center, and one channel draw.
struct TrialScenario
{
    ArrayGeometry geometry;
    UserLayout layout;
    LinkBudget budget;
    ChannelRealization channels;

    ProblemContext ctx() const { return {geometry, channels, layout, budget}; }
};
TrialScenario make_trial_scenario(const ScenarioConfig &config, std::uint64_t seed);

struct TrialRecord
{
    int trial = 0;
    std::uint64_t seed = 0;
    std::string scheme;
    double sum_rate = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string status;  // "ok" or a failure tag
    IterationTrace trace;
};

struct SweepPoint
{
    std::string axis;
    double value = 0.0;
    std::vector<TrialRecord> trials;
};

struct AggregateRow
{
    std::string axis;
    double value = 0.0;
    std::string scheme;
    double mean_sum_rate = 0.0;
    double stddev = 0.0;
    int n_ok = 0;
    int n_fail = 0;
};

struct CampaignResult
{
    std::vector<SweepPoint> points;
    std::vector<AggregateRow> aggregates() const;
};

/// Runs every (sweep value, trial, scheme) cell. Per-trial channels are
/// shared across schemes so comparisons pair up; failures are recorded and
/// the campaign continues.
CampaignResult run_campaign(const ScenarioConfig &config);

/// Runs one scheme on one prepared trial scenario.
TrialRecord run_scheme(const ScenarioConfig &config, const TrialScenario &scenario,
                       const std::string &scheme, std::uint64_t seed);

/// Writes results.csv, trials.csv, config_echo.json and (optionally)
/// traces/*.csv under out_dir. Data files carry no timestamps; identical
/// (config, seed) pairs reproduce them byte for byte.
void emit_results(const CampaignResult &result, const ScenarioConfig &config,
                  const std::string &out_dir);

// Small statistics helpers used by the harness and the acceptance suite.
double sample_mean(const std::vector<double> &xs);
double sample_stddev(const std::vector<double> &xs);
/// One-sided paired t-test p-value for H1: mean(differences) > 0.
double paired_t_pvalue(const std::vector<double> &differences);
/// Kolmogorov-Smirnov p-value of samples against a CDF given as callable.
double ks_pvalue(std::vector<double> samples, const std::function<double(double)> &cdf);

} // namespace irsnoma

#endif
