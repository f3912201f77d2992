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

#include "irsnoma/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace irsnoma
{

namespace
{

constexpr double kSpeedOfLight = 299792458.0;

void fail_field(const std::string &path, const std::string &why)
{
    throw std::invalid_argument("config: " + path + ": " + why);
}

void reject_unknown(const nlohmann::json &object, const std::string &path,
                    std::initializer_list<const char *> allowed)
{
    for (const auto &[key, value] : object.items())
    {
        bool known = false;
        for (const char *candidate : allowed)
            if (key == candidate)
            {
                known = true;
                break;
            }
        if (!known)
            fail_field(path + "." + key, "unknown key");
    }
}

std::string format_double(double value)
{
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

Eigen::Vector3d parse_vec3(const nlohmann::json &j, const std::string &path)
{
    if (!j.is_array() || j.size() != 3)
        fail_field(path, "expected an array of three numbers");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

} // namespace

double ScenarioConfig::noise_w() const
{
    const double dbm = noise.literal
                           ? noise.sigma2_dbm
                           : noise.psd_dbm_per_hz + 10.0 * std::log10(bandwidth_hz);
    return std::pow(10.0, (dbm - 30.0) / 10.0);
}

double ScenarioConfig::p_max_w() const { return std::pow(10.0, (p_max_dbm - 30.0) / 10.0); }

double ScenarioConfig::wavelength_m() const { return kSpeedOfLight / (carrier_ghz * 1e9); }

ArrayGeometry ScenarioConfig::geometry() const
{
    ArrayGeometry g;
    g.n_tx = n_tx;
    g.l_x = l_x;
    g.l_z = l_z;
    g.carrier_wavelength = wavelength_m();
    g.antenna_spacing = 0.5 * g.carrier_wavelength;
    return g;
}

void ScenarioConfig::validate() const
{
    if (n_tx < 1)
        fail_field("counts.n_tx", "must be >= 1");
    if (l_x < 1 || l_z < 1)
        fail_field("counts.l_x/l_z", "must be >= 1");
    if (users_per_cluster.empty())
        fail_field("counts.users_per_cluster", "need at least one cluster");
    for (int km : users_per_cluster)
        if (km < 1)
            fail_field("counts.users_per_cluster", "every cluster needs at least one user");
    if (n_paths_bs_irs < 1 || n_paths_irs_user < 1)
        fail_field("counts.paths", "path counts must be >= 1");
    if (user_radius <= 0.0)
        fail_field("geometry.user_radius", "must be positive");
    if (carrier_ghz <= 0.0)
        fail_field("radio.carrier_ghz", "must be positive");
    if (bandwidth_hz <= 0.0)
        fail_field("radio.bandwidth_hz", "must be positive");
    if (r_min_bits < 0.0)
        fail_field("radio.r_min_bits", "must be nonnegative");
    if (sca.phase_bits < 1)
        fail_field("radio.phase_bits", "must be >= 1");
    if (sca.outer_tol <= 0.0)
        fail_field("algorithm.outer_tol", "must be positive");
    if (sca.max_outer_iters < 1)
        fail_field("algorithm.max_outer_iters", "must be >= 1");
    if (n_trials < 1)
        fail_field("campaign.trials", "must be >= 1");
    if (parallel < 1)
        fail_field("campaign.parallel", "must be >= 1");
    for (const auto &scheme : schemes)
        if (scheme != "proposed" && scheme != "zf" && scheme != "oma" &&
            scheme != "upper-bound")
            fail_field("campaign.schemes", "unknown scheme '" + scheme + "'");
    if (!sweep_axis.empty() && sweep_axis != "l_irs" && sweep_axis != "p_max_dbm" &&
        sweep_axis != "phase_bits" && sweep_axis != "n_tx")
        fail_field("campaign.sweep.axis", "unknown axis '" + sweep_axis + "'");
    if (!sweep_axis.empty() && sweep_values.empty())
        fail_field("campaign.sweep.values", "sweep axis set but no values");
    if (cluster_membership)
    {
        int total = 0;
        for (const auto &members : *cluster_membership)
            total += static_cast<int>(members.size());
        std::vector<bool> seen(total, false);
        for (const auto &members : *cluster_membership)
            for (int user : members)
            {
                if (user < 0 || user >= total || seen[user])
                    fail_field("counts.cluster_membership", "not a partition of the users");
                seen[user] = true;
            }
    }
}

ScenarioConfig config_from_json(const std::string &text)
{
    ScenarioConfig config;

    std::string trimmed = text;
    trimmed.erase(std::remove_if(trimmed.begin(), trimmed.end(),
                                 [](unsigned char c) { return std::isspace(c); }),
                  trimmed.end());
    if (trimmed.empty())
    {
        config.validate();
        return config;
    }

    const nlohmann::json j = nlohmann::json::parse(text);
    if (!j.is_object())
        fail_field("(root)", "expected a JSON object");
    reject_unknown(j, "(root)",
                   {"geometry", "counts", "radio", "path_loss", "algorithm", "campaign"});

    if (j.contains("geometry"))
    {
        const auto &g = j["geometry"];
        reject_unknown(g, "geometry", {"bs", "irs", "user_center", "user_radius"});
        if (g.contains("bs"))
            config.bs_position = parse_vec3(g["bs"], "geometry.bs");
        if (g.contains("irs"))
            config.irs_position = parse_vec3(g["irs"], "geometry.irs");
        if (g.contains("user_center"))
            config.user_center = parse_vec3(g["user_center"], "geometry.user_center");
        if (g.contains("user_radius"))
            config.user_radius = g["user_radius"].get<double>();
    }

    if (j.contains("counts"))
    {
        const auto &c = j["counts"];
        reject_unknown(c, "counts",
                       {"n_tx", "l_x", "l_z", "clusters", "users_per_cluster", "paths_bs_irs",
                        "paths_irs_user", "cluster_membership"});
        if (c.contains("n_tx"))
            config.n_tx = c["n_tx"].get<int>();
        if (c.contains("l_x"))
            config.l_x = c["l_x"].get<int>();
        if (c.contains("l_z"))
            config.l_z = c["l_z"].get<int>();
        int clusters = c.contains("clusters") ? c["clusters"].get<int>()
                                              : static_cast<int>(config.users_per_cluster.size());
        if (clusters < 1)
            fail_field("counts.clusters", "must be >= 1");
        if (c.contains("users_per_cluster"))
        {
            const auto &upc = c["users_per_cluster"];
            config.users_per_cluster.clear();
            if (upc.is_number_integer())
                config.users_per_cluster.assign(clusters, upc.get<int>());
            else if (upc.is_array())
                for (const auto &v : upc)
                    config.users_per_cluster.push_back(v.get<int>());
            else
                fail_field("counts.users_per_cluster", "expected an integer or an array");
        }
        else if (c.contains("clusters"))
        {
            config.users_per_cluster.assign(clusters, 3);
        }
        if (c.contains("paths_bs_irs"))
            config.n_paths_bs_irs = c["paths_bs_irs"].get<int>();
        if (c.contains("paths_irs_user"))
            config.n_paths_irs_user = c["paths_irs_user"].get<int>();
        if (c.contains("cluster_membership"))
        {
            std::vector<std::vector<int>> membership;
            for (const auto &cluster : c["cluster_membership"])
                membership.push_back(cluster.get<std::vector<int>>());
            config.cluster_membership = membership;
            config.users_per_cluster.clear();
            for (const auto &members : membership)
                config.users_per_cluster.push_back(static_cast<int>(members.size()));
        }
    }

    if (j.contains("radio"))
    {
        const auto &r = j["radio"];
        reject_unknown(r, "radio",
                       {"carrier_ghz", "bandwidth_hz", "noise_psd_dbm_per_hz",
                        "noise_sigma2_dbm", "p_max_dbm", "r_min_bits", "phase_bits"});
        if (r.contains("carrier_ghz"))
            config.carrier_ghz = r["carrier_ghz"].get<double>();
        if (r.contains("bandwidth_hz"))
            config.bandwidth_hz = r["bandwidth_hz"].get<double>();
        if (r.contains("noise_psd_dbm_per_hz") && r.contains("noise_sigma2_dbm"))
            fail_field("radio", "set either noise_psd_dbm_per_hz or noise_sigma2_dbm, not both");
        if (r.contains("noise_psd_dbm_per_hz"))
        {
            config.noise.literal = false;
            config.noise.psd_dbm_per_hz = r["noise_psd_dbm_per_hz"].get<double>();
        }
        if (r.contains("noise_sigma2_dbm"))
        {
            config.noise.literal = true;
            config.noise.sigma2_dbm = r["noise_sigma2_dbm"].get<double>();
        }
        if (r.contains("p_max_dbm"))
            config.p_max_dbm = r["p_max_dbm"].get<double>();
        if (r.contains("r_min_bits"))
            config.r_min_bits = r["r_min_bits"].get<double>();
        if (r.contains("phase_bits"))
            config.sca.phase_bits = r["phase_bits"].get<int>();
    }

    if (j.contains("path_loss"))
    {
        const auto &p = j["path_loss"];
        reject_unknown(p, "path_loss", {"los", "nlos", "shadowing"});
        auto parse_params = [](const nlohmann::json &src, const std::string &path,
                               PathLossParams &out) {
            reject_unknown(src, path, {"beta1", "beta2", "shadow_sigma_db"});
            if (src.contains("beta1"))
                out.beta1_db = src["beta1"].get<double>();
            if (src.contains("beta2"))
                out.beta2 = src["beta2"].get<double>();
            if (src.contains("shadow_sigma_db"))
                out.shadow_sigma_db = src["shadow_sigma_db"].get<double>();
        };
        if (p.contains("los"))
            parse_params(p["los"], "path_loss.los", config.path_loss.los);
        if (p.contains("nlos"))
            parse_params(p["nlos"], "path_loss.nlos", config.path_loss.nlos);
        if (p.contains("shadowing"))
            config.path_loss.shadowing = p["shadowing"].get<bool>();
    }

    if (j.contains("algorithm"))
    {
        const auto &a = j["algorithm"];
        reject_unknown(a, "algorithm",
                       {"outer_tol", "max_outer_iters", "feasibility_tol", "continuous_phases",
                        "order_enum_cap", "solver_backend", "solver_feastol", "solver_reltol",
                        "solver_max_iters", "oma_per_slot_passive"});
        if (a.contains("outer_tol"))
            config.sca.outer_tol = a["outer_tol"].get<double>();
        if (a.contains("max_outer_iters"))
            config.sca.max_outer_iters = a["max_outer_iters"].get<int>();
        if (a.contains("feasibility_tol"))
            config.sca.feasibility_tol = a["feasibility_tol"].get<double>();
        if (a.contains("continuous_phases"))
            config.sca.continuous_phases = a["continuous_phases"].get<bool>();
        if (a.contains("order_enum_cap"))
            config.sca.order_enum_cap = a["order_enum_cap"].get<long>();
        if (a.contains("solver_backend"))
        {
            const auto backend = a["solver_backend"].get<std::string>();
            if (backend == "ipm")
                config.sca.solver.backend = conic::SolverOptions::Backend::ipm;
            else if (backend == "barrier")
                config.sca.solver.backend = conic::SolverOptions::Backend::barrier;
            else
                fail_field("algorithm.solver_backend", "expected 'ipm' or 'barrier'");
        }
        if (a.contains("solver_feastol"))
            config.sca.solver.feastol = a["solver_feastol"].get<double>();
        if (a.contains("solver_reltol"))
        {
            config.sca.solver.reltol = a["solver_reltol"].get<double>();
            config.sca.solver.abstol = config.sca.solver.reltol;
        }
        if (a.contains("solver_max_iters"))
            config.sca.solver.max_iters = a["solver_max_iters"].get<int>();
        if (a.contains("oma_per_slot_passive"))
            config.oma_per_slot_passive = a["oma_per_slot_passive"].get<bool>();
    }

    if (j.contains("campaign"))
    {
        const auto &c = j["campaign"];
        reject_unknown(c, "campaign",
                       {"trials", "master_seed", "parallel", "schemes", "sweep", "emit_traces"});
        if (c.contains("trials"))
            config.n_trials = c["trials"].get<int>();
        if (c.contains("master_seed"))
            config.master_seed = c["master_seed"].get<std::uint64_t>();
        if (c.contains("parallel"))
            config.parallel = c["parallel"].get<int>();
        if (c.contains("schemes"))
            config.schemes = c["schemes"].get<std::vector<std::string>>();
        if (c.contains("emit_traces"))
            config.emit_traces = c["emit_traces"].get<bool>();
        if (c.contains("sweep"))
        {
            const auto &s = c["sweep"];
            reject_unknown(s, "campaign.sweep", {"axis", "values"});
            if (s.contains("axis"))
                config.sweep_axis = s["axis"].get<std::string>();
            if (s.contains("values"))
                config.sweep_values = s["values"].get<std::vector<double>>();
        }
    }

    config.validate();
    return config;
}

ScenarioConfig load_config(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("load_config: cannot open " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return config_from_json(buffer.str());
}

std::string config_echo_json(const ScenarioConfig &config)
{
    nlohmann::json j;
    j["geometry"] = {{"bs", {config.bs_position.x(), config.bs_position.y(),
                             config.bs_position.z()}},
                     {"irs", {config.irs_position.x(), config.irs_position.y(),
                              config.irs_position.z()}},
                     {"user_center", {config.user_center.x(), config.user_center.y(),
                                      config.user_center.z()}},
                     {"user_radius", config.user_radius}};
    j["counts"] = {{"n_tx", config.n_tx},
                   {"l_x", config.l_x},
                   {"l_z", config.l_z},
                   {"l_irs", config.l_x * config.l_z},
                   {"users_per_cluster", config.users_per_cluster},
                   {"paths_bs_irs", config.n_paths_bs_irs},
                   {"paths_irs_user", config.n_paths_irs_user}};
    j["radio"] = {{"carrier_ghz", config.carrier_ghz},
                  {"bandwidth_hz", config.bandwidth_hz},
                  {"noise_mode", config.noise.literal ? "literal" : "psd"},
                  {"noise_psd_dbm_per_hz", config.noise.psd_dbm_per_hz},
                  {"noise_sigma2_dbm",
                   config.noise.literal
                       ? config.noise.sigma2_dbm
                       : config.noise.psd_dbm_per_hz + 10.0 * std::log10(config.bandwidth_hz)},
                  {"noise_w", config.noise_w()},
                  {"p_max_dbm", config.p_max_dbm},
                  {"p_max_w", config.p_max_w()},
                  {"r_min_bits", config.r_min_bits},
                  {"phase_bits", config.sca.phase_bits}};
    j["path_loss"] = {{"los",
                       {{"beta1", config.path_loss.los.beta1_db},
                        {"beta2", config.path_loss.los.beta2},
                        {"shadow_sigma_db", config.path_loss.los.shadow_sigma_db}}},
                      {"nlos",
                       {{"beta1", config.path_loss.nlos.beta1_db},
                        {"beta2", config.path_loss.nlos.beta2},
                        {"shadow_sigma_db", config.path_loss.nlos.shadow_sigma_db}}},
                      {"shadowing", config.path_loss.shadowing}};
    j["algorithm"] = {{"outer_tol", config.sca.outer_tol},
                      {"max_outer_iters", config.sca.max_outer_iters},
                      {"feasibility_tol", config.sca.feasibility_tol},
                      {"continuous_phases", config.sca.continuous_phases},
                      {"order_enum_cap", config.sca.order_enum_cap},
                      {"solver_backend",
                       config.sca.solver.backend == conic::SolverOptions::Backend::ipm
                           ? "ipm"
                           : "barrier"},
                      {"oma_per_slot_passive", config.oma_per_slot_passive}};
    j["campaign"] = {{"trials", config.n_trials},
                     {"master_seed", config.master_seed},
                     {"parallel", config.parallel},
                     {"schemes", config.schemes},
                     {"emit_traces", config.emit_traces}};
    if (!config.sweep_axis.empty())
        j["campaign"]["sweep"] = {{"axis", config.sweep_axis},
                                  {"values", config.sweep_values}};
    return j.dump(2);
}

std::vector<Eigen::Vector3d> place_users(const ScenarioConfig &config, int count, Rng &rng)
{
    std::vector<Eigen::Vector3d> positions(count);
    for (int u = 0; u < count; ++u)
    {
        const double radius = config.user_radius * std::sqrt(rng.uniform());
        const double angle = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
        positions[u] = config.user_center +
                       Eigen::Vector3d(radius * std::cos(angle), radius * std::sin(angle), 0.0);
    }
    return positions;
}

TrialScenario make_trial_scenario(const ScenarioConfig &config, std::uint64_t seed)
{
    config.validate();

    TrialScenario scenario;
    scenario.geometry = config.geometry();

    const int n_users = std::accumulate(config.users_per_cluster.begin(),
                                        config.users_per_cluster.end(), 0);
    Rng rng(seed);
    const auto positions = place_users(config, n_users, rng);

    // Cluster assignment: explicit membership lists when configured,
    // otherwise contiguous polar sectors around the disk center.
    std::vector<int> assignment(n_users);
    if (config.cluster_membership)
    {
        int slot = 0;
        for (const auto &members : *config.cluster_membership)
            for (int user : members)
                assignment[slot++] = user;
    }
    else
    {
        std::vector<int> order_by_angle(n_users);
        std::iota(order_by_angle.begin(), order_by_angle.end(), 0);
        std::vector<double> angle(n_users);
        for (int u = 0; u < n_users; ++u)
            angle[u] = std::atan2(positions[u].y() - config.user_center.y(),
                                  positions[u].x() - config.user_center.x());
        std::stable_sort(order_by_angle.begin(), order_by_angle.end(),
                         [&angle](int a, int b) { return angle[a] < angle[b]; });
        assignment = order_by_angle;
    }

    scenario.layout.users_per_cluster = config.users_per_cluster;
    scenario.layout.positions.resize(n_users);
    for (int slot = 0; slot < n_users; ++slot)
        scenario.layout.positions[slot] = positions[assignment[slot]];

    scenario.budget.noise_w = config.noise_w();
    scenario.budget.p_max_w = config.p_max_w();
    scenario.budget.r_min_rate = Eigen::VectorXd::Constant(n_users, config.r_min_bits);

    scenario.channels.seed = seed;
    scenario.channels.f =
        sample_channel_f(scenario.geometry, config.n_paths_bs_irs,
                         (config.irs_position - config.bs_position).norm(), config.path_loss,
                         rng, &scenario.channels.f_paths);
    scenario.channels.g_paths.resize(n_users);
    for (int slot = 0; slot < n_users; ++slot)
    {
        const double dist = (scenario.layout.positions[slot] - config.irs_position).norm();
        scenario.channels.g.push_back(sample_channel_g(scenario.geometry,
                                                       config.n_paths_irs_user, dist,
                                                       config.path_loss, rng,
                                                       &scenario.channels.g_paths[slot]));
    }
    return scenario;
}

TrialRecord run_scheme(const ScenarioConfig &config, const TrialScenario &scenario,
                       const std::string &scheme, std::uint64_t seed)
{
    TrialRecord record;
    record.seed = seed;
    record.scheme = scheme;

    // All schemes of a trial share one stream so their random starting
    // phases coincide and per-trial comparisons pair up.
    Rng rng(hash_seed(seed, 0x736368656d65ULL));

    ScaConfig sca = config.sca;
    if (scheme == "upper-bound")
        sca.continuous_phases = true;

    const ProblemContext ctx = scenario.ctx();
    try
    {
        if (scheme == "proposed" || scheme == "upper-bound")
        {
            const AlgorithmResult result = run_algorithm1(ctx, sca, rng);
            record.sum_rate = evaluate_state(ctx, result.state).objective;
            record.iterations = result.iterations;
            record.converged = result.converged;
            record.trace = result.trace;
            record.status = "ok";
        }
        else if (scheme == "zf")
        {
            const BaselineResult result = run_zf_baseline(ctx, sca, rng);
            record.sum_rate = result.objective;
            record.iterations = result.iterations;
            record.converged = result.converged;
            record.trace = result.trace;
            record.status = "ok";
        }
        else if (scheme == "oma")
        {
            const BaselineResult result =
                run_oma_baseline(ctx, sca, rng, config.oma_per_slot_passive);
            record.sum_rate = result.objective;
            record.iterations = result.iterations;
            record.converged = result.converged;
            record.trace = result.trace;
            record.status = "ok";
        }
        else
        {
            record.status = "unknown-scheme";
        }
    }
    catch (const InitializationFailure &)
    {
        record.status = "init-failure";
        record.sum_rate = std::numeric_limits<double>::quiet_NaN();
    }
    catch (const std::exception &e)
    {
        record.status = std::string("error: ") + e.what();
        record.sum_rate = std::numeric_limits<double>::quiet_NaN();
    }
    return record;
}

namespace
{

ScenarioConfig apply_axis(const ScenarioConfig &base, const std::string &axis, double value)
{
    ScenarioConfig config = base;
    if (axis.empty())
        return config;
    if (axis == "l_irs")
    {
        const int l = static_cast<int>(value);
        if (l < 1 || l != value)
            fail_field("campaign.sweep.values", "l_irs values must be positive integers");
        int lz = static_cast<int>(std::floor(std::sqrt(static_cast<double>(l))));
        while (lz > 1 && l % lz != 0)
            --lz;
        config.l_z = lz;
        config.l_x = l / lz;
    }
    else if (axis == "p_max_dbm")
    {
        config.p_max_dbm = value;
    }
    else if (axis == "phase_bits")
    {
        const int b = static_cast<int>(value);
        if (b < 1 || b != value)
            fail_field("campaign.sweep.values", "phase_bits values must be positive integers");
        config.sca.phase_bits = b;
    }
    else if (axis == "n_tx")
    {
        const int n = static_cast<int>(value);
        if (n < 1 || n != value)
            fail_field("campaign.sweep.values", "n_tx values must be positive integers");
        config.n_tx = n;
    }
    return config;
}

std::uint64_t axis_tag(const std::string &axis)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : axis)
    {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t value_bits(double value)
{
    std::uint64_t bits;
    std::memcpy(&bits, &value, sizeof(bits));
    return bits;
}

} // namespace

CampaignResult run_campaign(const ScenarioConfig &config)
{
    config.validate();

    std::vector<double> values = config.sweep_values;
    if (config.sweep_axis.empty())
        values = {0.0};

    CampaignResult result;
    result.points.resize(values.size());
    for (std::size_t pi = 0; pi < values.size(); ++pi)
    {
        result.points[pi].axis = config.sweep_axis;
        result.points[pi].value = values[pi];
        result.points[pi].trials.resize(
            static_cast<std::size_t>(config.n_trials) * config.schemes.size());
    }

    struct Job
    {
        std::size_t point;
        int trial;
    };
    std::vector<Job> jobs;
    for (std::size_t pi = 0; pi < values.size(); ++pi)
        for (int t = 0; t < config.n_trials; ++t)
            jobs.push_back({pi, t});

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true)
        {
            const std::size_t index = next.fetch_add(1);
            if (index >= jobs.size())
                return;
            const Job job = jobs[index];
            const ScenarioConfig point_config =
                apply_axis(config, config.sweep_axis, values[job.point]);
            const std::uint64_t seed =
                hash_seed(config.master_seed, axis_tag(config.sweep_axis),
                          value_bits(values[job.point]), static_cast<std::uint64_t>(job.trial));

            TrialScenario scenario;
            bool scenario_ok = true;
            std::string scenario_error;
            try
            {
                scenario = make_trial_scenario(point_config, seed);
            }
            catch (const std::exception &e)
            {
                scenario_ok = false;
                scenario_error = e.what();
            }

            for (std::size_t si = 0; si < config.schemes.size(); ++si)
            {
                TrialRecord record;
                if (scenario_ok)
                {
                    record = run_scheme(point_config, scenario, config.schemes[si], seed);
                }
                else
                {
                    record.scheme = config.schemes[si];
                    record.seed = seed;
                    record.status = "scenario-error: " + scenario_error;
                    record.sum_rate = std::numeric_limits<double>::quiet_NaN();
                }
                record.trial = job.trial;
                result.points[job.point]
                    .trials[static_cast<std::size_t>(job.trial) * config.schemes.size() + si] =
                    std::move(record);
            }
        }
    };

    const int n_threads = std::max(1, config.parallel);
    if (n_threads == 1)
    {
        worker();
    }
    else
    {
        std::vector<std::thread> pool;
        for (int i = 0; i < n_threads; ++i)
            pool.emplace_back(worker);
        for (auto &thread : pool)
            thread.join();
    }
    return result;
}

std::vector<AggregateRow> CampaignResult::aggregates() const
{
    std::vector<AggregateRow> rows;
    for (const auto &point : points)
    {
        // preserve first-appearance scheme order
        std::vector<std::string> schemes;
        for (const auto &trial : point.trials)
            if (std::find(schemes.begin(), schemes.end(), trial.scheme) == schemes.end())
                schemes.push_back(trial.scheme);
        for (const auto &scheme : schemes)
        {
            AggregateRow row;
            row.axis = point.axis;
            row.value = point.value;
            row.scheme = scheme;
            std::vector<double> rates;
            for (const auto &trial : point.trials)
            {
                if (trial.scheme != scheme)
                    continue;
                if (trial.status == "ok")
                    rates.push_back(trial.sum_rate);
                else
                    ++row.n_fail;
            }
            row.n_ok = static_cast<int>(rates.size());
            row.mean_sum_rate = rates.empty() ? 0.0 : sample_mean(rates);
            row.stddev = rates.size() > 1 ? sample_stddev(rates) : 0.0;
            rows.push_back(row);
        }
    }
    return rows;
}

void emit_results(const CampaignResult &result, const ScenarioConfig &config,
                  const std::string &out_dir)
{
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec)
        throw std::runtime_error("emit_results: cannot create " + out_dir);

    {
        std::ofstream out(out_dir + "/results.csv");
        if (!out)
            throw std::runtime_error("emit_results: cannot write " + out_dir + "/results.csv");
        out << "sweep_axis,sweep_value,scheme,mean_sum_rate,std,n_ok,n_fail\n";
        for (const auto &row : result.aggregates())
            out << (row.axis.empty() ? "none" : row.axis) << ',' << format_double(row.value)
                << ',' << row.scheme << ',' << format_double(row.mean_sum_rate) << ','
                << format_double(row.stddev) << ',' << row.n_ok << ',' << row.n_fail << '\n';
    }

    {
        std::ofstream out(out_dir + "/trials.csv");
        out << "sweep_axis,sweep_value,trial,seed,scheme,sum_rate,iterations,converged,status\n";
        for (const auto &point : result.points)
            for (const auto &trial : point.trials)
                out << (point.axis.empty() ? "none" : point.axis) << ','
                    << format_double(point.value) << ',' << trial.trial << ',' << trial.seed
                    << ',' << trial.scheme << ',' << format_double(trial.sum_rate) << ','
                    << trial.iterations << ',' << (trial.converged ? 1 : 0) << ','
                    << trial.status << '\n';
    }

    {
        std::ofstream out(out_dir + "/config_echo.json");
        out << config_echo_json(config);
    }

    if (config.emit_traces)
    {
        fs::create_directories(out_dir + "/traces", ec);
        for (const auto &point : result.points)
            for (const auto &trial : point.trials)
            {
                if (trial.trace.rows.empty())
                    continue;
                std::ostringstream name;
                name << out_dir << "/traces/"
                     << (point.axis.empty() ? "single" : point.axis) << '_'
                     << format_double(point.value) << "_t" << trial.trial << '_' << trial.scheme
                     << ".csv";
                std::ofstream out(name.str());
                out << "iteration,objective_total,objective_after_active,objective_after_passive,"
                       "objective_after_power,min_qos_residual,solver_status_codes,wall_ms,"
                       "scheme\n";
                for (const auto &row : trial.trace.rows)
                    out << row.iteration << ',' << format_double(row.objective_total) << ','
                        << format_double(row.objective_after_active) << ','
                        << format_double(row.objective_after_passive) << ','
                        << format_double(row.objective_after_power) << ','
                        << format_double(row.min_qos_residual) << ','
                        << static_cast<int>(row.status_active)
                        << static_cast<int>(row.status_passive)
                        << static_cast<int>(row.status_power) << ','
                        << format_double(row.wall_ms) << ',' << trial.scheme << '\n';
            }
    }
}

double sample_mean(const std::vector<double> &xs)
{
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_stddev(const std::vector<double> &xs)
{
    const double mean = sample_mean(xs);
    double acc = 0.0;
    for (double x : xs)
        acc += (x - mean) * (x - mean);
    return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

namespace
{

/// Regularized incomplete beta function by continued fraction.
double betacf(double a, double b, double x)
{
    constexpr int max_iter = 300;
    constexpr double eps = 3e-14;
    constexpr double fpmin = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < fpmin)
        d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m)
    {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin)
            d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin)
            c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin)
            d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin)
            c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps)
            break;
    }
    return h;
}

double incbeta(double a, double b, double x)
{
    if (x <= 0.0)
        return 0.0;
    if (x >= 1.0)
        return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log(1.0 - x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

} // namespace

double paired_t_pvalue(const std::vector<double> &differences)
{
    const std::size_t n = differences.size();
    if (n < 2)
        return 1.0;
    const double mean = sample_mean(differences);
    const double sd = sample_stddev(differences);
    if (sd == 0.0)
        return mean > 0.0 ? 0.0 : 1.0;
    const double t = mean / (sd / std::sqrt(static_cast<double>(n)));
    const double nu = static_cast<double>(n - 1);
    const double x = nu / (nu + t * t);
    const double tail = 0.5 * incbeta(nu / 2.0, 0.5, x);
    return t >= 0.0 ? tail : 1.0 - tail;
}

double ks_pvalue(std::vector<double> samples, const std::function<double(double)> &cdf)
{
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i)
    {
        const double f = cdf(samples[i]);
        const double lo = static_cast<double>(i) / n;
        const double hi = static_cast<double>(i + 1) / n;
        d = std::max({d, std::abs(f - lo), std::abs(hi - f)});
    }
    const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
    double p = 0.0;
    for (int k = 1; k <= 100; ++k)
        p += 2.0 * ((k % 2 == 1) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    return std::clamp(p, 0.0, 1.0);
}

} // namespace irsnoma
