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

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "irsnoma/harness.hpp"

namespace
{

using namespace irsnoma;

ScenarioConfig load_or_default(const std::string &path)
{
    if (path.empty())
        return config_from_json("");
    return load_config(path);
}

void apply_sweep_option(ScenarioConfig &config, const std::string &sweep)
{
    if (sweep.empty())
        return;
    const auto eq = sweep.find('=');
    if (eq == std::string::npos)
        throw std::invalid_argument("--sweep expects AXIS=v1,v2,...");
    config.sweep_axis = sweep.substr(0, eq);
    config.sweep_values.clear();
    std::stringstream values(sweep.substr(eq + 1));
    std::string token;
    while (std::getline(values, token, ','))
        config.sweep_values.push_back(std::stod(token));
}

int cmd_run(const std::string &config_path, std::uint64_t seed, bool seed_set,
            const std::string &out_dir, const std::string &sweep,
            const std::vector<std::string> &schemes, int parallel, bool traces)
{
    ScenarioConfig config = load_or_default(config_path);
    if (seed_set)
        config.master_seed = seed;
    apply_sweep_option(config, sweep);
    if (!schemes.empty())
        config.schemes = schemes;
    if (parallel > 0)
        config.parallel = parallel;
    if (traces)
        config.emit_traces = true;
    config.validate();

    const CampaignResult result = run_campaign(config);
    emit_results(result, config, out_dir);

    std::printf("%-10s %12s %-12s %14s %10s %6s %6s\n", "axis", "value", "scheme",
                "mean_sum_rate", "std", "n_ok", "n_fail");
    for (const auto &row : result.aggregates())
        std::printf("%-10s %12.6g %-12s %14.6f %10.4f %6d %6d\n",
                    row.axis.empty() ? "none" : row.axis.c_str(), row.value,
                    row.scheme.c_str(), row.mean_sum_rate, row.stddev, row.n_ok, row.n_fail);
    std::printf("results written to %s\n", out_dir.c_str());
    return 0;
}

int cmd_trace(const std::string &config_path, std::uint64_t seed, const std::string &out_dir,
              const std::string &scheme, const std::string &dump_channels)
{
    ScenarioConfig config = load_or_default(config_path);
    config.validate();

    const std::uint64_t trial_seed = hash_seed(seed, 0, 0, 0);
    const TrialScenario scenario = make_trial_scenario(config, trial_seed);
    if (!dump_channels.empty())
        save_channel(scenario.channels, scenario.geometry, dump_channels);

    const TrialRecord record = run_scheme(config, scenario, scheme, trial_seed);

    std::filesystem::create_directories(out_dir);
    const std::string path = out_dir + "/trace_" + scheme + ".csv";
    std::ofstream out(path);
    out << "iteration,objective_total,objective_after_active,objective_after_passive,"
           "objective_after_power,min_qos_residual,solver_status_codes,wall_ms,scheme\n";
    char buffer[64];
    for (const auto &row : record.trace.rows)
    {
        std::snprintf(buffer, sizeof(buffer), "%.10g", row.objective_total);
        out << row.iteration << ',' << buffer << ',';
        std::snprintf(buffer, sizeof(buffer), "%.10g", row.objective_after_active);
        out << buffer << ',';
        std::snprintf(buffer, sizeof(buffer), "%.10g", row.objective_after_passive);
        out << buffer << ',';
        std::snprintf(buffer, sizeof(buffer), "%.10g", row.objective_after_power);
        out << buffer << ',';
        std::snprintf(buffer, sizeof(buffer), "%.10g", row.min_qos_residual);
        out << buffer << ',' << static_cast<int>(row.status_active)
            << static_cast<int>(row.status_passive) << static_cast<int>(row.status_power)
            << ',';
        std::snprintf(buffer, sizeof(buffer), "%.10g", row.wall_ms);
        out << buffer << ',' << record.scheme << '\n';
    }

    std::printf("scheme=%s seed=%llu status=%s sum_rate=%.6f iterations=%d converged=%d\n",
                record.scheme.c_str(), static_cast<unsigned long long>(record.seed),
                record.status.c_str(), record.sum_rate, record.iterations,
                record.converged ? 1 : 0);
    std::printf("trace written to %s\n", path.c_str());
    return record.status == "ok" ? 0 : 1;
}

bool report(const char *name, bool pass)
{
    std::printf("[%s] %s\n", pass ? "PASS" : "FAIL", name);
    return pass;
}

/// Quick self-contained invariant suite (used by `check`).
int cmd_check(const std::string &config_path)
{
    ScenarioConfig config = load_or_default(config_path);
    config.validate();
    bool all = true;
    Rng rng(12345);

    {
        bool ok = true;
        for (int trial = 0; trial < 1000 && ok; ++trial)
        {
            Eigen::RowVectorXcd z(4);
            Eigen::VectorXcd w_bar(4), w(4);
            for (int i = 0; i < 4; ++i)
            {
                z(i) = rng.complex_normal();
                w_bar(i) = rng.complex_normal();
                w(i) = rng.complex_normal();
            }
            const auto phi = taylor_quadratic_lb(z, w_bar);
            ok = phi.eval(w) <= std::norm((z * w)(0, 0)) + 1e-9 &&
                 std::abs(phi.eval(w_bar) - std::norm((z * w_bar)(0, 0))) <= 1e-9;
        }
        all &= report("quadratic minorant: global bound, tight at the expansion point", ok);
    }

    {
        bool ok = true;
        for (int trial = 0; trial < 1000 && ok; ++trial)
        {
            const int bits = 1 + static_cast<int>(rng.uniform_index(5));
            const double angle = rng.uniform(-12.0, 12.0);
            const int levels = 1 << bits;
            double a = std::fmod(angle, 2 * 3.14159265358979323846);
            if (a < 0)
                a += 2 * 3.14159265358979323846;
            int best = 0;
            double best_dist = 1e300;
            for (int i = 0; i < levels; ++i)
            {
                const double diff = std::abs(a - grid_angle(i, bits));
                const double dist = std::min(diff, 2 * 3.14159265358979323846 - diff);
                if (dist < best_dist - 1e-15)
                {
                    best_dist = dist;
                    best = i;
                }
            }
            ok = project_phase_index(angle, bits) == best;
        }
        all &= report("phase projection: matches exhaustive circular search", ok);
    }

    {
        const ArrayGeometry geometry{4, 2, 2, 0.005, 0.01};
        PathLossModel model;
        bool ok = true;
        for (int trial = 0; trial < 100 && ok; ++trial)
        {
            const auto f = sample_channel_f(geometry, 3, 20.0, model, rng);
            const auto g = sample_channel_g(geometry, 3, 10.0, model, rng);
            Eigen::VectorXd phases(4);
            for (int l = 0; l < 4; ++l)
                phases(l) = rng.uniform(0.0, 6.28);
            Eigen::VectorXcd w(4);
            for (int i = 0; i < 4; ++i)
                w(i) = rng.complex_normal();
            const std::complex<double> via_h = (effective_channel(g, phases, f) * w)(0, 0);
            Eigen::VectorXcd v(4);
            for (int l = 0; l < 4; ++l)
                v(l) = std::exp(std::complex<double>(0, phases(l)));
            const std::complex<double> via_z = (cascade_vector(g, f, w) * v)(0, 0);
            ok = std::abs(via_h - via_z) <= 1e-10 * std::max(1e-30, std::abs(via_h));
        }
        all &= report("cascade identity: z v equals h w", ok);
    }

    {
        conic::Program p;
        const int x = p.add_var();
        const int y = p.add_var();
        p.set_maximize(conic::LinExpr::variable(x) + conic::LinExpr::variable(y));
        p.add_soc({conic::LinExpr::variable(x), conic::LinExpr::variable(y)},
                  conic::LinExpr(1.0));
        const auto ipm = p.solve();
        conic::SolverOptions barrier;
        barrier.backend = conic::SolverOptions::Backend::barrier;
        const auto bar = p.solve(barrier);
        const bool ok = ipm.status == conic::SolveStatus::optimal &&
                        bar.status == conic::SolveStatus::optimal &&
                        std::abs(ipm.objective_value - std::sqrt(2.0)) < 1e-6 &&
                        std::abs(bar.objective_value - std::sqrt(2.0)) < 1e-6;
        all &= report("conic solvers: analytic cone program on both backends", ok);
    }

    {
        // tiny two-trial determinism probe on a shrunken copy of the config
        ScenarioConfig tiny = config;
        tiny.n_tx = 4;
        tiny.l_x = 2;
        tiny.l_z = 2;
        tiny.users_per_cluster = {1, 1};
        tiny.n_trials = 2;
        tiny.schemes = {"proposed"};
        tiny.sweep_axis.clear();
        tiny.sweep_values.clear();
        tiny.parallel = 1;
        const auto a = run_campaign(tiny);
        const auto b = run_campaign(tiny);
        bool ok = a.points.size() == b.points.size();
        for (std::size_t i = 0; ok && i < a.points[0].trials.size(); ++i)
        {
            const auto &ta = a.points[0].trials[i];
            const auto &tb = b.points[0].trials[i];
            ok = ta.status == tb.status &&
                 ((std::isnan(ta.sum_rate) && std::isnan(tb.sum_rate)) ||
                  ta.sum_rate == tb.sum_rate);
        }
        all &= report("campaign: bit-identical repetition under a fixed seed", ok);
    }

    std::printf("%s\n", all ? "all checks passed" : "SOME CHECKS FAILED");
    return all ? 0 : 1;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"IRS-assisted mmWave NOMA downlink simulation and optimization"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", sweep, scheme = "proposed", dump_channels;
    std::vector<std::string> schemes;
    std::uint64_t seed = 0;
    int parallel = 0;
    bool traces = false;

    auto *run = app.add_subcommand("run", "run a Monte-Carlo campaign");
    run->add_option("--config", config_path, "config JSON path (defaults when omitted)");
    auto *seed_opt = run->add_option("--seed", seed, "master seed override");
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--sweep", sweep, "sweep axis, e.g. l_irs=16,32,64");
    run->add_option("--scheme", schemes, "schemes to run (repeatable)");
    run->add_option("--parallel", parallel, "worker threads");
    run->add_flag("--traces", traces, "write per-trial iteration traces");

    auto *trace = app.add_subcommand("trace", "run one trial with a full iteration trace");
    trace->add_option("--config", config_path, "config JSON path");
    trace->add_option("--seed", seed, "trial seed");
    trace->add_option("--out", out_dir, "output directory");
    trace->add_option("--scheme", scheme, "proposed|zf|oma|upper-bound");
    trace->add_option("--dump-channels", dump_channels, "write the channel draw as JSON");

    auto *check = app.add_subcommand("check", "run the quick invariant suite");
    check->add_option("--config", config_path, "config JSON path");

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (run->parsed())
            return cmd_run(config_path, seed, seed_opt->count() > 0, out_dir, sweep, schemes,
                           parallel, traces);
        if (trace->parsed())
            return cmd_trace(config_path, seed, out_dir, scheme, dump_channels);
        if (check->parsed())
            return cmd_check(config_path);
    }
    catch (const std::exception &e)
    {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
