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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "irsnoma/harness.hpp"

using namespace irsnoma;

namespace
{

/// Tiny campaign settings so harness tests stay fast.
ScenarioConfig tiny_config()
{
    ScenarioConfig config = config_from_json(R"({
        "geometry": {"bs": [0,0,6], "irs": [5,5,6], "user_center": [7,7,0], "user_radius": 4.0},
        "counts": {"n_tx": 4, "l_x": 2, "l_z": 2, "clusters": 2, "users_per_cluster": 1},
        "radio": {"noise_sigma2_dbm": -150.0, "p_max_dbm": 43.0, "r_min_bits": 0.001,
                  "bandwidth_hz": 1e5},
        "path_loss": {"shadowing": false},
        "campaign": {"trials": 2, "master_seed": 11, "schemes": ["proposed"]}
    })");
    return config;
}

} // namespace

TEST_CASE("config defaults and validation")
{
    SUBCASE("empty document yields the reference defaults")
    {
        const auto config = config_from_json("");
        CHECK(config.n_tx == 64);
        CHECK(config.l_x * config.l_z == 100);
        CHECK(config.users_per_cluster == std::vector<int>{3, 3, 3});
        CHECK(config.n_paths_bs_irs == 3);
        CHECK(config.bs_position == Eigen::Vector3d(0, 0, 15));
        CHECK(config.irs_position == Eigen::Vector3d(20, 20, 15));
        CHECK(config.user_center == Eigen::Vector3d(30, 30, 0));
        CHECK(config.user_radius == 8.0);
        CHECK(config.bandwidth_hz == doctest::Approx(100e6));
        CHECK(config.p_max_dbm == 35.0);
        CHECK(config.r_min_bits == 0.01);
        CHECK(config.sca.phase_bits == 5);
        // thermal density integrated over the bandwidth: -174 + 80 dBm
        CHECK(10.0 * std::log10(config.noise_w()) + 30.0 == doctest::Approx(-94.0));
    }
    SUBCASE("zero-bit phases are rejected")
    {
        CHECK_THROWS_AS(config_from_json(R"({"radio": {"phase_bits": 0}})"),
                        std::invalid_argument);
    }
    SUBCASE("conflicting noise settings are rejected")
    {
        CHECK_THROWS_AS(config_from_json(
                            R"({"radio": {"noise_psd_dbm_per_hz": -174, "noise_sigma2_dbm": -94}})"),
                        std::invalid_argument);
    }
    SUBCASE("unknown keys are rejected with their path")
    {
        try
        {
            config_from_json(R"({"radio": {"p_max_dBm": 30}})");
            FAIL("expected a validation error");
        }
        catch (const std::invalid_argument &e)
        {
            CHECK(std::string(e.what()).find("radio.p_max_dBm") != std::string::npos);
        }
    }
    SUBCASE("literal noise mode is honored")
    {
        const auto config = config_from_json(R"({"radio": {"noise_sigma2_dbm": -94}})");
        CHECK(10.0 * std::log10(config.noise_w()) + 30.0 == doctest::Approx(-94.0));
    }
}

TEST_CASE("place_users")
{
    const auto config = config_from_json("");
    Rng rng(3);

    SUBCASE("samples stay inside the disk")
    {
        const auto users = place_users(config, 1000, rng);
        for (const auto &u : users)
        {
            CHECK((u - config.user_center).norm() <= config.user_radius + 1e-12);
            CHECK(u.z() == 0.0);
        }
    }
    SUBCASE("mean position approaches the center")
    {
        const auto users = place_users(config, 100000, rng);
        Eigen::Vector3d mean = Eigen::Vector3d::Zero();
        for (const auto &u : users)
            mean += u;
        mean /= static_cast<double>(users.size());
        CHECK((mean - config.user_center).norm() < 0.1);
    }
    SUBCASE("radial law matches the area-uniform distribution")
    {
        const auto users = place_users(config, 10000, rng);
        std::vector<double> radii;
        for (const auto &u : users)
            radii.push_back((u - config.user_center).norm());
        const double r_max = config.user_radius;
        const double p = ks_pvalue(radii, [r_max](double r) {
            const double clamped = std::clamp(r / r_max, 0.0, 1.0);
            return clamped * clamped;
        });
        CHECK(p > 0.01);
    }
}

TEST_CASE("campaign determinism and independence")
{
    const auto config = tiny_config();

    SUBCASE("repeated runs are identical")
    {
        const auto a = run_campaign(config);
        const auto b = run_campaign(config);
        REQUIRE(a.points.size() == b.points.size());
        for (std::size_t i = 0; i < a.points[0].trials.size(); ++i)
        {
            CHECK(a.points[0].trials[i].sum_rate == b.points[0].trials[i].sum_rate);
            CHECK(a.points[0].trials[i].seed == b.points[0].trials[i].seed);
        }
    }
    SUBCASE("adding a trial leaves earlier trials untouched")
    {
        auto more = config;
        more.n_trials = 3;
        const auto a = run_campaign(config);
        const auto b = run_campaign(more);
        for (int t = 0; t < config.n_trials; ++t)
        {
            CHECK(a.points[0].trials[t].sum_rate == b.points[0].trials[t].sum_rate);
            CHECK(a.points[0].trials[t].seed == b.points[0].trials[t].seed);
        }
    }
    SUBCASE("parallel execution matches serial execution")
    {
        auto parallel = config;
        parallel.parallel = 2;
        parallel.n_trials = 4;
        auto serial = parallel;
        serial.parallel = 1;
        const auto a = run_campaign(serial);
        const auto b = run_campaign(parallel);
        for (std::size_t i = 0; i < a.points[0].trials.size(); ++i)
            CHECK(a.points[0].trials[i].sum_rate == b.points[0].trials[i].sum_rate);
    }
    SUBCASE("sweep points produce one aggregate row per scheme")
    {
        auto sweep = config;
        sweep.sweep_axis = "l_irs";
        sweep.sweep_values = {4, 8, 16};
        const auto result = run_campaign(sweep);
        CHECK(result.aggregates().size() == 3);
        for (const auto &row : result.aggregates())
            CHECK(row.n_ok + row.n_fail == sweep.n_trials);
    }
}

TEST_CASE("emit_results round trip")
{
    namespace fs = std::filesystem;
    const std::string dir = (fs::temp_directory_path() / "irsnoma_emit_test").string();
    fs::remove_all(dir);

    const auto config = tiny_config();
    const auto result = run_campaign(config);
    emit_results(result, config, dir);

    SUBCASE("results.csv reproduces the aggregates")
    {
        std::ifstream in(dir + "/results.csv");
        REQUIRE(in.good());
        std::string header;
        std::getline(in, header);
        CHECK(header == "sweep_axis,sweep_value,scheme,mean_sum_rate,std,n_ok,n_fail");
        const auto rows = result.aggregates();
        std::string line;
        std::size_t i = 0;
        while (std::getline(in, line))
        {
            REQUIRE(i < rows.size());
            std::stringstream ss(line);
            std::string axis, value, scheme, mean;
            std::getline(ss, axis, ',');
            std::getline(ss, value, ',');
            std::getline(ss, scheme, ',');
            std::getline(ss, mean, ',');
            CHECK(scheme == rows[i].scheme);
            CHECK(std::stod(mean) == rows[i].mean_sum_rate);
            ++i;
        }
        CHECK(i == rows.size());
    }
    SUBCASE("empty result writes a header-only file")
    {
        const std::string empty_dir = dir + "_empty";
        fs::remove_all(empty_dir);
        emit_results(CampaignResult{}, config, empty_dir);
        std::ifstream in(empty_dir + "/results.csv");
        std::string header, extra;
        std::getline(in, header);
        CHECK(header == "sweep_axis,sweep_value,scheme,mean_sum_rate,std,n_ok,n_fail");
        CHECK(!std::getline(in, extra));
        fs::remove_all(empty_dir);
    }
    SUBCASE("config echo records the integrated noise power")
    {
        auto psd_config = config;
        psd_config.noise.literal = false;
        psd_config.noise.psd_dbm_per_hz = -174.0;
        psd_config.bandwidth_hz = 1e6;
        const auto echo = config_echo_json(psd_config);
        CHECK(echo.find("\"noise_sigma2_dbm\": -114.0") != std::string::npos);
    }
    fs::remove_all(dir);
}

TEST_CASE("statistics helpers")
{
    SUBCASE("paired t-test against a hand table")
    {
        // diffs 1..4: t = 3.873 on 3 dof, one-sided p ~ 0.0152
        const double p = paired_t_pvalue({1.0, 2.0, 3.0, 4.0});
        CHECK(p > 0.01);
        CHECK(p < 0.02);
    }
    SUBCASE("zero-variance positive differences are certain")
    {
        CHECK(paired_t_pvalue({0.5, 0.5, 0.5}) == 0.0);
        CHECK(paired_t_pvalue({-0.5, -0.5, -0.5}) == 1.0);
    }
    SUBCASE("negative mean differences are insignificant")
    {
        CHECK(paired_t_pvalue({-1.0, -2.0, -0.5, -1.5}) > 0.9);
    }
    SUBCASE("Kolmogorov-Smirnov sanity")
    {
        Rng rng(5);
        std::vector<double> uniform(2000);
        for (auto &x : uniform)
            x = rng.uniform();
        CHECK(ks_pvalue(uniform, [](double x) { return std::clamp(x, 0.0, 1.0); }) > 0.01);
        CHECK(ks_pvalue(uniform, [](double x) {
                  return std::clamp(x * x, 0.0, 1.0);
              }) < 1e-6);
    }
}

TEST_CASE("iteration counts stay bounded across surface sizes")
{
    // The round count of the alternating loop under the relative-change stop
    // rule is reported for information; every trial must converge inside the
    // round limit at both sizes.
    auto run_mean_iters = [](int l_x, int l_z) {
        double total = 0.0;
        int n = 0;
        for (std::uint64_t t = 0; t < 6; ++t)
        {
            std::ostringstream json;
            json << R"({
                "geometry": {"bs": [0,0,6], "irs": [5,5,6], "user_center": [7,7,0],
                             "user_radius": 4.0},
                "counts": {"n_tx": 8, "l_x": )"
                 << l_x << R"(, "l_z": )" << l_z << R"(, "clusters": 2,
                           "users_per_cluster": 2},
                "radio": {"noise_sigma2_dbm": -150.0, "p_max_dbm": 43.0,
                          "r_min_bits": 0.001, "bandwidth_hz": 1e5},
                "path_loss": {"shadowing": false},
                "campaign": {"trials": 1, "master_seed": )"
                 << (100 + t) << R"(, "schemes": ["proposed"]}
            })";
            const auto config = config_from_json(json.str());
            const auto result = run_campaign(config);
            const auto &trial = result.points[0].trials[0];
            if (trial.status == "ok")
            {
                CHECK(trial.converged);
                CHECK(trial.iterations <= config.sca.max_outer_iters);
                total += trial.iterations;
                ++n;
            }
        }
        return total / std::max(n, 1);
    };

    const double small = run_mean_iters(2, 2);
    const double large = run_mean_iters(8, 8);
    MESSAGE("mean rounds: 4 elements ", small, ", 64 elements ", large);
    CHECK(small >= 1.0);
    CHECK(large >= 1.0);
}
