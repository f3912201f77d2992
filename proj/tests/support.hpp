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

#ifndef irsnoma_tests_support_H
#define irsnoma_tests_support_H

#include <cmath>
#include <vector>

#include "irsnoma/optimizer.hpp"

namespace irsnoma::test
{

/// Owns everything a ProblemContext references; a compact bench scenario
/// with short distances and a generous budget so rates sit in a sensible
/// range at small array sizes.
struct Scenario
{
    ArrayGeometry geometry;
    UserLayout layout;
    LinkBudget budget;
    ChannelRealization channels;
    PathLossModel path_loss;

    ProblemContext ctx() const { return {geometry, channels, layout, budget}; }
};

inline Scenario make_scenario(std::uint64_t seed, int n_tx = 8, int l_x = 4, int l_z = 4,
                              std::vector<int> users_per_cluster = {2, 2},
                              double p_max_dbm = 43.0, double noise_dbm = -150.0,
                              double r_min = 0.001, bool shadowing = false)
{
    Scenario s;
    s.geometry.n_tx = n_tx;
    s.geometry.l_x = l_x;
    s.geometry.l_z = l_z;

    s.layout.users_per_cluster = std::move(users_per_cluster);
    const int n_users = s.layout.n_users();

    s.budget.p_max_w = std::pow(10.0, (p_max_dbm - 30.0) / 10.0);
    s.budget.noise_w = std::pow(10.0, (noise_dbm - 30.0) / 10.0);
    s.budget.r_min_rate = Eigen::VectorXd::Constant(n_users, r_min);

    s.path_loss.shadowing = shadowing;

    const Eigen::Vector3d bs(0.0, 0.0, 6.0);
    const Eigen::Vector3d irs(5.0, 5.0, 6.0);
    const Eigen::Vector3d center(7.0, 7.0, 0.0);

    Rng rng(seed);
    s.channels.seed = seed;
    s.channels.f = sample_channel_f(s.geometry, 3, (irs - bs).norm(), s.path_loss, rng,
                                    &s.channels.f_paths);
    s.channels.g_paths.resize(n_users);
    s.layout.positions.resize(n_users);
    for (int u = 0; u < n_users; ++u)
    {
        const double radius = 4.0 * std::sqrt(rng.uniform());
        const double angle = rng.uniform(0.0, 6.283185307179586);
        s.layout.positions[u] =
            center + Eigen::Vector3d(radius * std::cos(angle), radius * std::sin(angle), 0.0);
        const double dist = (s.layout.positions[u] - irs).norm();
        s.channels.g.push_back(
            sample_channel_g(s.geometry, 3, dist, s.path_loss, rng, &s.channels.g_paths[u]));
    }
    return s;
}

} // namespace irsnoma::test

#endif
