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

#include "irsnoma/noma.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace irsnoma
{

namespace
{
void require(bool condition, const char *message)
{
    if (!condition)
        throw std::invalid_argument(message);
}
} // namespace

int UserLayout::n_users() const
{
    return std::accumulate(users_per_cluster.begin(), users_per_cluster.end(), 0);
}

int UserLayout::cluster_offset(int m) const
{
    return std::accumulate(users_per_cluster.begin(), users_per_cluster.begin() + m, 0);
}

void UserLayout::validate() const
{
    require(n_clusters() >= 1, "UserLayout: need at least one cluster");
    for (int km : users_per_cluster)
        require(km >= 1, "UserLayout: every cluster needs at least one user");
    if (!positions.empty())
        require(static_cast<int>(positions.size()) == n_users(),
                "UserLayout: positions must be empty or one per user");
}

void PowerAllocation::validate(const UserLayout &layout, double tol) const
{
    require(static_cast<int>(p.size()) == layout.n_clusters(),
            "PowerAllocation: one factor vector per cluster required");
    for (int m = 0; m < layout.n_clusters(); ++m)
    {
        require(p[m].size() == layout.users_per_cluster[m],
                "PowerAllocation: factor count must match cluster size");
        require(p[m].minCoeff() >= -tol, "PowerAllocation: factors must be nonnegative");
        require(std::abs(p[m].sum() - 1.0) <= tol,
                "PowerAllocation: factors must sum to one per cluster");
    }
}

void PowerAllocation::normalize()
{
    for (auto &pm : p)
    {
        pm = pm.cwiseMax(0.0);
        const double total = pm.sum();
        if (total > 0.0)
            pm /= total;
        else
            pm.setConstant(1.0 / static_cast<double>(pm.size()));
    }
}

void DecodingOrder::validate(const UserLayout &layout) const
{
    require(static_cast<int>(rank.size()) == layout.n_clusters(),
            "DecodingOrder: one permutation per cluster required");
    for (int m = 0; m < layout.n_clusters(); ++m)
    {
        const int km = layout.users_per_cluster[m];
        require(static_cast<int>(rank[m].size()) == km,
                "DecodingOrder: permutation size must match cluster size");
        std::vector<bool> seen(km, false);
        for (int r : rank[m])
        {
            require(r >= 0 && r < km && !seen[r], "DecodingOrder: not a permutation");
            seen[r] = true;
        }
    }
}

int DecodingOrder::user_at_position(int m, int d) const
{
    for (int k = 0; k < static_cast<int>(rank[m].size()); ++k)
        if (rank[m][k] == d)
            return k;
    throw std::invalid_argument("DecodingOrder: position out of range");
}

int DecodingOrder::last_user(int m) const
{
    return user_at_position(m, static_cast<int>(rank[m].size()) - 1);
}

void LinkBudget::validate(int n_users) const
{
    require(noise_w > 0.0, "LinkBudget: noise power must be positive");
    require(p_max_w > 0.0, "LinkBudget: power budget must be positive");
    require(r_min_rate.size() == n_users, "LinkBudget: one minimum rate per user required");
    require(r_min_rate.minCoeff() >= 0.0, "LinkBudget: minimum rates must be nonnegative");
}

double beam_gain(const Eigen::RowVectorXcd &h_row, const Eigen::VectorXcd &w_col)
{
    return std::norm((h_row * w_col)(0, 0));
}

double interference_plus_noise(const NomaState &state, int m, int j)
{
    const int row = state.layout.user_index(m, j);
    double acc = state.budget.noise_w;
    for (int n = 0; n < state.layout.n_clusters(); ++n)
    {
        if (n == m)
            continue;
        acc += beam_gain(state.h.row(row), state.w.col(n));
    }
    return acc;
}

double tail_power(const NomaState &state, int m, int k)
{
    const int km = state.layout.users_per_cluster[m];
    const int pos = state.order.rank[m][k];
    double acc = 0.0;
    for (int i = 0; i < km; ++i)
        if (state.order.rank[m][i] > pos)
            acc += state.power.p[m](i);
    return acc;
}

double sinr_decode(const NomaState &state, int m, int j, int k)
{
    require(state.order.rank[m][j] >= state.order.rank[m][k],
            "sinr_decode: user j must be decoded at or after user k");

    const double gain = beam_gain(state.h.row(state.layout.user_index(m, j)), state.w.col(m));
    const double numerator = gain * state.power.p[m](k);
    const double denominator = gain * tail_power(state, m, k) + interference_plus_noise(state, m, j);
    return numerator / denominator;
}

double achievable_rate(const NomaState &state, int m, int k)
{
    const int km = state.layout.users_per_cluster[m];
    const int pos = state.order.rank[m][k];
    double rate = std::numeric_limits<double>::infinity();
    for (int j = 0; j < km; ++j)
        if (state.order.rank[m][j] >= pos)
            rate = std::min(rate, std::log2(1.0 + sinr_decode(state, m, j, k)));
    return rate;
}

double sum_objective(const NomaState &state)
{
    double total = 0.0;
    for (int m = 0; m < state.layout.n_clusters(); ++m)
        total += achievable_rate(state, m, state.order.last_user(m));
    return total;
}

Eigen::VectorXd qos_residuals(const NomaState &state)
{
    std::vector<double> residuals;
    for (int m = 0; m < state.layout.n_clusters(); ++m)
    {
        const int km = state.layout.users_per_cluster[m];
        for (int k = 0; k < km; ++k)
        {
            if (state.order.rank[m][k] == km - 1)
                continue;  // last-decoded user carries no decode condition
            const int user = state.layout.user_index(m, k);
            residuals.push_back(achievable_rate(state, m, k) - state.budget.r_min_rate(user));
        }
    }
    if (residuals.empty())
        return {};
    return Eigen::Map<Eigen::VectorXd>(residuals.data(), static_cast<Eigen::Index>(residuals.size()));
}

DecodingOrder order_by_effective_gain(const Eigen::MatrixXcd &h, const Eigen::MatrixXcd &w,
                                      const UserLayout &layout)
{
    DecodingOrder order;
    order.rank.resize(layout.n_clusters());
    for (int m = 0; m < layout.n_clusters(); ++m)
    {
        const int km = layout.users_per_cluster[m];
        std::vector<int> idx(km);
        std::vector<double> gain(km);
        for (int k = 0; k < km; ++k)
        {
            idx[k] = k;
            gain[k] = beam_gain(h.row(layout.user_index(m, k)), w.col(m));
        }
        std::stable_sort(idx.begin(), idx.end(),
                         [&gain](int a, int b) { return gain[a] < gain[b]; });
        order.rank[m].resize(km);
        for (int d = 0; d < km; ++d)
            order.rank[m][idx[d]] = d;
    }
    return order;
}

std::vector<DecodingOrder> enumerate_decoding_orders(const UserLayout &layout, long max_orders)
{
    layout.validate();

    long total = 1;
    for (int km : layout.users_per_cluster)
    {
        for (int i = 2; i <= km; ++i)
        {
            total *= i;
            if (total > max_orders)
                throw std::invalid_argument(
                    "enumerate_decoding_orders: joint order count exceeds the cap");
        }
    }

    // Per-cluster permutation lists, then their cartesian product.
    std::vector<std::vector<std::vector<int>>> per_cluster;
    for (int km : layout.users_per_cluster)
    {
        std::vector<int> perm(km);
        std::iota(perm.begin(), perm.end(), 0);
        std::vector<std::vector<int>> perms;
        do
        {
            perms.push_back(perm);
        } while (std::next_permutation(perm.begin(), perm.end()));
        per_cluster.push_back(std::move(perms));
    }

    std::vector<DecodingOrder> orders;
    orders.reserve(static_cast<std::size_t>(total));
    std::vector<std::size_t> cursor(per_cluster.size(), 0);
    while (true)
    {
        DecodingOrder order;
        order.rank.resize(layout.n_clusters());
        for (int m = 0; m < layout.n_clusters(); ++m)
            order.rank[m] = per_cluster[m][cursor[m]];
        orders.push_back(std::move(order));

        int m = layout.n_clusters() - 1;
        while (m >= 0)
        {
            if (++cursor[m] < per_cluster[m].size())
                break;
            cursor[m] = 0;
            --m;
        }
        if (m < 0)
            break;
    }
    return orders;
}

} // namespace irsnoma
