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

#ifndef irsnoma_noma_H
#define irsnoma_noma_H

#include <vector>

#include <Eigen/Dense>

namespace irsnoma
{

/// Cluster structure of the user population. Users are indexed globally in
/// cluster order: user_index(m, k) = offset(m) + k.
struct UserLayout
{
    std::vector<int> users_per_cluster;
    std::vector<Eigen::Vector3d> positions;  // optional, one per user when set

    int n_clusters() const { return static_cast<int>(users_per_cluster.size()); }
    int n_users() const;
    int cluster_offset(int m) const;
    int user_index(int m, int k) const { return cluster_offset(m) + k; }
    void validate() const;
};

/// Per-cluster power split factors; each cluster's factors are nonnegative
/// and sum to one.
struct PowerAllocation
{
    std::vector<Eigen::VectorXd> p;

    void validate(const UserLayout &layout, double tol = 1e-9) const;
    /// Clamps negatives to zero and rescales each cluster to unit sum.
    void normalize();
};

/// Per-cluster decode positions. rank[m][k] = d means the k-th user of
/// cluster m is the (d+1)-th signal to be decoded (0-based).
struct DecodingOrder
{
    std::vector<std::vector<int>> rank;

    void validate(const UserLayout &layout) const;
    /// In-cluster user index decoded at position d of cluster m.
    int user_at_position(int m, int d) const;
    /// In-cluster index of the last-decoded user of cluster m.
    int last_user(int m) const;
};

/// Noise and power budget shared by every scheme, plus per-user minimum
/// rates. qos_threshold(u) = 2^rate - 1.
struct LinkBudget
{
    double noise_w = 1e-12;
    double p_max_w = 1.0;
    Eigen::VectorXd r_min_rate;  // bits/s/Hz, one per user (global index)

    double qos_threshold(int user) const { return std::exp2(r_min_rate(user)) - 1.0; }
    void validate(int n_users) const;
};

/// Everything needed to evaluate rates: effective channel rows (one per
/// global user index), beamformer columns (one per cluster), power split,
/// decode order and budget.
struct NomaState
{
    const Eigen::MatrixXcd &h;  // n_users x n_tx
    const Eigen::MatrixXcd &w;  // n_tx x n_clusters
    const UserLayout &layout;
    const PowerAllocation &power;
    const DecodingOrder &order;
    const LinkBudget &budget;
};

/// |h_row * w_col|^2.
double beam_gain(const Eigen::RowVectorXcd &h_row, const Eigen::VectorXcd &w_col);

/// Inter-cluster interference plus noise seen by user (m, j):
/// sum_{n != m} |h_{m,j} w_n|^2 + noise.
double interference_plus_noise(const NomaState &state, int m, int j);

/// Tail power sum of cluster m after user k in decode order:
/// sum over users decoded after k of their power factors.
double tail_power(const NomaState &state, int m, int k);

/// SINR at user (m, j) when decoding the signal of user (m, k); requires
/// rank(j) >= rank(k).
double sinr_decode(const NomaState &state, int m, int j, int k);

/// min over users decoded at-or-after k of log2(1 + sinr_decode(j, k)).
/// For the last-decoded user this reduces to the plain single-signal rate.
double achievable_rate(const NomaState &state, int m, int k);

/// Sum over clusters of the last-decoded user's achievable rate.
double sum_objective(const NomaState &state);

/// rate - r_min for every user that is not decoded last in its cluster,
/// in (m, k) traversal order. All entries >= 0 means the decode conditions
/// hold.
Eigen::VectorXd qos_residuals(const NomaState &state);

/// Ascending sort of each cluster's users by |h w_m|^2; ties keep the
/// original in-cluster index order.
DecodingOrder order_by_effective_gain(const Eigen::MatrixXcd &h, const Eigen::MatrixXcd &w,
                                      const UserLayout &layout);

/// Every joint decoding order (cartesian product of per-cluster
/// permutations). Refuses with std::invalid_argument when the product of
/// factorials exceeds max_orders.
std::vector<DecodingOrder> enumerate_decoding_orders(const UserLayout &layout,
                                                     long max_orders = 10000);

} // namespace irsnoma

#endif
