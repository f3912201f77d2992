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

#include "irsnoma/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace irsnoma
{

namespace
{
constexpr double kTwoPi = 6.283185307179586476925286766559;

std::complex<double> unit_phase(double angle)
{
    return {std::cos(angle), std::sin(angle)};
}

/// Rows whose squared sum is |z v|^2 for a complex row z over a block.
std::pair<conic::LinExpr, conic::LinExpr> row_product_rows(const Eigen::RowVectorXcd &z,
                                                           const conic::ComplexBlock &block)
{
    return conic::abs_rows(z.conjugate().transpose(), block);
}

/// real(z v) over a block as an affine form.
conic::LinExpr row_product_re(const Eigen::RowVectorXcd &z, const conic::ComplexBlock &block)
{
    return conic::re_inner(z.conjugate().transpose(), block);
}

struct ClusterView
{
    int m;
    int size;
    std::vector<int> user_at;   // decode position -> in-cluster index
    std::vector<double> p_at;   // decode position -> power factor
    std::vector<double> r_at;   // decode position -> qos threshold 2^R - 1
    std::vector<double> tail;   // decode position -> sum of later powers
    std::vector<double> delta;  // decode position -> p - r * tail
};

ClusterView cluster_view(const ProblemContext &ctx, const SolutionState &state, int m)
{
    ClusterView view;
    view.m = m;
    view.size = ctx.layout.users_per_cluster[m];
    view.user_at.resize(view.size);
    view.p_at.resize(view.size);
    view.r_at.resize(view.size);
    view.tail.assign(view.size, 0.0);
    view.delta.resize(view.size);
    for (int k = 0; k < view.size; ++k)
        view.user_at[state.order.rank[m][k]] = k;
    for (int d = 0; d < view.size; ++d)
    {
        const int k = view.user_at[d];
        view.p_at[d] = state.p.p[m](k);
        view.r_at[d] = ctx.budget.qos_threshold(ctx.layout.user_index(m, k));
    }
    for (int d = view.size - 2; d >= 0; --d)
        view.tail[d] = view.tail[d + 1] + view.p_at[d + 1];
    for (int d = 0; d < view.size; ++d)
        view.delta[d] = view.p_at[d] - view.r_at[d] * view.tail[d];
    return view;
}

} // namespace

conic::LinExpr QuadraticMinorant::realify(const conic::ComplexBlock &block) const
{
    conic::LinExpr e = row_product_re(coeff, block);
    e += constant;
    return e;
}

QuadraticMinorant taylor_quadratic_lb(const Eigen::RowVectorXcd &z,
                                      const Eigen::VectorXcd &w_bar)
{
    if (z.size() != w_bar.size())
        throw std::invalid_argument("taylor_quadratic_lb: dimension mismatch");
    const std::complex<double> zw = (z * w_bar)(0, 0);
    QuadraticMinorant phi;
    phi.coeff = 2.0 * std::conj(zw) * z;
    phi.constant = -std::norm(zw);
    return phi;
}

conic::LinExpr RatioMinorant::realify(const conic::ComplexBlock &block, int eta_var) const
{
    conic::LinExpr e = row_product_re(coeff, block);
    e.add_term(eta_var, eta_coeff);
    return e;
}

RatioMinorant taylor_quadratic_over_affine_lb(const Eigen::RowVectorXcd &z,
                                              const Eigen::VectorXcd &w_bar, double eta_bar)
{
    if (!(eta_bar > 0.0))
        throw std::invalid_argument("taylor_quadratic_over_affine_lb: eta_bar must be positive");
    if (z.size() != w_bar.size())
        throw std::invalid_argument("taylor_quadratic_over_affine_lb: dimension mismatch");
    const std::complex<double> zw = (z * w_bar)(0, 0);
    RatioMinorant phi;
    phi.coeff = (2.0 / eta_bar) * std::conj(zw) * z;
    phi.eta_coeff = -std::norm(zw) / (eta_bar * eta_bar);
    return phi;
}

int project_phase_index(double angle, int bits)
{
    if (bits < 1)
        throw std::invalid_argument("project_phase_index: bits must be >= 1");
    const int levels = 1 << bits;
    double a = std::fmod(angle, kTwoPi);
    if (a < 0.0)
        a += kTwoPi;
    const double step = kTwoPi / static_cast<double>(levels);
    const int k = static_cast<int>(std::floor(a / step));
    const int c1 = ((k % levels) + levels) % levels;
    const int c2 = (c1 + 1) % levels;
    auto circular = [](double x, double y) {
        double diff = std::abs(x - y);
        return std::min(diff, kTwoPi - diff);
    };
    const double d1 = circular(a, grid_angle(c1, bits));
    const double d2 = circular(a, grid_angle(c2, bits));
    if (d1 < d2)
        return c1;
    if (d2 < d1)
        return c2;
    return std::min(c1, c2);
}

double grid_angle(int index, int bits)
{
    return kTwoPi * static_cast<double>(index) / static_cast<double>(1 << bits);
}

double project_phase(double angle, int bits)
{
    return grid_angle(project_phase_index(angle, bits), bits);
}

Eigen::MatrixXcd effective_rows(const ProblemContext &ctx, const Eigen::VectorXd &theta)
{
    const int n_users = ctx.layout.n_users();
    Eigen::MatrixXcd h(n_users, ctx.geometry.n_tx);
    for (int u = 0; u < n_users; ++u)
        h.row(u) = effective_channel(ctx.channels.g[u], theta, ctx.channels.f);
    return h;
}

Evaluation evaluate_state(const ProblemContext &ctx, const SolutionState &state)
{
    const Eigen::MatrixXcd h = effective_rows(ctx, state.theta);
    const NomaState ns{h, state.w, ctx.layout, state.p, state.order, ctx.budget};
    Evaluation ev;
    ev.objective = sum_objective(ns);
    const Eigen::VectorXd residuals = qos_residuals(ns);
    ev.min_qos_residual =
        residuals.size() ? residuals.minCoeff() : std::numeric_limits<double>::infinity();
    ev.power_used = state.w.colwise().squaredNorm().sum();
    return ev;
}

namespace
{

/// Least power split meeting every decode condition with equality, the
/// remainder going to the last-decoded user. Returns false when no
/// nonnegative split exists.
bool minimal_qos_power(const ProblemContext &ctx, const Eigen::MatrixXcd &h,
                       const Eigen::MatrixXcd &w, const DecodingOrder &order, int m,
                       Eigen::VectorXd &out)
{
    const int km = ctx.layout.users_per_cluster[m];
    out.resize(km);
    if (km == 1)
    {
        out(0) = 1.0;
        return true;
    }

    std::vector<int> user_at(km);
    for (int k = 0; k < km; ++k)
        user_at[order.rank[m][k]] = k;

    std::vector<double> gain(km), floor_ratio(km);
    for (int d = 0; d < km; ++d)
    {
        const int k = user_at[d];
        const int row = ctx.layout.user_index(m, k);
        gain[d] = beam_gain(h.row(row), w.col(m));
        double inter = ctx.budget.noise_w;
        for (int n = 0; n < ctx.layout.n_clusters(); ++n)
            if (n != m)
                inter += beam_gain(h.row(row), w.col(n));
        if (gain[d] <= 0.0)
            return false;
        floor_ratio[d] = inter / gain[d];
    }

    // p_d = alpha_d * t + beta_d with t the last-decoded user's power.
    std::vector<double> alpha(km), beta(km);
    alpha[km - 1] = 1.0;
    beta[km - 1] = 0.0;
    double tail_alpha = 1.0, tail_beta = 0.0;
    for (int d = km - 2; d >= 0; --d)
    {
        const int k = user_at[d];
        const double r = ctx.budget.qos_threshold(ctx.layout.user_index(m, k));
        double worst = 0.0;
        for (int e = d; e < km; ++e)
            worst = std::max(worst, floor_ratio[e]);
        alpha[d] = r * tail_alpha;
        beta[d] = r * tail_beta + r * worst;
        tail_alpha += alpha[d];
        tail_beta += beta[d];
    }
    const double t = (1.0 - tail_beta) / tail_alpha;
    if (!(t > 0.0))
        return false;
    for (int d = 0; d < km; ++d)
    {
        const int k = user_at[d];
        out(k) = alpha[d] * t + beta[d];
        if (out(k) < 0.0)
            return false;
    }
    return true;
}

} // namespace

SolutionState initialize(const ProblemContext &ctx, const ScaConfig &config, Rng &rng)
{
    ctx.layout.validate();
    ctx.budget.validate(ctx.layout.n_users());
    ctx.channels.validate(ctx.geometry);

    const int l_irs = ctx.geometry.n_irs();
    const int n_clusters = ctx.layout.n_clusters();

    // One continuous draw per element, projected onto the grid when the
    // phases are discrete. The projection of a uniform angle is uniform over
    // the grid, and resolutions sharing a seed start from matched states.
    SolutionState state;
    state.theta.resize(l_irs);
    if (config.continuous_phases)
    {
        for (int l = 0; l < l_irs; ++l)
            state.theta(l) = rng.uniform(0.0, kTwoPi);
    }
    else
    {
        state.theta_idx.resize(l_irs);
        for (int l = 0; l < l_irs; ++l)
        {
            state.theta_idx[l] =
                project_phase_index(rng.uniform(0.0, kTwoPi), config.phase_bits);
            state.theta(l) = grid_angle(state.theta_idx[l], config.phase_bits);
        }
    }
    state.v.resize(l_irs);
    for (int l = 0; l < l_irs; ++l)
        state.v(l) = unit_phase(state.theta(l));

    const Eigen::MatrixXcd h = effective_rows(ctx, state.theta);

    // Matched filter toward each cluster's strongest user, equal power split.
    state.w = Eigen::MatrixXcd::Zero(ctx.geometry.n_tx, n_clusters);
    const double per_cluster = std::sqrt(ctx.budget.p_max_w / n_clusters);
    for (int m = 0; m < n_clusters; ++m)
    {
        int strongest = 0;
        double best = -1.0;
        for (int k = 0; k < ctx.layout.users_per_cluster[m]; ++k)
        {
            const double norm = h.row(ctx.layout.user_index(m, k)).norm();
            if (norm > best)
            {
                best = norm;
                strongest = k;
            }
        }
        const Eigen::VectorXcd direction =
            h.row(ctx.layout.user_index(m, strongest)).adjoint();
        const double norm = direction.norm();
        if (norm <= 0.0)
            throw InitializationFailure("initialize: vanishing effective channel");
        state.w.col(m) = (per_cluster / norm) * direction;
    }

    state.order = order_by_effective_gain(h, state.w, ctx.layout);

    if (!feasible_power_split(ctx, h, state.w, state.order, config.feasibility_tol, state.p))
        throw InitializationFailure("initialize: no feasible power split found");
    return state;
}

bool feasible_power_split(const ProblemContext &ctx, const Eigen::MatrixXcd &h,
                          const Eigen::MatrixXcd &w, const DecodingOrder &order,
                          double feasibility_tol, PowerAllocation &out)
{
    const int n_clusters = ctx.layout.n_clusters();
    out.p.resize(n_clusters);
    for (int m = 0; m < n_clusters; ++m)
    {
        if (!minimal_qos_power(ctx, h, w, order, m, out.p[m]))
        {
            // Geometric fallback: most power to the first-decoded user.
            const int km = ctx.layout.users_per_cluster[m];
            out.p[m].resize(km);
            const double rho = 0.4;
            for (int k = 0; k < km; ++k)
                out.p[m](k) = std::pow(rho, order.rank[m][k]);
            out.p[m] /= out.p[m].sum();
        }
    }

    auto min_residual = [&](const PowerAllocation &p) {
        const NomaState ns{h, w, ctx.layout, p, order, ctx.budget};
        const Eigen::VectorXd residuals = qos_residuals(ns);
        return residuals.size() ? residuals.minCoeff()
                                : std::numeric_limits<double>::infinity();
    };
    if (min_residual(out) >= -feasibility_tol)
        return true;

    // Blend toward the uniform split in bounded steps.
    const PowerAllocation base = out;
    for (int step = 1; step <= 8; ++step)
    {
        const double mix = static_cast<double>(step) / 8.0;
        for (int m = 0; m < n_clusters; ++m)
        {
            const int km = ctx.layout.users_per_cluster[m];
            out.p[m] =
                (1.0 - mix) * base.p[m] + mix * Eigen::VectorXd::Constant(km, 1.0 / km);
        }
        if (min_residual(out) >= -feasibility_tol)
            return true;
    }
    return false;
}

ActiveSubproblem build_active_subproblem(const ProblemContext &ctx, const SolutionState &state)
{
    const int n_clusters = ctx.layout.n_clusters();
    const int n_tx = ctx.geometry.n_tx;
    const double beam_scale = std::sqrt(ctx.budget.p_max_w);
    const double noise_amp = std::sqrt(ctx.budget.noise_w);

    // Channel rows scaled so a unit-budget beam against them yields SINR-like
    // magnitudes; keeps the cone data well conditioned.
    const Eigen::MatrixXcd h = effective_rows(ctx, state.theta) * (beam_scale / noise_amp);
    const Eigen::MatrixXcd w_bar = state.w / beam_scale;

    ActiveSubproblem sub;
    sub.beam_scale = beam_scale;
    auto &prog = sub.program;

    for (int m = 0; m < n_clusters; ++m)
        sub.w_blocks.push_back(prog.add_complex_block(n_tx, "w" + std::to_string(m)));
    for (int m = 0; m < n_clusters; ++m)
    {
        sub.chi_vars.push_back(prog.add_var("chi"));
        sub.eta_vars.push_back(prog.add_var("eta"));
        sub.t_vars.push_back(prog.add_var("t"));
    }

    conic::LinExpr objective;
    for (int m = 0; m < n_clusters; ++m)
        objective += conic::LinExpr::variable(sub.t_vars[m]);
    prog.set_maximize(objective);

    for (int m = 0; m < n_clusters; ++m)
    {
        const ClusterView view = cluster_view(ctx, state, m);
        const int km = view.size;

        // Decode conditions of every non-last user, linearized in w_m.
        for (int d = 0; d + 1 < km; ++d)
        {
            if (!(view.delta[d] > 0.0))
                throw QosIncompatiblePower(
                    "active subproblem: nonpositive power margin for a decode condition");
            for (int e = d; e < km; ++e)
            {
                const int row = ctx.layout.user_index(m, view.user_at[e]);
                const QuadraticMinorant phi =
                    taylor_quadratic_lb(h.row(row), w_bar.col(m));
                conic::LinExpr bound = phi.realify(sub.w_blocks[m]);
                bound *= view.delta[d] / view.r_at[d];
                bound += -1.0;
                std::vector<conic::LinExpr> rows;
                for (int n = 0; n < n_clusters; ++n)
                {
                    if (n == m)
                        continue;
                    auto [re, im] = row_product_rows(h.row(row), sub.w_blocks[n]);
                    rows.push_back(std::move(re));
                    rows.push_back(std::move(im));
                }
                prog.add_quadratic_upper_bound(rows, bound);
            }
        }

        // Last-decoded user: hypograph scalar fed by the quadratic-over-
        // affine minorant, interference captured by eta.
        const int last_row = ctx.layout.user_index(m, view.user_at[km - 1]);
        double eta_bar = 1.0;
        for (int n = 0; n < n_clusters; ++n)
            if (n != m)
                eta_bar += std::norm((h.row(last_row) * w_bar.col(n))(0, 0));
        const RatioMinorant ratio =
            taylor_quadratic_over_affine_lb(h.row(last_row), w_bar.col(m), eta_bar);
        conic::LinExpr sinr_bound = ratio.realify(sub.w_blocks[m], sub.eta_vars[m]);
        sinr_bound *= view.p_at[km - 1];
        sinr_bound += conic::LinExpr::variable(sub.chi_vars[m], -1.0);
        prog.add_ge(sinr_bound);

        std::vector<conic::LinExpr> eta_rows;
        for (int n = 0; n < n_clusters; ++n)
        {
            if (n == m)
                continue;
            auto [re, im] = row_product_rows(h.row(last_row), sub.w_blocks[n]);
            eta_rows.push_back(std::move(re));
            eta_rows.push_back(std::move(im));
        }
        conic::LinExpr eta_bound = conic::LinExpr::variable(sub.eta_vars[m]);
        eta_bound += -1.0;
        prog.add_quadratic_upper_bound(eta_rows, eta_bound);

        prog.add_ge(conic::LinExpr::variable(sub.chi_vars[m]));
        prog.add_log_hypograph(sub.t_vars[m],
                               conic::LinExpr::variable(sub.chi_vars[m]) + conic::LinExpr(1.0));
    }

    // Total power budget in unit-budget coordinates.
    std::vector<conic::LinExpr> power_rows;
    for (int m = 0; m < n_clusters; ++m)
        for (int i = 0; i < n_tx; ++i)
        {
            power_rows.push_back(conic::LinExpr::variable(sub.w_blocks[m].re_start + i));
            power_rows.push_back(conic::LinExpr::variable(sub.w_blocks[m].im_start + i));
        }
    prog.add_soc(power_rows, conic::LinExpr(1.0));

    return sub;
}

PassiveSubproblem build_passive_subproblem(const ProblemContext &ctx, const SolutionState &state)
{
    const int n_clusters = ctx.layout.n_clusters();
    const int l_irs = ctx.geometry.n_irs();
    const double noise_amp = std::sqrt(ctx.budget.noise_w);

    // Cascaded rows z_{n,m,j} = g_{m,j}^H diag(F w_n), noise-normalized.
    std::vector<std::vector<Eigen::RowVectorXcd>> z(n_clusters);
    for (int n = 0; n < n_clusters; ++n)
    {
        z[n].resize(ctx.layout.n_users());
        for (int u = 0; u < ctx.layout.n_users(); ++u)
            z[n][u] = cascade_vector(ctx.channels.g[u], ctx.channels.f, state.w.col(n)) / noise_amp;
    }

    PassiveSubproblem sub;
    auto &prog = sub.program;
    sub.v_block = prog.add_complex_block(l_irs, "v");
    for (int m = 0; m < n_clusters; ++m)
    {
        sub.chi_vars.push_back(prog.add_var("chi"));
        sub.mu_vars.push_back(prog.add_var("mu"));
        sub.t_vars.push_back(prog.add_var("t"));
    }

    conic::LinExpr objective;
    for (int m = 0; m < n_clusters; ++m)
        objective += conic::LinExpr::variable(sub.t_vars[m]);
    prog.set_maximize(objective);

    for (int m = 0; m < n_clusters; ++m)
    {
        const ClusterView view = cluster_view(ctx, state, m);
        const int km = view.size;

        for (int d = 0; d + 1 < km; ++d)
        {
            if (!(view.delta[d] > 0.0))
                throw QosIncompatiblePower(
                    "passive subproblem: nonpositive power margin for a decode condition");
            for (int e = d; e < km; ++e)
            {
                const int row = ctx.layout.user_index(m, view.user_at[e]);
                const QuadraticMinorant phi = taylor_quadratic_lb(z[m][row], state.v);
                conic::LinExpr bound = phi.realify(sub.v_block);
                bound *= view.delta[d] / view.r_at[d];
                bound += -1.0;
                std::vector<conic::LinExpr> rows;
                for (int n = 0; n < n_clusters; ++n)
                {
                    if (n == m)
                        continue;
                    auto [re, im] = row_product_rows(z[n][row], sub.v_block);
                    rows.push_back(std::move(re));
                    rows.push_back(std::move(im));
                }
                prog.add_quadratic_upper_bound(rows, bound);
            }
        }

        const int last_row = ctx.layout.user_index(m, view.user_at[km - 1]);
        double mu_bar = 1.0;
        for (int n = 0; n < n_clusters; ++n)
            if (n != m)
                mu_bar += std::norm((z[n][last_row] * state.v)(0, 0));
        const RatioMinorant ratio =
            taylor_quadratic_over_affine_lb(z[m][last_row], state.v, mu_bar);
        conic::LinExpr sinr_bound = ratio.realify(sub.v_block, sub.mu_vars[m]);
        sinr_bound *= view.p_at[km - 1];
        sinr_bound += conic::LinExpr::variable(sub.chi_vars[m], -1.0);
        prog.add_ge(sinr_bound);

        std::vector<conic::LinExpr> mu_rows;
        for (int n = 0; n < n_clusters; ++n)
        {
            if (n == m)
                continue;
            auto [re, im] = row_product_rows(z[n][last_row], sub.v_block);
            mu_rows.push_back(std::move(re));
            mu_rows.push_back(std::move(im));
        }
        conic::LinExpr mu_bound = conic::LinExpr::variable(sub.mu_vars[m]);
        mu_bound += -1.0;
        prog.add_quadratic_upper_bound(mu_rows, mu_bound);

        prog.add_ge(conic::LinExpr::variable(sub.chi_vars[m]));
        prog.add_log_hypograph(sub.t_vars[m],
                               conic::LinExpr::variable(sub.chi_vars[m]) + conic::LinExpr(1.0));
    }

    // Per-element modulus caps.
    for (int l = 0; l < l_irs; ++l)
        prog.add_soc({conic::LinExpr::variable(sub.v_block.re_start + l),
                      conic::LinExpr::variable(sub.v_block.im_start + l)},
                     conic::LinExpr(1.0));

    return sub;
}

PowerSubproblem build_power_subproblem(const ProblemContext &ctx, const SolutionState &state)
{
    const int n_clusters = ctx.layout.n_clusters();
    const Eigen::MatrixXcd h = effective_rows(ctx, state.theta);

    PowerSubproblem sub;
    auto &prog = sub.program;
    sub.p_vars.resize(n_clusters);
    for (int m = 0; m < n_clusters; ++m)
        sub.p_vars[m] = prog.add_vars(ctx.layout.users_per_cluster[m], "p" + std::to_string(m));
    for (int m = 0; m < n_clusters; ++m)
        sub.t_vars.push_back(prog.add_var("t"));

    conic::LinExpr objective;
    for (int m = 0; m < n_clusters; ++m)
        objective += conic::LinExpr::variable(sub.t_vars[m]);
    prog.set_maximize(objective);

    for (int m = 0; m < n_clusters; ++m)
    {
        const int km = ctx.layout.users_per_cluster[m];
        std::vector<int> user_at(km);
        for (int k = 0; k < km; ++k)
            user_at[state.order.rank[m][k]] = k;

        // Simplex.
        conic::LinExpr simplex;
        for (int k = 0; k < km; ++k)
        {
            simplex += conic::LinExpr::variable(sub.p_vars[m][k]);
            prog.add_ge(conic::LinExpr::variable(sub.p_vars[m][k]));
        }
        simplex += -1.0;
        prog.add_eq(simplex);

        // Gains and interference in noise units.
        auto gain_of = [&](int row) {
            return beam_gain(h.row(row), state.w.col(m)) / ctx.budget.noise_w;
        };
        auto inter_of = [&](int row) {
            double acc = 1.0;
            for (int n = 0; n < n_clusters; ++n)
                if (n != m)
                    acc += beam_gain(h.row(row), state.w.col(n)) / ctx.budget.noise_w;
            return acc;
        };

        // Decode conditions, linear in the power factors.
        for (int d = 0; d + 1 < km; ++d)
        {
            const int k = user_at[d];
            const double r = ctx.budget.qos_threshold(ctx.layout.user_index(m, k));
            for (int e = d; e < km; ++e)
            {
                const int row = ctx.layout.user_index(m, user_at[e]);
                const double gain = gain_of(row);
                conic::LinExpr lhs = conic::LinExpr::variable(sub.p_vars[m][k], gain);
                for (int dd = d + 1; dd < km; ++dd)
                    lhs.add_term(sub.p_vars[m][user_at[dd]], -r * gain);
                lhs += -r * inter_of(row);
                prog.add_ge(lhs);
            }
        }

        // Last-decoded user's rate hypograph.
        const int last_k = user_at[km - 1];
        const int last_row = ctx.layout.user_index(m, last_k);
        const double slope = gain_of(last_row) / inter_of(last_row);
        conic::LinExpr u(1.0);
        u.add_term(sub.p_vars[m][last_k], slope);
        prog.add_log_hypograph(sub.t_vars[m], u);
    }
    return sub;
}

namespace
{

/// Applies a solved candidate only when it keeps the true objective and the
/// decode conditions within tolerance of the previous point.
bool accept_candidate(const ProblemContext &ctx, const ScaConfig &config,
                      const Evaluation &before, SolutionState &state,
                      const SolutionState &candidate)
{
    const Evaluation after = evaluate_state(ctx, candidate);
    if (after.objective < before.objective - config.feasibility_tol)
        return false;
    if (after.min_qos_residual < -config.feasibility_tol)
        return false;
    state = candidate;
    return true;
}

conic::Solution solve_with_fallback(const conic::Program &program, const ScaConfig &config)
{
    conic::Solution solution = program.solve(config.solver);
    if (solution.status == conic::SolveStatus::optimal ||
        solution.status == conic::SolveStatus::infeasible)
        return solution;
    // One deterministic retry on the other backend.
    conic::SolverOptions other = config.solver;
    other.backend = config.solver.backend == conic::SolverOptions::Backend::ipm
                        ? conic::SolverOptions::Backend::barrier
                        : conic::SolverOptions::Backend::ipm;
    other.log_encoding = conic::SolverOptions::LogEncoding::geometric_mean;
    const conic::Solution retry = program.solve(other);
    return retry.status == conic::SolveStatus::optimal ? retry : solution;
}

Eigen::VectorXcd derealify(const conic::Solution &solution, const conic::ComplexBlock &block)
{
    Eigen::VectorXcd v(block.length);
    for (int l = 0; l < block.length; ++l)
        v(l) = {solution.x(block.re_start + l), solution.x(block.im_start + l)};
    return v;
}

} // namespace

StepCode active_step(const ProblemContext &ctx, const ScaConfig &config, SolutionState &state)
{
    const Evaluation before = evaluate_state(ctx, state);
    const ActiveSubproblem sub = build_active_subproblem(ctx, state);
    const conic::Solution solution = solve_with_fallback(sub.program, config);
    if (solution.status != conic::SolveStatus::optimal)
        return StepCode::degraded;

    SolutionState candidate = state;
    for (int m = 0; m < ctx.layout.n_clusters(); ++m)
        candidate.w.col(m) = sub.beam_scale * derealify(solution, sub.w_blocks[m]);

    // Snap to the power budget if the solve overshoots it.
    const double used = candidate.w.colwise().squaredNorm().sum();
    if (used > ctx.budget.p_max_w)
        candidate.w *= std::sqrt(ctx.budget.p_max_w / used);

    return accept_candidate(ctx, config, before, state, candidate) ? StepCode::ok
                                                                   : StepCode::degraded;
}

StepCode passive_step(const ProblemContext &ctx, const ScaConfig &config, SolutionState &state)
{
    const Evaluation before = evaluate_state(ctx, state);
    const PassiveSubproblem sub = build_passive_subproblem(ctx, state);
    const conic::Solution solution = solve_with_fallback(sub.program, config);
    if (solution.status != conic::SolveStatus::optimal)
        return StepCode::degraded;

    Eigen::VectorXcd v_relaxed = derealify(solution, sub.v_block);
    for (int l = 0; l < v_relaxed.size(); ++l)
        if (std::abs(v_relaxed(l)) > 1.0)
            v_relaxed(l) /= std::abs(v_relaxed(l));

    SolutionState candidate = state;
    if (config.continuous_phases)
    {
        for (int l = 0; l < v_relaxed.size(); ++l)
            candidate.theta(l) = std::arg(v_relaxed(l));
    }
    else
    {
        for (int l = 0; l < v_relaxed.size(); ++l)
        {
            candidate.theta_idx[l] =
                project_phase_index(std::arg(v_relaxed(l)), config.phase_bits);
            candidate.theta(l) = grid_angle(candidate.theta_idx[l], config.phase_bits);
        }
    }

    // The relaxed vector always advances the next linearization; the
    // committed phases move only when they do not hurt the true objective.
    const bool committed = accept_candidate(ctx, config, before, state, candidate);
    state.v = v_relaxed;
    return committed ? StepCode::ok : StepCode::commit_rejected;
}

StepCode power_step(const ProblemContext &ctx, const ScaConfig &config, SolutionState &state)
{
    const Evaluation before = evaluate_state(ctx, state);
    const PowerSubproblem sub = build_power_subproblem(ctx, state);
    const conic::Solution solution = solve_with_fallback(sub.program, config);
    if (solution.status != conic::SolveStatus::optimal)
        return StepCode::degraded;

    SolutionState candidate = state;
    for (int m = 0; m < ctx.layout.n_clusters(); ++m)
    {
        for (int k = 0; k < ctx.layout.users_per_cluster[m]; ++k)
            candidate.p.p[m](k) = solution.x(sub.p_vars[m][k]);
    }
    candidate.p.normalize();

    return accept_candidate(ctx, config, before, state, candidate) ? StepCode::ok
                                                                   : StepCode::degraded;
}

AlgorithmResult run_algorithm1(const ProblemContext &ctx, const ScaConfig &config, Rng &rng,
                               const StepObserver &observer)
{
    AlgorithmResult result;
    result.state = initialize(ctx, config, rng);
    result.trace.initial_objective = evaluate_state(ctx, result.state).objective;

    double previous = result.trace.initial_objective;
    for (int iter = 1; iter <= config.max_outer_iters; ++iter)
    {
        const auto t0 = std::chrono::steady_clock::now();
        IterationRow row;
        row.iteration = iter;

        try
        {
            row.status_active = active_step(ctx, config, result.state);
        }
        catch (const QosIncompatiblePower &)
        {
            // A stale power split can make the linearized decode conditions
            // void; refresh the split first and retry once.
            row.status_power = power_step(ctx, config, result.state);
            row.status_active = active_step(ctx, config, result.state);
        }
        if (observer)
            observer(result.state, "active");
        row.objective_after_active = evaluate_state(ctx, result.state).objective;

        row.status_passive = passive_step(ctx, config, result.state);
        if (observer)
            observer(result.state, "passive");
        row.objective_after_passive = evaluate_state(ctx, result.state).objective;

        row.status_power = power_step(ctx, config, result.state);
        if (observer)
            observer(result.state, "power");
        const Evaluation ev = evaluate_state(ctx, result.state);
        row.objective_after_power = ev.objective;
        row.objective_total = ev.objective;
        row.min_qos_residual = ev.min_qos_residual;
        row.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
        result.trace.rows.push_back(row);
        result.iterations = iter;

        const double rel =
            std::abs(ev.objective - previous) / std::max(std::abs(previous), 1e-9);
        if (rel < config.outer_tol)
        {
            result.converged = true;
            break;
        }
        previous = ev.objective;
    }
    return result;
}

} // namespace irsnoma
