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

#include "irsnoma/baselines.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace irsnoma
{

namespace
{
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

Eigen::MatrixXcd zf_beamformers(const Eigen::MatrixXcd &representatives, double p_max_w,
                                bool *rank_deficient)
{
    const int m_clusters = static_cast<int>(representatives.rows());
    Eigen::MatrixXcd gram = representatives * representatives.adjoint();

    bool deficient = false;
    {
        const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(gram);
        const auto &sv = svd.singularValues();
        deficient = sv(sv.size() - 1) <= 1e-12 * sv(0);
    }
    if (deficient)
        gram.diagonal().array() += 1e-10 * gram.diagonal().real().maxCoeff();
    if (rank_deficient)
        *rank_deficient = deficient;

    Eigen::MatrixXcd w = representatives.adjoint() * gram.ldlt().solve(
                             Eigen::MatrixXcd::Identity(m_clusters, m_clusters));
    const double per_cluster = std::sqrt(p_max_w / m_clusters);
    for (int m = 0; m < m_clusters; ++m)
    {
        const double norm = w.col(m).norm();
        if (norm > 0.0)
            w.col(m) *= per_cluster / norm;
    }
    return w;
}

BaselineResult run_zf_baseline(const ProblemContext &ctx, const ScaConfig &config, Rng &rng)
{
    const int l_irs = ctx.geometry.n_irs();
    const int n_clusters = ctx.layout.n_clusters();

    Eigen::VectorXd theta0(l_irs);
    std::vector<int> theta_idx0(l_irs);
    if (config.continuous_phases)
    {
        for (int l = 0; l < l_irs; ++l)
            theta0(l) = rng.uniform(0.0, kTwoPi);
    }
    else
    {
        for (int l = 0; l < l_irs; ++l)
        {
            theta_idx0[l] = project_phase_index(rng.uniform(0.0, kTwoPi), config.phase_bits);
            theta0(l) = grid_angle(theta_idx0[l], config.phase_bits);
        }
    }

    const Eigen::MatrixXcd h0 = effective_rows(ctx, theta0);
    Eigen::MatrixXcd representatives(n_clusters, ctx.geometry.n_tx);
    for (int m = 0; m < n_clusters; ++m)
    {
        int strongest = 0;
        double best = -1.0;
        for (int k = 0; k < ctx.layout.users_per_cluster[m]; ++k)
        {
            const double norm = h0.row(ctx.layout.user_index(m, k)).norm();
            if (norm > best)
            {
                best = norm;
                strongest = k;
            }
        }
        representatives.row(m) = h0.row(ctx.layout.user_index(m, strongest));
    }
    const Eigen::MatrixXcd w = zf_beamformers(representatives, ctx.budget.p_max_w);

    const auto orders = enumerate_decoding_orders(ctx.layout, config.order_enum_cap);

    BaselineResult best_result;
    best_result.objective = -std::numeric_limits<double>::infinity();
    bool any_feasible = false;

    for (const auto &order : orders)
    {
        SolutionState state;
        state.w = w;
        state.theta = theta0;
        state.theta_idx = config.continuous_phases ? std::vector<int>{} : theta_idx0;
        state.v.resize(l_irs);
        for (int l = 0; l < l_irs; ++l)
            state.v(l) = std::polar(1.0, theta0(l));
        state.order = order;
        if (!feasible_power_split(ctx, h0, w, order, config.feasibility_tol, state.p))
            continue;
        any_feasible = true;

        IterationTrace trace;
        trace.initial_objective = evaluate_state(ctx, state).objective;
        double previous = trace.initial_objective;
        bool converged = false;
        int iterations = 0;
        for (int iter = 1; iter <= config.max_outer_iters; ++iter)
        {
            const auto t0 = std::chrono::steady_clock::now();
            IterationRow row;
            row.iteration = iter;
            row.objective_after_active = previous;  // beams stay fixed
            try
            {
                row.status_passive = passive_step(ctx, config, state);
            }
            catch (const QosIncompatiblePower &)
            {
                row.status_power = power_step(ctx, config, state);
                row.status_passive = passive_step(ctx, config, state);
            }
            row.objective_after_passive = evaluate_state(ctx, state).objective;
            row.status_power = power_step(ctx, config, state);
            const Evaluation ev = evaluate_state(ctx, state);
            row.objective_after_power = ev.objective;
            row.objective_total = ev.objective;
            row.min_qos_residual = ev.min_qos_residual;
            row.wall_ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - t0)
                              .count();
            trace.rows.push_back(row);
            iterations = iter;
            const double rel =
                std::abs(ev.objective - previous) / std::max(std::abs(previous), 1e-9);
            if (rel < config.outer_tol)
            {
                converged = true;
                break;
            }
            previous = ev.objective;
        }

        const double objective = evaluate_state(ctx, state).objective;
        if (objective > best_result.objective)
        {
            best_result.objective = objective;
            best_result.state = state;
            best_result.trace = std::move(trace);
            best_result.converged = converged;
            best_result.iterations = iterations;
        }
    }

    if (!any_feasible)
        throw InitializationFailure("zf baseline: no decode order admits a feasible split");
    return best_result;
}

double oma_objective(const ProblemContext &ctx, const Eigen::VectorXd &theta)
{
    const Eigen::MatrixXcd h = effective_rows(ctx, theta);
    const int n_users = ctx.layout.n_users();
    double total = 0.0;
    for (int u = 0; u < n_users; ++u)
        total += std::log2(1.0 + ctx.budget.p_max_w * h.row(u).squaredNorm() /
                                     ctx.budget.noise_w) /
                 n_users;
    return total;
}

namespace
{

/// One linearize-solve-project round of the orthogonal scheme's shared
/// surface configuration. Returns the relaxed vector (or the previous one on
/// solver failure).
Eigen::VectorXcd oma_passive_round(const ProblemContext &ctx, const ScaConfig &config,
                                   const Eigen::MatrixXcd &w_users, const Eigen::VectorXcd &v_bar,
                                   bool &solved)
{
    const int n_users = ctx.layout.n_users();
    const int l_irs = ctx.geometry.n_irs();
    const double noise_amp = std::sqrt(ctx.budget.noise_w);

    conic::Program prog;
    const auto v_block = prog.add_complex_block(l_irs, "v");
    std::vector<int> chi(n_users), t(n_users);
    for (int u = 0; u < n_users; ++u)
    {
        chi[u] = prog.add_var("chi");
        t[u] = prog.add_var("t");
    }
    conic::LinExpr objective;
    for (int u = 0; u < n_users; ++u)
        objective += conic::LinExpr::variable(t[u], 1.0 / n_users);
    prog.set_maximize(objective);

    for (int u = 0; u < n_users; ++u)
    {
        const Eigen::RowVectorXcd z =
            cascade_vector(ctx.channels.g[u], ctx.channels.f, w_users.col(u)) / noise_amp;
        const QuadraticMinorant phi = taylor_quadratic_lb(z, v_bar);
        conic::LinExpr slot = phi.realify(v_block);
        slot.add_term(chi[u], -1.0);
        prog.add_ge(slot);
        prog.add_ge(conic::LinExpr::variable(chi[u]));
        prog.add_log_hypograph(t[u],
                               conic::LinExpr::variable(chi[u]) + conic::LinExpr(1.0));
    }
    for (int l = 0; l < l_irs; ++l)
        prog.add_soc({conic::LinExpr::variable(v_block.re_start + l),
                      conic::LinExpr::variable(v_block.im_start + l)},
                     conic::LinExpr(1.0));

    const conic::Solution solution = prog.solve(config.solver);
    solved = solution.status == conic::SolveStatus::optimal;
    if (!solved)
        return v_bar;

    Eigen::VectorXcd v(l_irs);
    for (int l = 0; l < l_irs; ++l)
    {
        v(l) = {solution.x(v_block.re_start + l), solution.x(v_block.im_start + l)};
        if (std::abs(v(l)) > 1.0)
            v(l) /= std::abs(v(l));
    }
    return v;
}

Eigen::MatrixXcd matched_filters(const ProblemContext &ctx, const Eigen::VectorXd &theta)
{
    const Eigen::MatrixXcd h = effective_rows(ctx, theta);
    Eigen::MatrixXcd w(ctx.geometry.n_tx, ctx.layout.n_users());
    const double amplitude = std::sqrt(ctx.budget.p_max_w);
    for (int u = 0; u < ctx.layout.n_users(); ++u)
    {
        const Eigen::VectorXcd direction = h.row(u).adjoint();
        const double norm = direction.norm();
        w.col(u) = norm > 0.0 ? Eigen::VectorXcd(amplitude / norm * direction)
                              : Eigen::VectorXcd::Zero(ctx.geometry.n_tx);
    }
    return w;
}

} // namespace

BaselineResult run_oma_baseline(const ProblemContext &ctx, const ScaConfig &config, Rng &rng,
                                bool per_slot_passive)
{
    const int l_irs = ctx.geometry.n_irs();
    const int n_users = ctx.layout.n_users();

    BaselineResult result;
    SolutionState &state = result.state;
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
        state.v(l) = std::polar(1.0, state.theta(l));
    state.order.rank.resize(ctx.layout.n_clusters());
    for (int m = 0; m < ctx.layout.n_clusters(); ++m)
    {
        state.order.rank[m].resize(ctx.layout.users_per_cluster[m]);
        for (int k = 0; k < ctx.layout.users_per_cluster[m]; ++k)
            state.order.rank[m][k] = k;
    }

    if (per_slot_passive)
    {
        // Independent configuration per slot; each user's slot is a
        // single-beam alignment problem.
        double total = 0.0;
        int iterations = 0;
        for (int u = 0; u < n_users; ++u)
        {
            Eigen::VectorXd theta_u = state.theta;
            Eigen::VectorXcd v_bar = state.v;
            double slot_best = -std::numeric_limits<double>::infinity();
            for (int iter = 1; iter <= config.max_outer_iters; ++iter)
            {
                const Eigen::MatrixXcd w_users = matched_filters(ctx, theta_u);
                bool solved = false;
                ProblemContext slot_ctx = ctx;
                const Eigen::VectorXcd v =
                    oma_passive_round(slot_ctx, config, w_users, v_bar, solved);
                if (!solved)
                    break;
                Eigen::VectorXd theta_cand(l_irs);
                for (int l = 0; l < l_irs; ++l)
                    theta_cand(l) = config.continuous_phases
                                        ? std::arg(v(l))
                                        : project_phase(std::arg(v(l)), config.phase_bits);
                const Eigen::MatrixXcd h_cand = effective_rows(ctx, theta_cand);
                const double cand_rate =
                    std::log2(1.0 + ctx.budget.p_max_w * h_cand.row(u).squaredNorm() /
                                        ctx.budget.noise_w) /
                    n_users;
                const Eigen::MatrixXcd h_cur = effective_rows(ctx, theta_u);
                const double cur_rate =
                    std::log2(1.0 + ctx.budget.p_max_w * h_cur.row(u).squaredNorm() /
                                        ctx.budget.noise_w) /
                    n_users;
                v_bar = v;
                if (cand_rate >= cur_rate - config.feasibility_tol)
                    theta_u = theta_cand;
                ++iterations;
                if (std::abs(cand_rate - cur_rate) <
                    config.outer_tol * std::max(std::abs(cur_rate), 1e-9))
                    break;
                slot_best = std::max(slot_best, cand_rate);
            }
            const Eigen::MatrixXcd h_final = effective_rows(ctx, theta_u);
            total += std::log2(1.0 + ctx.budget.p_max_w * h_final.row(u).squaredNorm() /
                                         ctx.budget.noise_w) /
                     n_users;
            if (u == 0)
                state.theta = theta_u;
        }
        result.objective = total;
        result.converged = true;
        result.iterations = iterations;
        result.trace.initial_objective = total;
        return result;
    }

    result.trace.initial_objective = oma_objective(ctx, state.theta);
    double previous = result.trace.initial_objective;
    for (int iter = 1; iter <= config.max_outer_iters; ++iter)
    {
        const auto t0 = std::chrono::steady_clock::now();
        IterationRow row;
        row.iteration = iter;
        row.objective_after_active = previous;  // matched filters are implicit

        const Eigen::MatrixXcd w_users = matched_filters(ctx, state.theta);
        state.w = w_users;
        bool solved = false;
        const Eigen::VectorXcd v = oma_passive_round(ctx, config, w_users, state.v, solved);
        if (solved)
        {
            Eigen::VectorXd theta_cand(l_irs);
            std::vector<int> idx_cand(state.theta_idx);
            for (int l = 0; l < l_irs; ++l)
            {
                if (config.continuous_phases)
                    theta_cand(l) = std::arg(v(l));
                else
                {
                    idx_cand[l] = project_phase_index(std::arg(v(l)), config.phase_bits);
                    theta_cand(l) = grid_angle(idx_cand[l], config.phase_bits);
                }
            }
            // Commit only when the slot-rate sum does not drop.
            if (oma_objective(ctx, theta_cand) >=
                oma_objective(ctx, state.theta) - config.feasibility_tol)
            {
                state.theta = theta_cand;
                state.theta_idx = idx_cand;
                row.status_passive = StepCode::ok;
            }
            else
            {
                row.status_passive = StepCode::commit_rejected;
            }
            state.v = v;
        }
        else
        {
            row.status_passive = StepCode::degraded;
        }

        const double objective = oma_objective(ctx, state.theta);
        row.objective_after_passive = objective;
        row.objective_after_power = objective;
        row.objective_total = objective;
        row.min_qos_residual = std::numeric_limits<double>::infinity();
        row.wall_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
        result.trace.rows.push_back(row);
        result.iterations = iter;

        const double rel = std::abs(objective - previous) / std::max(std::abs(previous), 1e-9);
        if (rel < config.outer_tol)
        {
            result.converged = true;
            break;
        }
        previous = objective;
    }

    state.w = matched_filters(ctx, state.theta);
    result.objective = oma_objective(ctx, state.theta);
    return result;
}

} // namespace irsnoma
