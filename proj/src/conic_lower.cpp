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

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>

#include "conic_detail.hpp"

namespace irsnoma::conic::detail
{

namespace
{

/// Accumulated net coefficient of each variable in an expression.
std::map<int, double> net_coeffs(const LinExpr &e)
{
    std::map<int, double> m;
    for (std::size_t i = 0; i < e.index.size(); ++i)
        m[e.index[i]] += e.coeff[i];
    return m;
}

bool references(const LinExpr &e, const std::vector<char> &flag)
{
    for (int idx : e.index)
        if (flag[idx])
            return true;
    return false;
}

/// The hypograph scalars of the log blocks may appear only inside their own
/// block and in the objective, all with one common positive coefficient.
/// This keeps both encodings exact: the objective is then a monotone
/// function of the product of the log arguments.
void validate_log_shape(const Program &program, double *gamma_out)
{
    const auto &logs = program.log_blocks();
    std::vector<char> is_t(program.n_vars(), 0);
    for (const auto &block : logs)
    {
        if (is_t[block.t_var])
            throw std::invalid_argument("conic: hypograph variable used by two log blocks");
        is_t[block.t_var] = 1;
    }

    for (const auto &e : program.equalities())
        if (references(e, is_t))
            throw std::invalid_argument("conic: hypograph variable used outside its block");
    for (const auto &e : program.inequalities())
        if (references(e, is_t))
            throw std::invalid_argument("conic: hypograph variable used outside its block");
    for (const auto &block : program.soc_blocks())
    {
        for (const auto &row : block.rows)
            if (references(row, is_t))
                throw std::invalid_argument("conic: hypograph variable used outside its block");
        if (references(block.rhs, is_t))
            throw std::invalid_argument("conic: hypograph variable used outside its block");
    }
    for (const auto &block : program.quad_blocks())
    {
        for (const auto &row : block.rows)
            if (references(row, is_t))
                throw std::invalid_argument("conic: hypograph variable used outside its block");
        if (references(block.bound, is_t))
            throw std::invalid_argument("conic: hypograph variable used outside its block");
    }
    for (const auto &block : logs)
        if (references(block.u, is_t))
            throw std::invalid_argument("conic: hypograph variable used inside a log argument");

    const auto objective = net_coeffs(program.objective());
    double gamma = 0.0;
    bool have_gamma = false;
    for (const auto &[var, coeff] : objective)
    {
        if (is_t[var])
        {
            if (!have_gamma)
            {
                gamma = coeff;
                have_gamma = true;
            }
            else if (std::abs(coeff - gamma) > 1e-12 * std::max(1.0, std::abs(gamma)))
                throw std::invalid_argument(
                    "conic: hypograph variables need one common objective coefficient");
        }
        else if (coeff != 0.0)
            throw std::invalid_argument(
                "conic: objective mixes hypograph scalars with other variables");
    }
    if (!have_gamma || gamma <= 0.0)
        throw std::invalid_argument(
            "conic: log blocks present but hypograph scalars not maximized");
    for (const auto &block : logs)
        if (objective.find(block.t_var) == objective.end())
            throw std::invalid_argument(
                "conic: every hypograph scalar must appear in the objective");
    *gamma_out = gamma;
}

struct RowAccumulator
{
    std::vector<Eigen::VectorXd> rows;
    std::vector<double> rhs;

    void push(const Eigen::VectorXd &row, double h)
    {
        rows.push_back(row);
        rhs.push_back(h);
    }
};

} // namespace

StandardForm lower_program(const Program &program, const SolverOptions &options)
{
    const bool have_logs = !program.log_blocks().empty();
    const bool native_logs =
        have_logs && options.log_encoding == SolverOptions::LogEncoding::native;
    if (native_logs && options.backend == SolverOptions::Backend::ipm)
        throw std::invalid_argument("conic: native log encoding requires the barrier backend");

    double gamma = 1.0;
    if (have_logs)
        validate_log_shape(program, &gamma);

    StandardForm form;
    form.var_map.assign(program.n_vars(), -1);

    std::vector<char> drop(program.n_vars(), 0);
    if (have_logs && !native_logs)
        for (const auto &block : program.log_blocks())
            drop[block.t_var] = 1;

    int n = 0;
    for (int i = 0; i < program.n_vars(); ++i)
        if (!drop[i])
            form.var_map[i] = n++;

    auto map_expr = [&form](const LinExpr &e) {
        LinExpr mapped;
        mapped.constant = e.constant;
        for (std::size_t i = 0; i < e.index.size(); ++i)
        {
            const int solver_var = form.var_map[e.index[i]];
            if (solver_var < 0)
                throw std::invalid_argument("conic: dropped variable referenced in a constraint");
            mapped.add_term(solver_var, e.coeff[i]);
        }
        return mapped;
    };

    // Mapped log arguments (needed before the extra tree variables exist).
    std::vector<LinExpr> log_args;
    for (const auto &block : program.log_blocks())
        log_args.push_back(map_expr(block.u));

    // Pre-map every declared constraint.
    std::vector<LinExpr> eq_rows, le_rows;
    for (const auto &e : program.equalities())
        eq_rows.push_back(map_expr(e));
    for (const auto &e : program.inequalities())
        le_rows.push_back(map_expr(e));

    struct MappedCone
    {
        std::vector<LinExpr> rows;
        LinExpr rhs;
    };
    std::vector<MappedCone> cones;
    for (const auto &block : program.soc_blocks())
    {
        MappedCone cone;
        for (const auto &row : block.rows)
            cone.rows.push_back(map_expr(row));
        cone.rhs = map_expr(block.rhs);
        cones.push_back(std::move(cone));
    }
    for (const auto &block : program.quad_blocks())
    {
        if (block.rows.empty())
        {
            // sum of zero squares <= bound reduces to bound >= 0
            LinExpr le = map_expr(block.bound);
            le *= -1.0;
            le_rows.push_back(le);
            continue;
        }
        MappedCone cone;
        const LinExpr bound = map_expr(block.bound);
        for (const auto &row : block.rows)
        {
            LinExpr r = map_expr(row);
            r *= 2.0;
            cone.rows.push_back(std::move(r));
        }
        cone.rows.push_back(bound + LinExpr(-1.0));
        cone.rhs = bound + LinExpr(1.0);
        cones.push_back(std::move(cone));
    }

    // Objective. With log blocks and the geometric-mean encoding the solver
    // maximizes the 2^a-th root of the padded product of log arguments,
    // which is monotone in the declared objective.
    LinExpr solver_objective;
    if (!have_logs)
    {
        solver_objective = map_expr(program.objective());
    }
    else if (native_logs)
    {
        solver_objective = map_expr(program.objective());
        for (const auto &block : program.log_blocks())
        {
            NativeLog log;
            log.t_solver_var = form.var_map[block.t_var];
            form.logs.push_back(log);  // u filled below, after n is final
        }
    }
    else if (log_args.size() == 1)
    {
        solver_objective = log_args[0];
    }
    else
    {
        std::size_t padded = 1;
        while (padded < log_args.size())
            padded *= 2;
        std::vector<LinExpr> leaves = log_args;
        leaves.resize(padded, LinExpr(1.0));

        std::function<LinExpr(std::size_t, std::size_t)> tree =
            [&](std::size_t lo, std::size_t hi) -> LinExpr {
            if (hi - lo == 1)
                return leaves[lo];
            const std::size_t mid = (lo + hi) / 2;
            const LinExpr left = tree(lo, mid);
            const LinExpr right = tree(mid, hi);
            if (left.index.empty() && right.index.empty())
                return LinExpr(std::sqrt(left.constant * right.constant));
            const int node = n++;
            MappedCone cone;
            cone.rows.push_back(LinExpr::variable(node, 2.0));
            cone.rows.push_back(left - right);
            cone.rhs = left + right;
            cones.push_back(std::move(cone));
            return LinExpr::variable(node);
        };
        const LinExpr root = tree(0, padded);
        solver_objective = root;
        LinExpr nonneg = root;
        nonneg *= -1.0;
        le_rows.push_back(nonneg);  // root >= 0
    }

    form.n = n;
    form.c = solver_objective.dense(n) * -1.0;  // maximize -> minimize

    form.a_eq.resize(static_cast<Eigen::Index>(eq_rows.size()), n);
    form.b_eq.resize(static_cast<Eigen::Index>(eq_rows.size()));
    for (std::size_t i = 0; i < eq_rows.size(); ++i)
    {
        form.a_eq.row(static_cast<Eigen::Index>(i)) = eq_rows[i].dense(n).transpose();
        form.b_eq(static_cast<Eigen::Index>(i)) = -eq_rows[i].constant;
    }

    RowAccumulator g;
    for (const auto &e : le_rows)
        g.push(e.dense(n), -e.constant);  // coeffs*x <= -constant
    form.n_lp = static_cast<int>(g.rows.size());

    for (const auto &cone : cones)
    {
        // s_0 = h_0 - g_0'x = rhs(x); s_i = h_i - g_i'x = row_i(x)
        g.push(-cone.rhs.dense(n), cone.rhs.constant);
        for (const auto &row : cone.rows)
            g.push(-row.dense(n), row.constant);
        form.soc_dims.push_back(static_cast<int>(cone.rows.size()) + 1);
    }

    form.g.resize(static_cast<Eigen::Index>(g.rows.size()), n);
    form.h.resize(static_cast<Eigen::Index>(g.rows.size()));
    for (std::size_t i = 0; i < g.rows.size(); ++i)
    {
        form.g.row(static_cast<Eigen::Index>(i)) = g.rows[i].transpose();
        form.h(static_cast<Eigen::Index>(i)) = g.rhs[i];
    }

    if (native_logs)
        for (std::size_t i = 0; i < log_args.size(); ++i)
        {
            form.logs[i].u_row = log_args[i].dense(n);
            form.logs[i].u_const = log_args[i].constant;
        }

    if (have_logs && !native_logs)
        for (const auto &block : program.log_blocks())
        {
            form.dropped_t.push_back(block.t_var);
            form.dropped_u.push_back(block.u);
        }

    return form;
}

Eigen::VectorXd recover_declared(const StandardForm &form, const Eigen::VectorXd &x_solver)
{
    Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(form.var_map.size()));
    for (std::size_t i = 0; i < form.var_map.size(); ++i)
        if (form.var_map[i] >= 0)
            x(static_cast<Eigen::Index>(i)) = x_solver(form.var_map[i]);

    // Hypograph scalars sit on their bound at any optimum of the encoded
    // program; rebuild them from the log arguments.
    for (std::size_t i = 0; i < form.dropped_t.size(); ++i)
    {
        const double u = form.dropped_u[i].eval(x);
        x(form.dropped_t[i]) = std::log2(std::max(u, 1e-300));
    }
    return x;
}

} // namespace irsnoma::conic::detail
