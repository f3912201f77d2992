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

#include "irsnoma/conic.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "conic_detail.hpp"

namespace irsnoma::conic
{

LinExpr &LinExpr::operator+=(const LinExpr &other)
{
    index.insert(index.end(), other.index.begin(), other.index.end());
    coeff.insert(coeff.end(), other.coeff.begin(), other.coeff.end());
    constant += other.constant;
    return *this;
}

LinExpr &LinExpr::operator*=(double scale)
{
    for (double &c : coeff)
        c *= scale;
    constant *= scale;
    return *this;
}

double LinExpr::eval(const Eigen::VectorXd &x) const
{
    double acc = constant;
    for (std::size_t i = 0; i < index.size(); ++i)
        acc += coeff[i] * x(index[i]);
    return acc;
}

Eigen::VectorXd LinExpr::dense(int n) const
{
    Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < index.size(); ++i)
        row(index[i]) += coeff[i];
    return row;
}

LinExpr re_inner(const Eigen::VectorXcd &a, const ComplexBlock &block)
{
    if (a.size() != block.length)
        throw std::invalid_argument("re_inner: coefficient length must match block length");
    LinExpr e;
    for (int l = 0; l < block.length; ++l)
    {
        // real(conj(a_l) v_l) = re(a_l) re(v_l) + im(a_l) im(v_l)
        e.add_term(block.re_start + l, a(l).real());
        e.add_term(block.im_start + l, a(l).imag());
    }
    return e;
}

LinExpr im_inner(const Eigen::VectorXcd &a, const ComplexBlock &block)
{
    if (a.size() != block.length)
        throw std::invalid_argument("im_inner: coefficient length must match block length");
    LinExpr e;
    for (int l = 0; l < block.length; ++l)
    {
        // imag(conj(a_l) v_l) = re(a_l) im(v_l) - im(a_l) re(v_l)
        e.add_term(block.im_start + l, a(l).real());
        e.add_term(block.re_start + l, -a(l).imag());
    }
    return e;
}

std::pair<LinExpr, LinExpr> abs_rows(const Eigen::VectorXcd &a, const ComplexBlock &block)
{
    return {re_inner(a, block), im_inner(a, block)};
}

const char *to_string(SolveStatus status)
{
    switch (status)
    {
    case SolveStatus::optimal:
        return "optimal";
    case SolveStatus::infeasible:
        return "infeasible";
    default:
        return "numerical-failure";
    }
}

int Program::add_var(const std::string &name)
{
    names_.push_back(name);
    return n_vars_++;
}

std::vector<int> Program::add_vars(int count, const std::string &name)
{
    std::vector<int> ids(count);
    for (int i = 0; i < count; ++i)
        ids[i] = add_var(name);
    return ids;
}

ComplexBlock Program::add_complex_block(int length, const std::string &name)
{
    ComplexBlock block;
    block.length = length;
    block.re_start = n_vars_;
    for (int i = 0; i < length; ++i)
        add_var(name + ".re");
    block.im_start = n_vars_;
    for (int i = 0; i < length; ++i)
        add_var(name + ".im");
    return block;
}

void Program::check_expr(const LinExpr &expr) const
{
    for (int var : expr.index)
        if (var < 0 || var >= n_vars_)
            throw std::invalid_argument("conic::Program: expression references an undeclared variable");
}

void Program::add_eq(const LinExpr &expr)
{
    check_expr(expr);
    eq_.push_back(expr);
}

void Program::add_le(const LinExpr &expr)
{
    check_expr(expr);
    le_.push_back(expr);
}

void Program::add_ge(LinExpr expr)
{
    expr *= -1.0;
    add_le(expr);
}

void Program::add_soc(const std::vector<LinExpr> &rows, const LinExpr &rhs)
{
    for (const auto &row : rows)
        check_expr(row);
    check_expr(rhs);
    soc_.push_back({rows, rhs});
}

void Program::add_quadratic_upper_bound(const std::vector<LinExpr> &rows, const LinExpr &bound)
{
    for (const auto &row : rows)
        check_expr(row);
    check_expr(bound);
    quad_.push_back({rows, bound});
}

void Program::add_log_hypograph(int t_var, const LinExpr &u)
{
    if (t_var < 0 || t_var >= n_vars_)
        throw std::invalid_argument("add_log_hypograph: undeclared hypograph variable");
    check_expr(u);
    log_.push_back({t_var, u});
}

double Program::max_violation(const Eigen::VectorXd &x) const
{
    double worst = 0.0;
    for (const auto &e : eq_)
        worst = std::max(worst, std::abs(e.eval(x)));
    for (const auto &e : le_)
        worst = std::max(worst, e.eval(x));
    for (const auto &block : soc_)
    {
        double norm2 = 0.0;
        for (const auto &row : block.rows)
        {
            const double v = row.eval(x);
            norm2 += v * v;
        }
        worst = std::max(worst, std::sqrt(norm2) - block.rhs.eval(x));
    }
    for (const auto &block : quad_)
    {
        double norm2 = 0.0;
        for (const auto &row : block.rows)
        {
            const double v = row.eval(x);
            norm2 += v * v;
        }
        worst = std::max(worst, norm2 - block.bound.eval(x));
    }
    for (const auto &block : log_)
    {
        const double u = block.u.eval(x);
        if (u <= 0.0)
            worst = std::max(worst, -u + 1.0);  // outside the log domain
        else
            worst = std::max(worst, x(block.t_var) - std::log2(u));
    }
    return std::max(worst, 0.0);
}

Solution Program::solve(const SolverOptions &options) const
{
    const detail::StandardForm form = detail::lower_program(*this, options);

    detail::RawSolution raw;
    if (options.backend == SolverOptions::Backend::barrier)
        raw = detail::solve_barrier(form, options);
    else
        raw = detail::solve_ipm(form, options);

    Solution solution;
    solution.status = raw.status;
    solution.gap = raw.gap;
    solution.iterations = raw.iterations;
    solution.message = raw.message;
    if (raw.x.size() == form.n)
    {
        solution.x = detail::recover_declared(form, raw.x);
        solution.objective_value = objective_.eval(solution.x);
        solution.max_violation = max_violation(solution.x);
    }
    else
    {
        solution.x = Eigen::VectorXd::Zero(n_vars_);
        solution.objective_value = 0.0;
        solution.max_violation = 0.0;
        if (solution.status == SolveStatus::optimal)
            solution.status = SolveStatus::numerical_failure;
    }
    return solution;
}

namespace
{

nlohmann::json expr_to_json(const LinExpr &e)
{
    return {{"index", e.index}, {"coeff", e.coeff}, {"constant", e.constant}};
}

LinExpr expr_from_json(const nlohmann::json &j)
{
    LinExpr e;
    e.index = j.at("index").get<std::vector<int>>();
    e.coeff = j.at("coeff").get<std::vector<double>>();
    e.constant = j.at("constant").get<double>();
    if (e.index.size() != e.coeff.size())
        throw std::invalid_argument("conic program JSON: index/coeff size mismatch");
    return e;
}

} // namespace

std::string Program::dump() const
{
    nlohmann::json j;
    j["format"] = "irsnoma-conic-v1";
    j["n_vars"] = n_vars_;
    j["sense"] = "maximize";
    j["objective"] = expr_to_json(objective_);
    j["eq"] = nlohmann::json::array();
    for (const auto &e : eq_)
        j["eq"].push_back(expr_to_json(e));
    j["le"] = nlohmann::json::array();
    for (const auto &e : le_)
        j["le"].push_back(expr_to_json(e));
    j["soc"] = nlohmann::json::array();
    for (const auto &block : soc_)
    {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto &row : block.rows)
            rows.push_back(expr_to_json(row));
        j["soc"].push_back({{"rows", rows}, {"rhs", expr_to_json(block.rhs)}});
    }
    j["quad"] = nlohmann::json::array();
    for (const auto &block : quad_)
    {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto &row : block.rows)
            rows.push_back(expr_to_json(row));
        j["quad"].push_back({{"rows", rows}, {"bound", expr_to_json(block.bound)}});
    }
    j["log"] = nlohmann::json::array();
    for (const auto &block : log_)
        j["log"].push_back({{"t", block.t_var}, {"u", expr_to_json(block.u)}});
    return j.dump(2);
}

Program Program::parse(const std::string &text)
{
    const nlohmann::json j = nlohmann::json::parse(text);
    if (j.at("format").get<std::string>() != "irsnoma-conic-v1")
        throw std::invalid_argument("conic program JSON: unknown format tag");

    Program program;
    program.add_vars(j.at("n_vars").get<int>());
    program.set_maximize(expr_from_json(j.at("objective")));
    for (const auto &e : j.at("eq"))
        program.add_eq(expr_from_json(e));
    for (const auto &e : j.at("le"))
        program.add_le(expr_from_json(e));
    for (const auto &block : j.at("soc"))
    {
        std::vector<LinExpr> rows;
        for (const auto &row : block.at("rows"))
            rows.push_back(expr_from_json(row));
        program.add_soc(rows, expr_from_json(block.at("rhs")));
    }
    for (const auto &block : j.at("quad"))
    {
        std::vector<LinExpr> rows;
        for (const auto &row : block.at("rows"))
            rows.push_back(expr_from_json(row));
        program.add_quadratic_upper_bound(rows, expr_from_json(block.at("bound")));
    }
    for (const auto &block : j.at("log"))
        program.add_log_hypograph(block.at("t").get<int>(), expr_from_json(block.at("u")));
    return program;
}

} // namespace irsnoma::conic
