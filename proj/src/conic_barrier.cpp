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
//
// Path-following log-barrier backend. Equalities are eliminated through a
// kernel basis, a phase-I relaxation finds a strictly interior point (or a
// proof of infeasibility), and the central path is then followed with
// damped Newton steps. Unlike the interior-point backend this one also
// supports hypograph rows t <= log2(u) natively through their
// self-concordant barrier -log(ln u - t ln 2) - log u.

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "conic_detail.hpp"

namespace irsnoma::conic::detail
{

namespace
{

constexpr double kLn2 = 0.69314718055994530942;

/// Constraint pieces in the eliminated variable y (x = x0 + N y), with one
/// optional relaxation column sigma appended in phase I.
struct BarrierProblem
{
    // x = x0 + N y
    Eigen::VectorXd x0;
    Eigen::MatrixXd kernel;

    // LP rows f_i(x) = g_i'x - h_i <= 0
    Eigen::MatrixXd lp_g;
    Eigen::VectorXd lp_h;
    // SOC blocks ||G_t x - h_t|| <= h_0 - g_0'x stored per block
    struct Soc
    {
        Eigen::RowVectorXd g0;
        double h0;
        Eigen::MatrixXd gt;
        Eigen::VectorXd ht;
    };
    std::vector<Soc> socs;
    std::vector<NativeLog> logs;

    double barrier_degree() const
    {
        return static_cast<double>(lp_g.rows()) + 2.0 * static_cast<double>(socs.size()) +
               2.0 * static_cast<double>(logs.size());
    }

    Eigen::VectorXd to_x(const Eigen::VectorXd &y) const { return x0 + kernel * y; }
};

struct Eval
{
    bool in_domain = false;
    double value = 0.0;         // barrier value only
    Eigen::VectorXd grad_x;     // in x space
    Eigen::MatrixXd hess_x;
};

/// Barrier value/gradient/Hessian at x, with every constraint relaxed by
/// sigma (0 outside phase I). Returns in_domain=false when any argument
/// leaves the barrier domain.
Eval eval_barrier(const BarrierProblem &prob, const Eigen::VectorXd &x, double sigma,
                  bool with_derivatives)
{
    const int n = static_cast<int>(x.size());
    Eval ev;
    ev.grad_x = Eigen::VectorXd::Zero(n);
    if (with_derivatives)
        ev.hess_x = Eigen::MatrixXd::Zero(n, n);
    double grad_sigma = 0.0;  // kept by the caller through a closure below

    (void)grad_sigma;

    for (int i = 0; i < prob.lp_g.rows(); ++i)
    {
        const double slack = prob.lp_h(i) - prob.lp_g.row(i).dot(x) + sigma;
        if (slack <= 0.0)
            return ev;
        ev.value -= std::log(slack);
        if (with_derivatives)
        {
            const Eigen::VectorXd g = prob.lp_g.row(i).transpose() / slack;
            ev.grad_x += g;
            ev.hess_x.selfadjointView<Eigen::Lower>().rankUpdate(g);
        }
    }

    for (const auto &soc : prob.socs)
    {
        const double u0 = soc.h0 - soc.g0.dot(x) + sigma;
        const Eigen::VectorXd v = soc.gt * x - soc.ht;
        const double q = u0 * u0 - v.squaredNorm();
        if (u0 <= 0.0 || q <= 0.0)
            return ev;
        ev.value -= std::log(q);
        if (with_derivatives)
        {
            // grad q = -2 u0 g0' - 2 gt' v ; hess q = 2 g0' g0 - 2 gt' gt
            const Eigen::VectorXd gq = -2.0 * u0 * soc.g0.transpose() - 2.0 * soc.gt.transpose() * v;
            ev.grad_x -= gq / q;
            ev.hess_x.noalias() += (gq * gq.transpose()) / (q * q);
            ev.hess_x.noalias() -= (2.0 / q) * (soc.g0.transpose() * soc.g0);
            ev.hess_x.noalias() += (2.0 / q) * (soc.gt.transpose() * soc.gt);
        }
    }

    for (const auto &log : prob.logs)
    {
        const double u = log.u_row.dot(x) + log.u_const;
        if (u <= 0.0)
            return ev;
        const double r = std::log(u) - kLn2 * x(log.t_solver_var);
        if (r <= 0.0)
            return ev;
        ev.value -= std::log(r) + std::log(u);
        if (with_derivatives)
        {
            Eigen::VectorXd gr = log.u_row / u;
            gr(log.t_solver_var) -= kLn2;
            const Eigen::VectorXd gu = log.u_row / u;
            ev.grad_x += -gr / r - gu;
            ev.hess_x.noalias() += (gr * gr.transpose()) / (r * r);
            ev.hess_x.noalias() += (gu * gu.transpose()) * (1.0 + 1.0 / r);
        }
    }

    ev.in_domain = true;
    return ev;
}

struct NewtonResult
{
    bool converged = false;
    int steps = 0;
};

/// Damped Newton descent of tau*f_lin + barrier over y (phase II) or over
/// (y, sigma) (phase I, where f_lin picks out sigma). stop_early, when set,
/// aborts as soon as its predicate holds at a visited iterate.
template <typename Objective, typename StopEarly>
NewtonResult newton_descend(Objective &&objective, Eigen::VectorXd &y, int max_steps,
                            double decrement_tol, StopEarly &&stop_early)
{
    NewtonResult res;
    for (int step = 0; step < max_steps; ++step)
    {
        auto [ok, value, grad, hess] = objective(y, true);
        if (!ok)
            return res;  // should not happen: iterates stay in-domain
        if (stop_early(y))
        {
            res.converged = true;
            res.steps = step;
            return res;
        }

        Eigen::LLT<Eigen::MatrixXd> llt;
        double reg = 0.0;
        for (int attempt = 0;; ++attempt)
        {
            Eigen::MatrixXd h = hess;
            if (reg > 0.0)
                h.diagonal().array() += reg;
            llt.compute(h.selfadjointView<Eigen::Lower>());
            if (llt.info() == Eigen::Success)
                break;
            reg = reg == 0.0 ? 1e-10 * std::max(1.0, hess.diagonal().maxCoeff()) : reg * 100.0;
            if (attempt > 6)
                return res;
        }
        const Eigen::VectorXd direction = -llt.solve(grad);
        const double decrement2 = -grad.dot(direction);
        if (decrement2 * 0.5 < decrement_tol)
        {
            res.converged = true;
            res.steps = step;
            return res;
        }

        // Backtracking into the barrier domain with an Armijo condition.
        double alpha = 1.0;
        bool moved = false;
        for (int bt = 0; bt < 60; ++bt)
        {
            const Eigen::VectorXd y_try = y + alpha * direction;
            auto [ok_try, value_try, g_unused, h_unused] = objective(y_try, false);
            if (ok_try && value_try <= value + 0.25 * alpha * grad.dot(direction))
            {
                y = y_try;
                moved = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!moved)
        {
            res.steps = step;
            return res;  // stalled
        }
        res.steps = step + 1;
    }
    return res;
}

} // namespace

RawSolution solve_barrier(const StandardForm &form, const SolverOptions &options)
{
    RawSolution result;
    const int n = form.n;

    BarrierProblem prob;

    // Eliminate equalities: x = x0 + N y.
    if (form.a_eq.rows() > 0)
    {
        const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(form.a_eq);
        prob.x0 = cod.solve(form.b_eq);
        if ((form.a_eq * prob.x0 - form.b_eq).lpNorm<Eigen::Infinity>() >
            1e-9 * std::max(1.0, form.b_eq.lpNorm<Eigen::Infinity>()))
        {
            result.status = SolveStatus::infeasible;
            result.message = "equality system inconsistent";
            return result;
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(form.a_eq);
        lu.setThreshold(1e-10);
        Eigen::MatrixXd kernel = lu.kernel();
        if (kernel.cols() == 1 && kernel.isZero(0.0))
            kernel.resize(n, 0);
        // Orthonormal basis keeps reduced Hessians well conditioned and lets
        // coordinates that are absent from the equalities move exactly.
        if (kernel.cols() > 0)
        {
            Eigen::HouseholderQR<Eigen::MatrixXd> qr(kernel);
            prob.kernel = qr.householderQ() * Eigen::MatrixXd::Identity(n, kernel.cols());
        }
        else
        {
            prob.kernel.resize(n, 0);
        }
    }
    else
    {
        prob.x0 = Eigen::VectorXd::Zero(n);
        prob.kernel = Eigen::MatrixXd::Identity(n, n);
    }
    const int d = static_cast<int>(prob.kernel.cols());

    // Split the cone rows.
    prob.lp_g = form.g.topRows(form.n_lp);
    prob.lp_h = form.h.head(form.n_lp);
    {
        int at = form.n_lp;
        for (int dim : form.soc_dims)
        {
            BarrierProblem::Soc soc;
            soc.g0 = form.g.row(at);
            soc.h0 = form.h(at);
            soc.gt = -form.g.middleRows(at + 1, dim - 1);
            soc.ht = -form.h.segment(at + 1, dim - 1);
            prob.socs.push_back(std::move(soc));
            at += dim;
        }
    }
    prob.logs = form.logs;

    // The hypograph scalars are free to move down, so phase I only needs the
    // cone rows plus positivity of every log argument.
    Eigen::MatrixXd phase1_extra_g(static_cast<Eigen::Index>(prob.logs.size()), n);
    Eigen::VectorXd phase1_extra_h(static_cast<Eigen::Index>(prob.logs.size()));
    for (std::size_t i = 0; i < prob.logs.size(); ++i)
    {
        phase1_extra_g.row(static_cast<Eigen::Index>(i)) = -prob.logs[i].u_row.transpose();
        phase1_extra_h(static_cast<Eigen::Index>(i)) = prob.logs[i].u_const - 1e-10;
    }

    int total_steps = 0;

    // ---- Phase I: minimize the relaxation sigma ----
    BarrierProblem phase1 = prob;
    phase1.logs.clear();
    if (prob.logs.empty() == false)
    {
        const Eigen::Index rows = prob.lp_g.rows();
        phase1.lp_g.conservativeResize(rows + phase1_extra_g.rows(), n);
        phase1.lp_g.bottomRows(phase1_extra_g.rows()) = phase1_extra_g;
        phase1.lp_h.conservativeResize(rows + phase1_extra_h.size());
        phase1.lp_h.tail(phase1_extra_h.size()) = phase1_extra_h;
    }

    auto max_phase1_violation = [&phase1](const Eigen::VectorXd &x) {
        double worst = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < phase1.lp_g.rows(); ++i)
            worst = std::max(worst, phase1.lp_g.row(i).dot(x) - phase1.lp_h(i));
        for (const auto &soc : phase1.socs)
            worst = std::max(worst, (soc.gt * x - soc.ht).norm() - (soc.h0 - soc.g0.dot(x)));
        return worst;
    };

    Eigen::VectorXd y = Eigen::VectorXd::Zero(d);
    double sigma = max_phase1_violation(phase1.to_x(y)) + 1.0;
    const double feas_margin = 1e-7;

    {
        double tau = 1.0;
        const double nu = phase1.barrier_degree() + 1.0;
        bool strictly_feasible = sigma < -feas_margin;
        for (int stage = 0; stage < 40 && !strictly_feasible; ++stage)
        {
            Eigen::VectorXd yy(d + 1);
            yy.head(d) = y;
            yy(d) = sigma;

            auto objective = [&](const Eigen::VectorXd &point, bool deriv)
                -> std::tuple<bool, double, Eigen::VectorXd, Eigen::MatrixXd> {
                const Eigen::VectorXd x = phase1.to_x(point.head(d));
                const double sg = point(d);
                Eval ev = eval_barrier(phase1, x, sg, deriv);
                if (!ev.in_domain)
                    return {false, 0.0, {}, {}};
                const double value = tau * sg + ev.value;
                Eigen::VectorXd grad;
                Eigen::MatrixXd hess;
                if (deriv)
                {
                    grad.resize(d + 1);
                    grad.head(d) = phase1.kernel.transpose() * ev.grad_x;
                    // d/dsigma of -log(slack+sigma) terms = -sum 1/slack
                    double gs = tau;
                    Eigen::MatrixXd hxs = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), 1);
                    double hss = 0.0;
                    // Recompute the sigma couplings directly.
                    for (int i = 0; i < phase1.lp_g.rows(); ++i)
                    {
                        const double slack = phase1.lp_h(i) - phase1.lp_g.row(i).dot(x) + sg;
                        gs -= 1.0 / slack;
                        hss += 1.0 / (slack * slack);
                        hxs.col(0).noalias() -= phase1.kernel.transpose() *
                                                phase1.lp_g.row(i).transpose() /
                                                (slack * slack);
                    }
                    for (const auto &soc : phase1.socs)
                    {
                        const double u0 = soc.h0 - soc.g0.dot(x) + sg;
                        const Eigen::VectorXd v = soc.gt * x - soc.ht;
                        const double q = u0 * u0 - v.squaredNorm();
                        const Eigen::VectorXd gq_x =
                            -2.0 * u0 * soc.g0.transpose() - 2.0 * soc.gt.transpose() * v;
                        const double gq_s = 2.0 * u0;
                        gs -= gq_s / q;
                        hss += (gq_s * gq_s) / (q * q) - 2.0 / q;
                        hxs.col(0).noalias() +=
                            phase1.kernel.transpose() *
                            (gq_x * (gq_s / (q * q)) + (2.0 / q) * soc.g0.transpose());
                    }
                    grad(d) = gs;
                    hess.resize(d + 1, d + 1);
                    hess.topLeftCorner(d, d) =
                        phase1.kernel.transpose() *
                        ev.hess_x.selfadjointView<Eigen::Lower>() * phase1.kernel;
                    hess.topRightCorner(d, 1) = hxs;
                    hess.bottomLeftCorner(1, d) = hxs.transpose();
                    hess(d, d) = hss;
                }
                return {true, value, grad, hess};
            };

            auto early = [&](const Eigen::VectorXd &point) { return point(d) < -feas_margin; };
            newton_descend(objective, yy, 50, 1e-12 * std::max(1.0, tau), early);
            total_steps += 1;
            y = yy.head(d);
            sigma = yy(d);
            strictly_feasible = sigma < -feas_margin;
            if (!strictly_feasible && nu / tau < 0.1 * options.feastol)
                break;
            tau *= 10.0;
        }

        if (!strictly_feasible)
        {
            if (sigma > options.feastol)
            {
                result.status = SolveStatus::infeasible;
                result.message = "phase I lower bound positive";
            }
            else
            {
                result.status = SolveStatus::numerical_failure;
                result.message = "phase I could not find a strictly interior point";
            }
            result.iterations = total_steps;
            return result;
        }
    }

    // Place hypograph scalars strictly below their bound.
    {
        Eigen::VectorXd x = prob.to_x(y);
        bool adjusted = false;
        for (const auto &log : prob.logs)
        {
            const double u = log.u_row.dot(x) + log.u_const;
            const double target = std::log2(std::max(u, 1e-12)) - 1.0;
            // t variables are untouched by the equality elimination only if
            // they are genuinely free; project the adjustment onto y.
            Eigen::VectorXd e = Eigen::VectorXd::Zero(form.n);
            e(log.t_solver_var) = 1.0;
            const Eigen::VectorXd coeff = prob.kernel.transpose() * e;
            const double current = x(log.t_solver_var);
            const double norm2 = coeff.squaredNorm();
            if (norm2 > 1e-20)
            {
                y += coeff * ((target - current) / norm2);
                adjusted = true;
            }
        }
        if (adjusted)
            x = prob.to_x(y);
        Eval probe = eval_barrier(prob, x, 0.0, false);
        if (!probe.in_domain)
        {
            result.status = SolveStatus::numerical_failure;
            result.message = "failed to enter the log-hypograph domain";
            result.iterations = total_steps;
            return result;
        }
    }

    // ---- Phase II: follow the central path ----
    const Eigen::VectorXd cy = prob.kernel.transpose() * form.c;
    const double nu = prob.barrier_degree();
    double tau = 1.0;
    for (int stage = 0; stage < 60; ++stage)
    {
        auto objective = [&](const Eigen::VectorXd &point, bool deriv)
            -> std::tuple<bool, double, Eigen::VectorXd, Eigen::MatrixXd> {
            const Eigen::VectorXd x = prob.to_x(point);
            Eval ev = eval_barrier(prob, x, 0.0, deriv);
            if (!ev.in_domain)
                return {false, 0.0, {}, {}};
            const double value = tau * form.c.dot(x) + ev.value;
            Eigen::VectorXd grad;
            Eigen::MatrixXd hess;
            if (deriv)
            {
                grad = tau * cy + prob.kernel.transpose() * ev.grad_x;
                hess = prob.kernel.transpose() * ev.hess_x.selfadjointView<Eigen::Lower>() *
                       prob.kernel;
            }
            return {true, value, grad, hess};
        };
        auto never = [](const Eigen::VectorXd &) { return false; };
        const NewtonResult nr = newton_descend(objective, y, 80, 1e-10, never);
        total_steps += nr.steps;

        const double objective_now = form.c.dot(prob.to_x(y));
        const double gap = nu / tau;
        if (gap <= std::max(options.abstol, options.reltol * std::abs(objective_now)))
        {
            result.status = SolveStatus::optimal;
            result.x = prob.to_x(y);
            result.gap = gap;
            result.iterations = total_steps;
            return result;
        }
        tau *= 10.0;
    }

    result.status = SolveStatus::numerical_failure;
    result.message = "central path did not reach the gap target";
    result.x = prob.to_x(y);
    result.gap = nu / tau;
    result.iterations = total_steps;
    return result;
}

} // namespace irsnoma::conic::detail
