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
// Homogeneous self-dual primal-dual interior-point method for
//
//   minimize c'x   s.t.   A x = b,   G x + s = h,   s in R+^{l} x SOC(...)
//
// with Nesterov-Todd scaling and a Mehrotra predictor-corrector step.
// Search directions come from the scaled KKT system
//
//   [ 0   A'  G' ] [dx]   [bx]
//   [ A   0   0  ] [dy] = [by]
//   [ G   0  -W^2] [dz]   [bz]
//
// solved densely by eliminating dz (normal equations, Cholesky) with
// iterative refinement. Unbounded / infeasible problems are detected
// through the tau/kappa variables of the embedding.

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include <Eigen/Dense>

#include "conic_detail.hpp"

namespace irsnoma::conic::detail
{

namespace
{

constexpr double kGamma = 0.99;        // step fraction to the cone boundary
constexpr double kStepMin = 1e-6;
constexpr double kStepMax = 0.999;
constexpr double kSigmaMin = 1e-4;
constexpr double kSigmaMax = 1.0;
constexpr double kDeltaStat = 7e-8;    // static regularization
constexpr double kSafeguard = 500.0;   // allowed growth of the primal residual
constexpr double kLinsysAcc = 1e-14;
constexpr int kNitRef = 9;
constexpr double kFeastolInacc = 1e-4;
constexpr double kAbstolInacc = 5e-5;
constexpr double kReltolInacc = 5e-5;

struct ConeLayout
{
    int n_lp = 0;
    std::vector<int> soc;
    int total = 0;
};

/// Nesterov-Todd scaling state; identity when no iterate is available yet.
struct NtScaling
{
    bool identity = true;
    Eigen::VectorXd lp_w;  // sqrt(s_i / z_i)
    struct Soc
    {
        double eta = 1.0;
        double a = 1.0;       // first entry of the scaling point
        Eigen::VectorXd q;    // tail of the scaling point
    };
    std::vector<Soc> socs;
};

/// lambda = W z.
Eigen::VectorXd scale_apply(const NtScaling &w, const ConeLayout &cones, const Eigen::VectorXd &z)
{
    if (w.identity)
        return z;
    Eigen::VectorXd out(z.size());
    out.head(cones.n_lp) = w.lp_w.cwiseProduct(z.head(cones.n_lp));
    int at = cones.n_lp;
    for (std::size_t k = 0; k < cones.soc.size(); ++k)
    {
        const int dim = cones.soc[k];
        const NtScaling::Soc &sc = w.socs[k];
        const double zeta = sc.q.dot(z.segment(at + 1, dim - 1));
        out(at) = sc.eta * (sc.a * z(at) + zeta);
        out.segment(at + 1, dim - 1) =
            sc.eta * (z.segment(at + 1, dim - 1) + (z(at) + zeta / (1.0 + sc.a)) * sc.q);
        at += dim;
    }
    return out;
}

/// W^{-1} u (the scaling built from the reflected point).
Eigen::VectorXd scale_inv_apply(const NtScaling &w, const ConeLayout &cones,
                                const Eigen::VectorXd &u)
{
    if (w.identity)
        return u;
    Eigen::VectorXd out(u.size());
    out.head(cones.n_lp) = u.head(cones.n_lp).cwiseQuotient(w.lp_w);
    int at = cones.n_lp;
    for (std::size_t k = 0; k < cones.soc.size(); ++k)
    {
        const int dim = cones.soc[k];
        const NtScaling::Soc &sc = w.socs[k];
        const double zeta = sc.q.dot(u.segment(at + 1, dim - 1));
        out(at) = (sc.a * u(at) - zeta) / sc.eta;
        out.segment(at + 1, dim - 1) =
            (u.segment(at + 1, dim - 1) - (u(at) - zeta / (1.0 + sc.a)) * sc.q) / sc.eta;
        at += dim;
    }
    return out;
}

/// W^2 u.
Eigen::VectorXd w2_apply(const NtScaling &w, const ConeLayout &cones, const Eigen::VectorXd &u)
{
    if (w.identity)
        return u;
    Eigen::VectorXd out(u.size());
    out.head(cones.n_lp) = w.lp_w.array().square().matrix().cwiseProduct(u.head(cones.n_lp));
    int at = cones.n_lp;
    for (std::size_t k = 0; k < cones.soc.size(); ++k)
    {
        const int dim = cones.soc[k];
        const NtScaling::Soc &sc = w.socs[k];
        const double eta2 = sc.eta * sc.eta;
        // W^2 = eta^2 (2 wbar wbar' - J), wbar = (a, q)
        const double wbar_u = sc.a * u(at) + sc.q.dot(u.segment(at + 1, dim - 1));
        out(at) = eta2 * (2.0 * sc.a * wbar_u - u(at));
        out.segment(at + 1, dim - 1) =
            eta2 * (2.0 * wbar_u * sc.q + u.segment(at + 1, dim - 1));
        at += dim;
    }
    return out;
}

std::optional<NtScaling> update_scaling(const ConeLayout &cones, const Eigen::VectorXd &s,
                                        const Eigen::VectorXd &z)
{
    NtScaling w;
    w.identity = false;
    if ((s.head(cones.n_lp).array() <= 0.0).any() || (z.head(cones.n_lp).array() <= 0.0).any())
        return std::nullopt;
    w.lp_w = (s.head(cones.n_lp).cwiseQuotient(z.head(cones.n_lp))).cwiseSqrt();

    int at = cones.n_lp;
    for (int dim : cones.soc)
    {
        const double sres = s(at) * s(at) - s.segment(at + 1, dim - 1).squaredNorm();
        const double zres = z(at) * z(at) - z.segment(at + 1, dim - 1).squaredNorm();
        if (sres <= 0.0 || zres <= 0.0 || s(at) <= 0.0 || z(at) <= 0.0)
            return std::nullopt;

        const double snorm = std::sqrt(sres);
        const double znorm = std::sqrt(zres);
        const Eigen::VectorXd sbar = s.segment(at, dim) / snorm;
        const Eigen::VectorXd zbar = z.segment(at, dim) / znorm;

        NtScaling::Soc sc;
        sc.eta = std::sqrt(snorm / znorm);
        const double gamma = std::sqrt(0.5 * (1.0 + sbar.dot(zbar)));
        sc.a = (0.5 / gamma) * (sbar(0) + zbar(0));
        sc.q = (0.5 / gamma) * (sbar.tail(dim - 1) - zbar.tail(dim - 1));
        w.socs.push_back(std::move(sc));
        at += dim;
    }
    return w;
}

/// s = r shifted into the cone interior: r + (1 + alpha) e when needed.
Eigen::VectorXd bring_to_cone(const ConeLayout &cones, const Eigen::VectorXd &r)
{
    double alpha = -kGamma;
    for (int i = 0; i < cones.n_lp; ++i)
        if (r(i) <= 0.0 && -r(i) > alpha)
            alpha = -r(i);
    int at = cones.n_lp;
    for (int dim : cones.soc)
    {
        const double res = r(at) - r.segment(at + 1, dim - 1).norm();
        if (res <= 0.0 && -res > alpha)
            alpha = -res;
        at += dim;
    }

    Eigen::VectorXd s = r;
    alpha += 1.0;
    s.head(cones.n_lp).array() += alpha;
    at = cones.n_lp;
    for (int dim : cones.soc)
    {
        s(at) += alpha;
        at += dim;
    }
    return s;
}

/// Strict cone membership (positive LP entries, positive SOC residuals).
bool strictly_in_cone(const ConeLayout &cones, const Eigen::VectorXd &v)
{
    if ((v.head(cones.n_lp).array() <= 0.0).any())
        return false;
    int at = cones.n_lp;
    for (int dim : cones.soc)
    {
        if (v(at) <= 0.0 || v(at) * v(at) - v.segment(at + 1, dim - 1).squaredNorm() <= 0.0)
            return false;
        at += dim;
    }
    return true;
}

/// Jordan product u o v; returns the trace term sum |w_0| as in the duality
/// measure bookkeeping.
void conic_product(const ConeLayout &cones, const Eigen::VectorXd &u, const Eigen::VectorXd &v,
                   Eigen::VectorXd &out)
{
    out.head(cones.n_lp) = u.head(cones.n_lp).cwiseProduct(v.head(cones.n_lp));
    int at = cones.n_lp;
    for (int dim : cones.soc)
    {
        out(at) = u.segment(at, dim).dot(v.segment(at, dim));
        out.segment(at + 1, dim - 1) = u(at) * v.segment(at + 1, dim - 1) +
                                       v(at) * u.segment(at + 1, dim - 1);
        at += dim;
    }
}

/// Jordan division v = u \ w.
void conic_division(const ConeLayout &cones, const Eigen::VectorXd &u, const Eigen::VectorXd &w,
                    Eigen::VectorXd &v)
{
    v.head(cones.n_lp) = w.head(cones.n_lp).cwiseQuotient(u.head(cones.n_lp));
    int at = cones.n_lp;
    for (int dim : cones.soc)
    {
        const double u0 = u(at);
        const double w0 = w(at);
        const double rho = u0 * u0 - u.segment(at + 1, dim - 1).squaredNorm();
        const double zeta = u.segment(at + 1, dim - 1).dot(w.segment(at + 1, dim - 1));
        const double factor = (zeta / u0 - w0) / rho;
        v(at) = (u0 * w0 - zeta) / rho;
        v.segment(at + 1, dim - 1) =
            factor * u.segment(at + 1, dim - 1) + w.segment(at + 1, dim - 1) / u0;
        at += dim;
    }
}

/// Largest step to the cone boundary in scaled space.
double line_search(const ConeLayout &cones, const Eigen::VectorXd &lambda,
                   const Eigen::VectorXd &ds, const Eigen::VectorXd &dz, double tau, double dtau,
                   double kap, double dkap)
{
    double alpha = 10.0;
    if (cones.n_lp > 0)
    {
        const double rhomin =
            (ds.head(cones.n_lp).cwiseQuotient(lambda.head(cones.n_lp))).minCoeff();
        const double sigmamin =
            (dz.head(cones.n_lp).cwiseQuotient(lambda.head(cones.n_lp))).minCoeff();
        const double eps = 1e-13;
        if (-sigmamin > -rhomin)
            alpha = sigmamin < 0.0 ? 1.0 / (-sigmamin) : 1.0 / eps;
        else
            alpha = rhomin < 0.0 ? 1.0 / (-rhomin) : 1.0 / eps;
    }

    const double tau_cap = -tau / dtau;
    const double kap_cap = -kap / dkap;
    if (tau_cap > 0.0 && tau_cap < alpha)
        alpha = tau_cap;
    if (kap_cap > 0.0 && kap_cap < alpha)
        alpha = kap_cap;

    int at = cones.n_lp;
    for (int dim : cones.soc)
    {
        const double lk2 =
            lambda(at) * lambda(at) - lambda.segment(at + 1, dim - 1).squaredNorm();
        if (lk2 <= 0.0)
        {
            at += dim;
            continue;
        }
        const double lknorm = std::sqrt(lk2);
        const Eigen::VectorXd lkbar = lambda.segment(at, dim) / lknorm;
        const double lki = 1.0 / lknorm;

        const double lk_ds = lkbar(0) * ds(at) -
                             lkbar.tail(dim - 1).dot(ds.segment(at + 1, dim - 1));
        const double lk_dz = lkbar(0) * dz(at) -
                             lkbar.tail(dim - 1).dot(dz.segment(at + 1, dim - 1));

        double factor = (lk_ds + ds(at)) / (lkbar(0) + 1.0);
        const double rho0 = lki * lk_ds;
        const double rhotail =
            (lki * (ds.segment(at + 1, dim - 1) - factor * lkbar.tail(dim - 1))).norm();
        const double rhonorm = rhotail - rho0;

        factor = (lk_dz + dz(at)) / (lkbar(0) + 1.0);
        const double sig0 = lki * lk_dz;
        const double sigtail =
            (lki * (dz.segment(at + 1, dim - 1) - factor * lkbar.tail(dim - 1))).norm();
        const double signorm = sigtail - sig0;

        const double conic_step = std::max({0.0, rhonorm, signorm});
        if (conic_step != 0.0)
            alpha = std::min(alpha, 1.0 / conic_step);
        at += dim;
    }

    return std::clamp(alpha, kStepMin, kStepMax);
}

/// Per-iteration factorization of the scaled KKT system
///   [ dI   A'   G'  ]
///   [ A   -dI   0   ]
///   [ G    0  -W^2-dI ]
/// by dense LU with partial pivoting. Tiny signed regularization keeps the
/// matrix nonsingular even with free variables; refinement removes its bias.
class KktFactor
{
  public:
    KktFactor(const Eigen::MatrixXd &a, const Eigen::MatrixXd &g, const ConeLayout &cones)
        : a_(a), g_(g), cones_(cones), n_(static_cast<int>(g.cols())),
          p_(static_cast<int>(a.rows())), m_(static_cast<int>(g.rows()))
    {
        kkt_.resize(n_ + p_ + m_, n_ + p_ + m_);
    }

    bool factorize(const NtScaling &w)
    {
        w_ = w;
        kkt_.setZero();
        kkt_.topLeftCorner(n_, n_).diagonal().setConstant(kDeltaStat);
        if (p_ > 0)
        {
            kkt_.block(n_, 0, p_, n_) = a_;
            kkt_.block(0, n_, n_, p_) = a_.transpose();
            kkt_.block(n_, n_, p_, p_).diagonal().setConstant(-kDeltaStat);
        }
        kkt_.block(n_ + p_, 0, m_, n_) = g_;
        kkt_.block(0, n_ + p_, n_, m_) = g_.transpose();

        auto w2 = kkt_.block(n_ + p_, n_ + p_, m_, m_);
        if (w.identity)
        {
            w2.diagonal().setConstant(-1.0 - kDeltaStat);
        }
        else
        {
            for (int i = 0; i < cones_.n_lp; ++i)
                w2(i, i) = -w.lp_w(i) * w.lp_w(i) - kDeltaStat;
            int at = cones_.n_lp;
            for (std::size_t k = 0; k < cones_.soc.size(); ++k)
            {
                const int dim = cones_.soc[k];
                const NtScaling::Soc &sc = w.socs[k];
                const double eta2 = sc.eta * sc.eta;
                Eigen::VectorXd wbar(dim);
                wbar(0) = sc.a;
                wbar.tail(dim - 1) = sc.q;
                Eigen::MatrixXd block = (-2.0 * eta2) * (wbar * wbar.transpose());
                block(0, 0) += eta2;
                for (int i = 1; i < dim; ++i)
                    block(i, i) -= eta2;
                block.diagonal().array() -= kDeltaStat;
                w2.block(at, at, dim, dim) = block;
                at += dim;
            }
        }

        lu_.compute(kkt_);
        return true;
    }

    /// One LU pass (no refinement).
    void solve_once(const Eigen::VectorXd &bx, const Eigen::VectorXd &by,
                    const Eigen::VectorXd &bz, Eigen::VectorXd &dx, Eigen::VectorXd &dy,
                    Eigen::VectorXd &dz) const
    {
        Eigen::VectorXd rhs(n_ + p_ + m_);
        rhs.head(n_) = bx;
        if (p_ > 0)
            rhs.segment(n_, p_) = by;
        rhs.tail(m_) = bz;
        const Eigen::VectorXd sol = lu_.solve(rhs);
        dx = sol.head(n_);
        dy = sol.segment(n_, p_);
        dz = sol.tail(m_);
    }

    /// Elimination with iterative refinement against the unregularized KKT
    /// residuals.
    void solve(const Eigen::VectorXd &bx, const Eigen::VectorXd &by, const Eigen::VectorXd &bz,
               Eigen::VectorXd &dx, Eigen::VectorXd &dy, Eigen::VectorXd &dz) const
    {
        solve_once(bx, by, bz, dx, dy, dz);

        const double rhs_norm =
            std::max({bx.lpNorm<Eigen::Infinity>(),
                      by.size() ? by.lpNorm<Eigen::Infinity>() : 0.0,
                      bz.lpNorm<Eigen::Infinity>()});
        const double threshold = (1.0 + rhs_norm) * kLinsysAcc;

        double prev_err = std::numeric_limits<double>::max();
        for (int it = 0; it < kNitRef; ++it)
        {
            Eigen::VectorXd ex = bx - g_.transpose() * dz;
            if (a_.rows() > 0)
                ex -= a_.transpose() * dy;
            Eigen::VectorXd ey = by;
            if (a_.rows() > 0)
                ey -= a_ * dx;
            const Eigen::VectorXd ez = bz - g_ * dx + w2_apply(w_, cones_, dz);

            const double err = std::max({ex.lpNorm<Eigen::Infinity>(),
                                         ey.size() ? ey.lpNorm<Eigen::Infinity>() : 0.0,
                                         ez.lpNorm<Eigen::Infinity>()});
            if (err < threshold || err >= prev_err)
                break;
            prev_err = err;

            Eigen::VectorXd cx, cy, cz;
            solve_once(ex, ey, ez, cx, cy, cz);
            dx += cx;
            if (dy.size())
                dy += cy;
            dz += cz;
        }
    }

  private:
    const Eigen::MatrixXd &a_;
    const Eigen::MatrixXd &g_;
    ConeLayout cones_;
    int n_, p_, m_;
    NtScaling w_;
    Eigen::MatrixXd kkt_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

struct Equilibration
{
    Eigen::VectorXd col;    // x = col .* x_tilde
    Eigen::VectorXd row_a;
    Eigen::VectorXd row_g;
};

/// Ruiz equilibration; second-order cone rows share one scale so the cone
/// geometry survives the transformation.
Equilibration equilibrate(Eigen::MatrixXd &a, Eigen::VectorXd &b, Eigen::MatrixXd &g,
                          Eigen::VectorXd &h, Eigen::VectorXd &c, const ConeLayout &cones)
{
    const int n = static_cast<int>(c.size());
    Equilibration eq;
    eq.col = Eigen::VectorXd::Ones(n);
    eq.row_a = Eigen::VectorXd::Ones(a.rows());
    eq.row_g = Eigen::VectorXd::Ones(g.rows());

    for (int sweep = 0; sweep < 3; ++sweep)
    {
        Eigen::VectorXd col_max = Eigen::VectorXd::Zero(n);
        for (int j = 0; j < n; ++j)
        {
            double m = 0.0;
            if (a.rows() > 0)
                m = a.col(j).cwiseAbs().maxCoeff();
            if (g.rows() > 0)
                m = std::max(m, g.col(j).cwiseAbs().maxCoeff());
            col_max(j) = m;
        }
        Eigen::VectorXd dcol(n);
        for (int j = 0; j < n; ++j)
            dcol(j) = col_max(j) > 0.0 ? 1.0 / std::sqrt(col_max(j)) : 1.0;

        Eigen::VectorXd drow_a = Eigen::VectorXd::Ones(a.rows());
        for (int i = 0; i < a.rows(); ++i)
        {
            const double m = a.row(i).cwiseAbs().maxCoeff();
            drow_a(i) = m > 0.0 ? 1.0 / std::sqrt(m) : 1.0;
        }
        Eigen::VectorXd drow_g = Eigen::VectorXd::Ones(g.rows());
        for (int i = 0; i < cones.n_lp; ++i)
        {
            const double m = g.row(i).cwiseAbs().maxCoeff();
            drow_g(i) = m > 0.0 ? 1.0 / std::sqrt(m) : 1.0;
        }
        int at = cones.n_lp;
        for (int dim : cones.soc)
        {
            const double m = g.middleRows(at, dim).cwiseAbs().maxCoeff();
            const double scale = m > 0.0 ? 1.0 / std::sqrt(m) : 1.0;
            drow_g.segment(at, dim).setConstant(scale);
            at += dim;
        }

        for (int i = 0; i < a.rows(); ++i)
            a.row(i) *= drow_a(i);
        for (int i = 0; i < g.rows(); ++i)
            g.row(i) *= drow_g(i);
        for (int j = 0; j < n; ++j)
        {
            if (a.rows() > 0)
                a.col(j) *= dcol(j);
            g.col(j) *= dcol(j);
        }
        b = drow_a.cwiseProduct(b);
        h = drow_g.cwiseProduct(h);
        c = dcol.cwiseProduct(c);
        eq.col = eq.col.cwiseProduct(dcol);
        eq.row_a = eq.row_a.cwiseProduct(drow_a);
        eq.row_g = eq.row_g.cwiseProduct(drow_g);
    }
    return eq;
}

struct Iterate
{
    Eigen::VectorXd x, y, z, s;
    double tau = 1.0, kap = 1.0;
    // statistics of this iterate
    double gap = 0.0, mu = 0.0, kapovert = 0.0, pcost = 0.0, dcost = 0.0;
    double pres = 0.0, dres = 0.0;
    std::optional<double> relgap, pinfres, dinfres;
    int iter = 0;
};

/// Preference order between iterates when recovering from numerical issues.
bool better_than(const Iterate &a, const Iterate &b)
{
    if (a.pinfres.has_value() && a.kapovert > 1.0)
    {
        if (b.pinfres.has_value())
            return a.gap > 0.0 && b.gap > 0.0 && a.gap < b.gap && a.pinfres > 0.0 &&
                   a.pinfres < b.pres && a.mu > 0.0 && a.mu < b.mu;
        return a.gap > 0.0 && b.gap > 0.0 && a.gap < b.gap && a.mu > 0.0 && a.mu < b.mu;
    }
    return a.gap > 0.0 && b.gap > 0.0 && a.gap < b.gap && a.pres > 0.0 && a.pres < b.pres &&
           a.dres > 0.0 && a.dres < b.dres && a.kapovert > 0.0 && a.kapovert < b.kapovert &&
           a.mu > 0.0 && a.mu < b.mu;
}

enum class Verdict
{
    keep_going,
    optimal,
    primal_infeasible,
    dual_infeasible
};

Verdict check_exit(const Iterate &it, double feastol, double abstol, double reltol, double cx,
                   double by, double hz)
{
    const bool gap_ok = it.gap < abstol || (it.relgap.has_value() && *it.relgap < reltol);
    if ((-cx > 0.0 || -by - hz >= -abstol) && it.pres < feastol && it.dres < feastol && gap_ok)
        return Verdict::optimal;
    if (it.dinfres.has_value() && *it.dinfres < feastol && it.tau < it.kap)
        return Verdict::dual_infeasible;
    if ((it.pinfres.has_value() && *it.pinfres < feastol && it.tau < it.kap) ||
        (it.tau < feastol && it.kap < feastol && it.pinfres.has_value() &&
         *it.pinfres < feastol))
        return Verdict::primal_infeasible;
    return Verdict::keep_going;
}

} // namespace

RawSolution solve_ipm(const StandardForm &form, const SolverOptions &options)
{
    RawSolution result;
    if (form.n_ineq_rows() == 0)
    {
        result.message = "interior-point backend needs at least one cone row";
        return result;
    }
    if (!form.logs.empty())
    {
        result.message = "interior-point backend cannot handle native log rows";
        return result;
    }

    ConeLayout cones;
    cones.n_lp = form.n_lp;
    cones.soc = form.soc_dims;
    cones.total = form.n_ineq_rows();

    Eigen::MatrixXd a = form.a_eq;
    Eigen::MatrixXd g = form.g;
    Eigen::VectorXd b = form.b_eq;
    Eigen::VectorXd h = form.h;
    Eigen::VectorXd c = form.c;
    const Equilibration eq = equilibrate(a, b, g, h, c, cones);

    const int n = form.n;
    const int p = static_cast<int>(a.rows());
    const int m = cones.total;
    const double cone_degree = static_cast<double>(cones.n_lp + cones.soc.size());

    KktFactor kkt(a, g, cones);
    NtScaling identity;
    if (!kkt.factorize(identity))
    {
        result.message = "initial KKT factorization failed";
        return result;
    }

    Iterate it;
    Eigen::VectorXd dx1(n), dy1(p), dz1(m);
    kkt.solve(Eigen::VectorXd::Zero(n), b, h, dx1, dy1, dz1);
    it.x = dx1;
    it.s = bring_to_cone(cones, -dz1);

    Eigen::VectorXd dx2(n), dy2(p), dz2(m);
    kkt.solve(-c, Eigen::VectorXd::Zero(p), Eigen::VectorXd::Zero(m), dx2, dy2, dz2);
    it.y = dy2;
    it.z = bring_to_cone(cones, dz2);
    it.tau = 1.0;
    it.kap = 1.0;

    const double resx0 = std::max(1.0, c.norm());
    const double resy0 = std::max(1.0, b.norm());
    const double resz0 = std::max(1.0, h.norm());

    Iterate best = it;
    bool have_best = false;
    double pres_prev = std::numeric_limits<double>::max();
    double step = 0.0;

    Eigen::VectorXd rx(n), ry(p), rz(m), lambda(m);
    Eigen::VectorXd ds1(m), ds2(m), w_dz(m), ds_by_w(m), ds(m);

    Verdict verdict = Verdict::keep_going;
    bool reduced_accuracy = false;
    std::string stop_reason;

    for (int iter = 0; iter <= options.max_iters; ++iter)
    {
        it.iter = iter;

        // Residuals of the homogeneous embedding.
        rx = -g.transpose() * it.z;
        if (p > 0)
            rx -= a.transpose() * it.y;
        const double hresx = rx.norm();
        rx -= it.tau * c;

        double hresy = 0.0;
        if (p > 0)
        {
            ry = a * it.x;
            hresy = ry.norm();
            ry -= it.tau * b;
        }

        rz = it.s + g * it.x;
        const double hresz = rz.norm();
        rz -= it.tau * h;

        const double cx = c.dot(it.x);
        const double by = p > 0 ? b.dot(it.y) : 0.0;
        const double hz = h.dot(it.z);
        const double rt = it.kap + cx + by + hz;

        const double nx = it.x.norm();
        const double ny = p > 0 ? it.y.norm() : 0.0;
        const double nz = it.z.norm();
        const double ns = it.s.norm();

        it.gap = it.s.dot(it.z);
        it.mu = (it.gap + it.kap * it.tau) / (cone_degree + 1.0);
        it.kapovert = it.kap / it.tau;
        it.pcost = cx / it.tau;
        it.dcost = -(hz + by) / it.tau;
        if (it.pcost < 0.0)
            it.relgap = it.gap / (-it.pcost);
        else if (it.dcost > 0.0)
            it.relgap = it.gap / it.dcost;
        else
            it.relgap.reset();

        const double nry = p > 0 ? ry.norm() / std::max(resy0 + nx, 1.0) : 0.0;
        const double nrz = rz.norm() / std::max(resz0 + nx + ns, 1.0);
        it.pres = std::max(nry, nrz) / it.tau;
        it.dres = rx.norm() / std::max(resx0 + ny + nz, 1.0) / it.tau;

        it.pinfres.reset();
        it.dinfres.reset();
        if ((hz + by) / std::max(ny + nz, 1.0) < -options.reltol)
            it.pinfres = hresx / std::max(ny + nz, 1.0);
        if (cx / std::max(nx, 1.0) < -options.reltol)
            it.dinfres = std::max(hresy / std::max(nx, 1.0), hresz / std::max(nx + ns, 1.0));

        // Recover the best earlier iterate if this one went off the rails.
        if (iter > 0 && (it.pres > kSafeguard * pres_prev || it.gap < 0.0))
        {
            if (have_best)
                it = best;
            reduced_accuracy = true;
            stop_reason = "unreliable search direction";
            break;
        }
        pres_prev = it.pres;

        verdict = check_exit(it, options.feastol, options.abstol, options.reltol, cx, by, hz);
        if (verdict != Verdict::keep_going)
            break;

        if (iter > 0 && step == kStepMin * kGamma)
        {
            if (have_best)
                it = best;
            reduced_accuracy = true;
            stop_reason = "no further progress";
            break;
        }
        if (iter == options.max_iters)
        {
            if (have_best && !better_than(it, best))
                it = best;
            reduced_accuracy = true;
            stop_reason = "iteration limit";
            break;
        }
        if (std::isnan(it.pcost))
        {
            if (have_best && !better_than(it, best))
                it = best;
            reduced_accuracy = true;
            stop_reason = "nan encountered";
            break;
        }

        if (!have_best || better_than(it, best))
        {
            best = it;
            have_best = true;
        }

        const auto scaling = update_scaling(cones, it.s, it.z);
        if (!scaling)
        {
            if (have_best)
                it = best;
            reduced_accuracy = true;
            stop_reason = "iterate left the cone";
            break;
        }
        lambda = scale_apply(*scaling, cones, it.z);

        if (!kkt.factorize(*scaling))
        {
            if (have_best)
                it = best;
            reduced_accuracy = true;
            stop_reason = "KKT factorization failed";
            break;
        }

        kkt.solve(-c, b, h, dx1, dy1, dz1);
        const double dtau_denom =
            it.kap / it.tau - (c.dot(dx1) + (p > 0 ? b.dot(dy1) : 0.0) + h.dot(dz1));

        // Affine (predictor) direction.
        kkt.solve(rx, -ry, it.s - rz, dx2, dy2, dz2);
        const double dtauaff =
            (rt - it.kap + c.dot(dx2) + (p > 0 ? b.dot(dy2) : 0.0) + h.dot(dz2)) / dtau_denom;
        dz2 += dtauaff * dz1;
        w_dz = scale_apply(*scaling, cones, dz2);
        ds_by_w = -w_dz - lambda;
        const double dkapaff = -it.kap - it.kap / it.tau * dtauaff;
        const double alpha_aff =
            line_search(cones, lambda, ds_by_w, w_dz, it.tau, dtauaff, it.kap, dkapaff);
        const double sigma =
            std::clamp(std::pow(1.0 - alpha_aff, 3.0), kSigmaMin, kSigmaMax);
        const double sigmamu = sigma * it.mu;

        // Combined (corrector) direction.
        conic_product(cones, lambda, lambda, ds1);
        conic_product(cones, ds_by_w, w_dz, ds2);
        ds1 += ds2;
        ds1.head(cones.n_lp).array() -= sigmamu;
        {
            int at = cones.n_lp;
            for (int dim : cones.soc)
            {
                ds1(at) -= sigmamu;
                at += dim;
            }
        }
        conic_division(cones, lambda, ds1, ds_by_w);
        ds2 = scale_apply(*scaling, cones, ds_by_w);  // W (lambda \ ds1)

        const double oms = 1.0 - sigma;
        kkt.solve(oms * rx, -oms * ry, -oms * rz + ds2, dx2, dy2, dz2);
        const double bkap = it.kap * it.tau + dkapaff * dtauaff - sigmamu;
        const double dtau = (oms * rt - bkap / it.tau + c.dot(dx2) +
                             (p > 0 ? b.dot(dy2) : 0.0) + h.dot(dz2)) /
                            dtau_denom;
        dx2 += dtau * dx1;
        if (p > 0)
            dy2 += dtau * dy1;
        dz2 += dtau * dz1;
        w_dz = scale_apply(*scaling, cones, dz2);
        ds_by_w = -(ds_by_w + w_dz);
        const double dkap = -(bkap + it.kap * dtau) / it.tau;

        step = kGamma *
               line_search(cones, lambda, ds_by_w, w_dz, it.tau, dtau, it.kap, dkap);
        ds = scale_apply(*scaling, cones, ds_by_w);

        // Inexact directions can step marginally outside the cone; shrink
        // until the new iterate is strictly interior.
        bool stepped = false;
        for (int attempt = 0; attempt < 40; ++attempt)
        {
            const Eigen::VectorXd cand_s = it.s + step * ds;
            const Eigen::VectorXd cand_z = it.z + step * dz2;
            const double cand_tau = it.tau + step * dtau;
            const double cand_kap = it.kap + step * dkap;
            if (cand_tau > 0.0 && cand_kap > 0.0 && strictly_in_cone(cones, cand_s) &&
                strictly_in_cone(cones, cand_z))
            {
                it.x += step * dx2;
                if (p > 0)
                    it.y += step * dy2;
                it.z = cand_z;
                it.s = cand_s;
                it.kap = cand_kap;
                it.tau = cand_tau;
                stepped = true;
                break;
            }
            step *= 0.5;
        }
        if (!stepped)
        {
            if (have_best)
                it = best;
            reduced_accuracy = true;
            stop_reason = "cannot keep the iterate interior";
            break;
        }
    }

    if (reduced_accuracy)
    {
        const double cx = c.dot(it.x);
        const double by = p > 0 ? b.dot(it.y) : 0.0;
        const double hz = h.dot(it.z);
        verdict = check_exit(it, kFeastolInacc, kAbstolInacc, kReltolInacc, cx, by, hz);
    }

    result.iterations = it.iter;
    result.gap = it.gap / std::max(it.tau, 1e-300);
    switch (verdict)
    {
    case Verdict::optimal:
        result.status = SolveStatus::optimal;
        result.x = eq.col.cwiseProduct(it.x) / it.tau;
        if (reduced_accuracy)
        {
            result.status = SolveStatus::numerical_failure;
            result.x = eq.col.cwiseProduct(it.x) / it.tau;
            result.message = "close to optimal only (" + stop_reason + ")";
        }
        break;
    case Verdict::primal_infeasible:
        result.status = SolveStatus::infeasible;
        result.message = "primal infeasible";
        break;
    case Verdict::dual_infeasible:
        result.status = SolveStatus::numerical_failure;
        result.message = "dual infeasible (objective unbounded)";
        break;
    default:
        result.status = SolveStatus::numerical_failure;
        result.message = stop_reason.empty() ? "did not converge" : stop_reason;
        result.x = eq.col.cwiseProduct(it.x) / std::max(it.tau, 1e-300);
        break;
    }
    return result;
}

} // namespace irsnoma::conic::detail
