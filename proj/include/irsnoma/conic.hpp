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
// Solver-agnostic convex program representation. A Program collects real
// variables, a linear objective (maximize) and constraint blocks: linear
// equalities/inequalities, second-order cones ||rows(x)|| <= rhs(x),
// quadratic upper bounds sum rows(x)^2 <= bound(x) (rotated cones), and
// log-hypograph blocks t <= log2(u(x)). Complex model variables enter
// through a (re, im) expansion that maps real(a^H x) and |a^H x|^2 to exact
// real counterparts.

#ifndef irsnoma_conic_H
#define irsnoma_conic_H

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace irsnoma::conic
{

/// Sparse affine form sum_i coeff_i * x_{index_i} + constant.
struct LinExpr
{
    std::vector<int> index;
    std::vector<double> coeff;
    double constant = 0.0;

    LinExpr() = default;
    explicit LinExpr(double c) : constant(c) {}

    static LinExpr variable(int var, double scale = 1.0)
    {
        LinExpr e;
        e.index.push_back(var);
        e.coeff.push_back(scale);
        return e;
    }

    LinExpr &add_term(int var, double scale)
    {
        index.push_back(var);
        coeff.push_back(scale);
        return *this;
    }

    LinExpr &operator+=(const LinExpr &other);
    LinExpr &operator+=(double c)
    {
        constant += c;
        return *this;
    }
    LinExpr &operator*=(double scale);

    double eval(const Eigen::VectorXd &x) const;
    /// Dense coefficient vector of length n (constant not included).
    Eigen::VectorXd dense(int n) const;
};

inline LinExpr operator+(LinExpr a, const LinExpr &b) { return a += b; }
inline LinExpr operator*(double scale, LinExpr e) { return e *= scale; }
inline LinExpr operator-(LinExpr a, const LinExpr &b)
{
    LinExpr nb = b;
    nb *= -1.0;
    return a += nb;
}

/// Handle to a complex vector variable realified as a contiguous (re, im)
/// block: element l has real part at re_start + l and imaginary part at
/// im_start + l.
struct ComplexBlock
{
    int re_start = 0;
    int im_start = 0;
    int length = 0;
};

/// real(sum_l conj(a_l) * v_l) as a real affine form over the block.
LinExpr re_inner(const Eigen::VectorXcd &a, const ComplexBlock &block);
/// imag(sum_l conj(a_l) * v_l).
LinExpr im_inner(const Eigen::VectorXcd &a, const ComplexBlock &block);
/// The two rows whose squared sum equals |sum_l conj(a_l) * v_l|^2.
std::pair<LinExpr, LinExpr> abs_rows(const Eigen::VectorXcd &a, const ComplexBlock &block);

enum class SolveStatus
{
    optimal,
    infeasible,
    numerical_failure
};

const char *to_string(SolveStatus status);

struct SolverOptions
{
    enum class Backend
    {
        ipm,      // homogeneous primal-dual interior point (cone form)
        barrier   // path-following log barrier (supports native log blocks)
    };
    enum class LogEncoding
    {
        geometric_mean,  // power-of-two geometric-mean cone tree (SOC only)
        native           // exact log barrier; requires the barrier backend
    };

    Backend backend = Backend::ipm;
    LogEncoding log_encoding = LogEncoding::geometric_mean;
    double feastol = 1e-8;
    double reltol = 1e-8;
    double abstol = 1e-8;
    int max_iters = 200;
};

struct Solution
{
    SolveStatus status = SolveStatus::numerical_failure;
    Eigen::VectorXd x;           // values of the declared variables
    double objective_value = 0.0;
    double max_violation = 0.0;  // re-checked against the declared blocks
    double gap = 0.0;            // solver-reported duality gap
    int iterations = 0;
    std::string message;
};

class Program
{
  public:
    int n_vars() const { return n_vars_; }

    int add_var(const std::string &name = {});
    std::vector<int> add_vars(int count, const std::string &name = {});
    ComplexBlock add_complex_block(int length, const std::string &name = {});

    void set_maximize(const LinExpr &objective) { objective_ = objective; }
    const LinExpr &objective() const { return objective_; }

    /// expr(x) == 0.
    void add_eq(const LinExpr &expr);
    /// expr(x) <= 0.
    void add_le(const LinExpr &expr);
    /// expr(x) >= 0.
    void add_ge(LinExpr expr);
    /// ||rows(x)||_2 <= rhs(x).
    void add_soc(const std::vector<LinExpr> &rows, const LinExpr &rhs);
    /// sum_i rows_i(x)^2 <= bound(x). With no rows this degenerates to
    /// bound(x) >= 0.
    void add_quadratic_upper_bound(const std::vector<LinExpr> &rows, const LinExpr &bound);
    /// t <= log2(u(x)) for a declared scalar variable t; u must stay
    /// positive on the feasible set.
    void add_log_hypograph(int t_var, const LinExpr &u);

    /// Largest violation of any declared block at x (0 when feasible).
    /// Equalities count as |expr|, inequalities as max(0, expr), cones as
    /// max(0, ||rows|| - rhs), log blocks as max(0, t - log2(u)).
    double max_violation(const Eigen::VectorXd &x) const;

    Solution solve(const SolverOptions &options = {}) const;

    /// Plain-text dump / reload of the declared program (JSON schema
    /// "irsnoma-conic-v1"), for offline cross-checking with other solvers.
    std::string dump() const;
    static Program parse(const std::string &text);

    // Declared block storage, visible so that independent checkers
    // (oracles, feasibility evaluators) can walk the program.
    struct SocBlock
    {
        std::vector<LinExpr> rows;
        LinExpr rhs;
    };
    struct QuadBlock
    {
        std::vector<LinExpr> rows;
        LinExpr bound;
    };
    struct LogBlock
    {
        int t_var;
        LinExpr u;
    };

    const std::vector<LinExpr> &equalities() const { return eq_; }
    const std::vector<LinExpr> &inequalities() const { return le_; }
    const std::vector<SocBlock> &soc_blocks() const { return soc_; }
    const std::vector<QuadBlock> &quad_blocks() const { return quad_; }
    const std::vector<LogBlock> &log_blocks() const { return log_; }

  private:
    void check_expr(const LinExpr &expr) const;

    int n_vars_ = 0;
    LinExpr objective_;
    std::vector<LinExpr> eq_;   // expr == 0
    std::vector<LinExpr> le_;   // expr <= 0
    std::vector<SocBlock> soc_;
    std::vector<QuadBlock> quad_;
    std::vector<LogBlock> log_;
    std::vector<std::string> names_;
};

} // namespace irsnoma::conic

#endif
