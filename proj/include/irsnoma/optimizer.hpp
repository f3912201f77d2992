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
// Alternating optimization of active beamformers, reflecting-surface phases
// and power split factors. Each round solves three convex restrictions in
// turn: a beamformer program built from first-order minorants of the SINR
// numerators, a relaxed passive-vector program followed by projection onto
// the discrete phase grid (committed only when the true objective does not
// drop), and an exact power-allocation program.

#ifndef irsnoma_optimizer_H
#define irsnoma_optimizer_H

#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "irsnoma/channel.hpp"
#include "irsnoma/conic.hpp"
#include "irsnoma/noma.hpp"
#include "irsnoma/rng.hpp"

namespace irsnoma
{

/// Affine global under-estimator of w -> |z w|^2, tight at w_bar:
/// phi(w) = real(coeff * w) + constant with
/// coeff = 2 conj(z w_bar) z and constant = -|z w_bar|^2.
struct QuadraticMinorant
{
    Eigen::RowVectorXcd coeff;
    double constant = 0.0;

    double eval(const Eigen::VectorXcd &w) const
    {
        return ((coeff * w)(0, 0)).real() + constant;
    }
    conic::LinExpr realify(const conic::ComplexBlock &block) const;
};

QuadraticMinorant taylor_quadratic_lb(const Eigen::RowVectorXcd &z,
                                      const Eigen::VectorXcd &w_bar);

/// Affine global under-estimator of (w, eta) -> |z w|^2 / eta on eta > 0,
/// tight at (w_bar, eta_bar).
struct RatioMinorant
{
    Eigen::RowVectorXcd coeff;
    double eta_coeff = 0.0;  // <= 0

    double eval(const Eigen::VectorXcd &w, double eta) const
    {
        return ((coeff * w)(0, 0)).real() + eta_coeff * eta;
    }
    conic::LinExpr realify(const conic::ComplexBlock &block, int eta_var) const;
};

RatioMinorant taylor_quadratic_over_affine_lb(const Eigen::RowVectorXcd &z,
                                              const Eigen::VectorXcd &w_bar, double eta_bar);

/// Nearest grid index of {2 pi i / 2^B} under wrap-around angular distance;
/// ties resolve to the smaller grid value.
int project_phase_index(double angle, int bits);
/// Grid angle of an index, always computed from the integer.
double grid_angle(int index, int bits);
/// project_phase_index composed with grid_angle.
double project_phase(double angle, int bits);

struct ScaConfig
{
    double outer_tol = 1e-4;        // relative objective change at the loop exit
    int max_outer_iters = 100;
    double feasibility_tol = 1e-6;  // step acceptance slack
    int phase_bits = 5;
    bool continuous_phases = false;
    long order_enum_cap = 10000;
    conic::SolverOptions solver;
};

/// Current iterate of the alternating loop. theta holds the committed
/// phases (grid-exact when discrete, via theta_idx); v is the relaxed
/// passive vector that seeds the next linearization and may differ from
/// e^{j theta} when a quantized commit was rejected.
struct SolutionState
{
    Eigen::MatrixXcd w;          // n_tx x n_clusters
    Eigen::VectorXcd v;
    Eigen::VectorXd theta;
    std::vector<int> theta_idx;  // empty in continuous-phase mode
    PowerAllocation p;
    DecodingOrder order;
};

enum class StepCode
{
    ok = 0,
    degraded = 1,        // solver failed or infeasible; previous point kept
    commit_rejected = 2  // relaxed solve accepted, quantized commit rejected
};

struct IterationRow
{
    int iteration = 0;
    double objective_total = 0.0;
    double objective_after_active = 0.0;
    double objective_after_passive = 0.0;
    double objective_after_power = 0.0;
    double min_qos_residual = 0.0;
    StepCode status_active = StepCode::ok;
    StepCode status_passive = StepCode::ok;
    StepCode status_power = StepCode::ok;
    double wall_ms = 0.0;
};

struct IterationTrace
{
    double initial_objective = 0.0;
    std::vector<IterationRow> rows;
};

struct ProblemContext
{
    const ArrayGeometry &geometry;
    const ChannelRealization &channels;
    const UserLayout &layout;
    const LinkBudget &budget;
};

class InitializationFailure : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Signals a power state whose QoS margins make the beamforming
/// restrictions infeasible by construction (some delta-p <= 0).
class QosIncompatiblePower : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Effective channel rows (one per user) for committed phases.
Eigen::MatrixXcd effective_rows(const ProblemContext &ctx, const Eigen::VectorXd &theta);

struct Evaluation
{
    double objective = 0.0;
    double min_qos_residual = 0.0;  // +inf when no user carries a decode condition
    double power_used = 0.0;
};
Evaluation evaluate_state(const ProblemContext &ctx, const SolutionState &state);

/// Least power split meeting every decode condition with equality under the
/// given beams and phases (remainder to the last-decoded user), falling
/// back to a geometric split and then to blends toward uniform. Returns
/// false when none of these is feasible.
bool feasible_power_split(const ProblemContext &ctx, const Eigen::MatrixXcd &h,
                          const Eigen::MatrixXcd &w, const DecodingOrder &order,
                          double feasibility_tol, PowerAllocation &out);

/// Feasible starting point: uniform random grid phases, matched-filter
/// beams toward each cluster's strongest user scaled to the full budget,
/// gain-ascending decode order, and the least power split meeting every
/// decode condition (remainder to the last user). Throws
/// InitializationFailure when no feasible split is found.
SolutionState initialize(const ProblemContext &ctx, const ScaConfig &config, Rng &rng);

struct ActiveSubproblem
{
    conic::Program program;
    std::vector<conic::ComplexBlock> w_blocks;
    std::vector<int> chi_vars, eta_vars, t_vars;
    double beam_scale = 1.0;  // w = beam_scale * solved block value
};
ActiveSubproblem build_active_subproblem(const ProblemContext &ctx, const SolutionState &state);

struct PassiveSubproblem
{
    conic::Program program;
    conic::ComplexBlock v_block;
    std::vector<int> chi_vars, mu_vars, t_vars;
};
PassiveSubproblem build_passive_subproblem(const ProblemContext &ctx, const SolutionState &state);

struct PowerSubproblem
{
    conic::Program program;
    std::vector<std::vector<int>> p_vars;  // per cluster, per in-cluster user
    std::vector<int> t_vars;
};
PowerSubproblem build_power_subproblem(const ProblemContext &ctx, const SolutionState &state);

StepCode active_step(const ProblemContext &ctx, const ScaConfig &config, SolutionState &state);
StepCode passive_step(const ProblemContext &ctx, const ScaConfig &config, SolutionState &state);
StepCode power_step(const ProblemContext &ctx, const ScaConfig &config, SolutionState &state);

struct AlgorithmResult
{
    SolutionState state;
    IterationTrace trace;
    bool converged = false;
    int iterations = 0;
};

/// Called after every accepted step with the step label ("active",
/// "passive", "power"); used by verification harnesses.
using StepObserver = std::function<void(const SolutionState &, const char *)>;

/// The full alternating loop: initialize, then repeat active, passive and
/// power updates until the objective settles or the round limit is hit.
AlgorithmResult run_algorithm1(const ProblemContext &ctx, const ScaConfig &config, Rng &rng,
                               const StepObserver &observer = {});

} // namespace irsnoma

#endif
