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
// Internal lowering of a declared Program to the cone standard form
//
//   minimize c'x   s.t.  A x = b,   G x + s = h,   s in R+^{n_lp} x SOC(q_1)
//   x ... SOC(q_N),      t_i <= log2(a_i'x + b_i)   (native log rows only)
//
// shared by the interior-point and barrier backends.

#ifndef irsnoma_conic_detail_H
#define irsnoma_conic_detail_H

#include <vector>

#include <Eigen/Dense>

#include "irsnoma/conic.hpp"

namespace irsnoma::conic::detail
{

struct NativeLog
{
    int t_solver_var = -1;
    Eigen::VectorXd u_row;  // over solver variables
    double u_const = 0.0;
};

struct StandardForm
{
    int n = 0;  // solver variables
    Eigen::VectorXd c;
    Eigen::MatrixXd a_eq;
    Eigen::VectorXd b_eq;
    Eigen::MatrixXd g;
    Eigen::VectorXd h;
    int n_lp = 0;
    std::vector<int> soc_dims;
    std::vector<NativeLog> logs;

    // declared-variable recovery
    std::vector<int> var_map;        // declared index -> solver index, -1 if dropped
    std::vector<int> dropped_t;      // declared indices of dropped hypograph scalars
    std::vector<LinExpr> dropped_u;  // matching u expressions over declared vars

    int n_ineq_rows() const { return static_cast<int>(g.rows()); }
};

/// Lowers the program. Throws std::invalid_argument when the geometric-mean
/// encoding is requested but the hypograph variables do not satisfy its
/// shape restriction (each t only in its own block and in the objective,
/// all with one common positive coefficient).
StandardForm lower_program(const Program &program, const SolverOptions &options);

/// Recovers declared-space values from a solver-space point.
Eigen::VectorXd recover_declared(const StandardForm &form, const Eigen::VectorXd &x_solver);

struct RawSolution
{
    SolveStatus status = SolveStatus::numerical_failure;
    Eigen::VectorXd x;  // solver space
    double gap = 0.0;
    int iterations = 0;
    std::string message;
};

RawSolution solve_ipm(const StandardForm &form, const SolverOptions &options);
RawSolution solve_barrier(const StandardForm &form, const SolverOptions &options);

} // namespace irsnoma::conic::detail

#endif
