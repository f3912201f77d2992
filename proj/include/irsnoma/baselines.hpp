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

#ifndef irsnoma_baselines_H
#define irsnoma_baselines_H

#include "irsnoma/optimizer.hpp"

namespace irsnoma
{

enum class BaselineKind
{
    zf_noma,
    oma_zf
};

/// Zero-forcing beams against stacked representative rows (one per
/// cluster): W = H^H (H H^H)^{-1}, columns normalized, then an equal power
/// split onto the budget. Rank-deficient stacks fall back to a regularized
/// inverse and set *rank_deficient.
Eigen::MatrixXcd zf_beamformers(const Eigen::MatrixXcd &representatives, double p_max_w,
                                bool *rank_deficient = nullptr);

struct BaselineResult
{
    double objective = 0.0;   // bits/s/Hz
    SolutionState state;      // for the OMA scheme, w holds per-user columns
    IterationTrace trace;
    bool converged = false;
    int iterations = 0;
};

/// Zero-forcing reference: exhaustive decode-order search, beams fixed by
/// zero-forcing on the per-cluster representative rows (strongest channel
/// norm), phases and powers optimized by the alternating machinery.
BaselineResult run_zf_baseline(const ProblemContext &ctx, const ScaConfig &config, Rng &rng);

/// Orthogonal reference: equal time slots, one user per slot at full power
/// with its matched filter, one shared surface configuration optimized for
/// the slot-rate sum (per_slot_passive switches to one configuration per
/// slot).
BaselineResult run_oma_baseline(const ProblemContext &ctx, const ScaConfig &config, Rng &rng,
                                bool per_slot_passive = false);

/// The orthogonal scheme's objective at committed phases:
/// sum over users of (1/K) log2(1 + p_max ||h_u||^2 / noise).
double oma_objective(const ProblemContext &ctx, const Eigen::VectorXd &theta);

} // namespace irsnoma

#endif
