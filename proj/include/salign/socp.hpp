// SPDX-License-Identifier: Apache-2.0
//
// salign: suppressing-alignment OFDM waveform shaping
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

#pragma once

// Small dense second-order cone programs.
//
//     minimize    c'x
//     subject to  G x + s = h,   s in K = SOC(q_1) x ... x SOC(q_p)
//
// SOC(q) = { (t, y) in R x R^(q-1) : ||y|| <= t }; SOC(1) is the half line.
// Solved by a primal-dual interior-point method with Nesterov-Todd scaling
// and a Mehrotra predictor-corrector step. There are no equality
// constraints; G must have full column rank.

#include "salign/types.hpp"

#include <string>
#include <vector>

namespace salign::socp {

struct ConeProgram {
    RVec c;
    RMat G;
    RVec h;
    std::vector<int> cones;  // block sizes, summing to G.rows()
};

struct Options {
    int max_iterations = 200;
    double gap_tol = 1e-7;   // stop when s'z <= gap_tol * (1 + |c'x|)
    double feas_tol = 1e-9;  // relative primal / dual residuals
    double step_fraction = 0.99;
};

enum class Status { optimal, iteration_limit, numerical_failure };

struct Result {
    RVec x;
    RVec s;
    RVec z;
    double primal_objective = 0.0;
    double dual_objective = 0.0;
    double gap = 0.0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    int iterations = 0;
    Status status = Status::numerical_failure;
};

std::string to_string(Status s);

Result solve(const ConeProgram& prog, const Options& opts = {});

// Exposed for testing the scaling algebra.
struct NtScaling {
    double beta = 1.0;
    RVec v;  // v'Jv = 1

    RVec apply(const RVec& y) const;          // W y
    RVec apply_inverse(const RVec& y) const;  // W^-1 y
};

NtScaling nt_scaling(const RVec& s, const RVec& z);

// Largest t >= 0 (possibly +inf) with x + t d in SOC(x.size()); x interior.
double max_cone_step(const Eigen::Ref<const RVec>& x, const Eigen::Ref<const RVec>& d);

}  // namespace salign::socp
