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

// Suppressing-signal design.
//
// The adjacent-band spectrum of t = x + P s is F_d + F_s s, where F_K picks
// the oversampled DFT bins of the notch. Two designs are provided:
//
//   solve_lsqi:  min ||F_d + F_s s||_2            s.t. ||s||^2 <= eps
//   solve_joint: min (1-l)||F_d + F_s s||_2 + l ||x + P s||_inf
//                                                 s.t. ||s||^2 <= eps
//
// LSQI uses the Lagrange-regularized normal equations with bisection on the
// multiplier. The joint problem is cast in epigraph form as an SOCP and
// solved by the interior-point solver in socp.hpp, with ADMM as fallback.

#include "salign/alignment.hpp"
#include "salign/ofdm.hpp"
#include "salign/socp.hpp"
#include "salign/types.hpp"

#include <string>
#include <vector>

namespace salign {

// Oversampled bins (indices into the zeta*N-point grid) covering the notch:
// every bin whose centre lies in [i+1, i+K] subcarrier units, widened by
// guard_bins per side.
std::vector<int> notch_bins(const SystemConfig& cfg);

// Rows of the unnormalized zeta*N x (N+L) DFT, exp(-j 2pi m n / (zeta N)),
// restricted to the notch bins.
CMat notch_dft(const SystemConfig& cfg);

struct SpectralOperators {
    std::vector<int> bins;
    CVec F_d;  // F_K x
    CMat F_s;  // F_K P (embedded basis)
};

SpectralOperators spectral_operators(const CMat& F_K, const std::vector<int>& bins, const AlignmentBasis& P,
                                     const TimeSymbol& x);
SpectralOperators spectral_operators(const SystemConfig& cfg, const LinearMaps& maps, const AlignmentBasis& P,
                                     const QamVector& d);

enum class SolveMethod { none, least_squares, lsqi, interior_point, admm };

std::string to_string(SolveMethod m);

struct SuppressorSolution {
    CVec s;
    TimeSymbol c;
    double objective_oob = 0.0;   // ||F_d + F_s s||_2
    double objective_papr = 0.0;  // ||x + c||_inf
    double lagrange_multiplier = 0.0;
    int iterations = 0;
    double power_used = 0.0;  // ||s||^2
    bool active_budget = false;
    double duality_gap = 0.0;
    SolveMethod method = SolveMethod::none;
};

struct SolverError : Error {
    SolverError(const std::string& what, SuppressorSolution best, double gap)
        : Error(what), best_feasible(std::move(best)), duality_gap(gap)
    {
    }

    SuppressorSolution best_feasible;
    double duality_gap;
};

struct LsqiOptions {
    double norm_tol = 1e-6;  // relative tolerance on ||s||^2 against eps
    int max_iterations = 200;
    double condition_limit = 1e12;  // beyond this F_s^H F_s is treated as singular
};

SuppressorSolution solve_lsqi(const CVec& F_d, const CMat& F_s, double eps, const LsqiOptions& opts = {});

// Minimum-norm regularized solution s(l0) = -(F_s^H F_s + l0 I)^-1 F_s^H F_d.
CVec regularized_solution(const CVec& F_d, const CMat& F_s, double lagrange_multiplier);

struct JointOptions {
    socp::Options socp;
    int admm_max_iterations = 20000;
    double admm_tol = 1e-9;
    bool allow_admm_fallback = true;
};

// embedded_basis is (N+L) x m (W P in partial mode).
SuppressorSolution solve_joint(const CVec& F_d, const CMat& F_s, const CVec& x, const CMat& embedded_basis,
                               double eps, double lambda, const JointOptions& opts = {});

// ADMM path on its own; throws SolverError when not converged.
SuppressorSolution solve_joint_admm(const CVec& F_d, const CMat& F_s, const CVec& x, const CMat& embedded_basis,
                                    double eps, double lambda, const JointOptions& opts = {});

// (1-l)||F_d + F_s s|| + l||x + P s||_inf
double joint_objective(const CVec& F_d, const CMat& F_s, const CVec& x, const CMat& embedded_basis,
                       const CVec& s, double lambda);

// The configured design for one symbol: eps = alpha ||x||^2, LSQI when
// lambda == 0, the joint program otherwise. Fills c = (W) P s in both cases.
// A joint-solver failure is absorbed into its best feasible iterate and
// reported through `fell_back`.
SuppressorSolution design_suppressor(const SystemConfig& cfg, const SpectralOperators& ops, const TimeSymbol& x,
                                     const AlignmentBasis& P, bool* fell_back = nullptr);

enum class PowerPolicy { raw, shared_budget };

// shared_budget: t = (x + c) / sqrt(1 + alpha); raw: t = x + c.
TimeSymbol assemble_transmit(const TimeSymbol& x, const TimeSymbol& c, PowerPolicy policy, double alpha);

// eps = alpha * ||x||^2
double power_budget(double alpha, const TimeSymbol& x);

}  // namespace salign
