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


#include "oracles.hpp"
#include "salign/alignment.hpp"
#include "salign/suppressor.hpp"

#include <doctest.h>

#include <cmath>

using namespace salign;

namespace {

struct Instance {
    SystemConfig cfg;
    LinearMaps maps;
    AlignmentBasis P;
    TimeSymbol x;
    SpectralOperators ops;
};

Instance make_instance(const SystemConfig& cfg, Rng& rng)
{
    Instance in{cfg, build_maps(cfg), {}, {}, {}};
    const ToeplitzChannel H = toeplitz_channel(draw_channel(cfg.num_taps, rng), cfg.frame_length());
    in.P = cfg.R == 0 ? null_basis(in.maps.B, H)
                      : null_basis_partial(in.maps.B, H, sync_selector(cfg.N, cfg.L, cfg.R));
    Bits bits(static_cast<std::size_t>(in.maps.active_count() * bits_per_symbol(cfg.mod_order)));
    for (auto& b : bits) {
        b = static_cast<std::uint8_t>(rng() & 1U);
    }
    in.x = ofdm_modulate(qam_modulate(bits, cfg.mod_order), in.maps);
    in.ops = spectral_operators(notch_dft(cfg), notch_bins(cfg), in.P, in.x);
    return in;
}

SystemConfig small_config()
{
    SystemConfig c;
    c.N = 16;
    c.L = 4;
    c.notch_start = 4;
    c.notch_width = 3;
    c.num_taps = 5;
    return c;
}

}  // namespace

TEST_CASE("notch bins cover the adjacent band")
{
    const SystemConfig cfg;
    const std::vector<int> bins = notch_bins(cfg);
    REQUIRE(bins.size() == 37);
    CHECK(bins.front() == 84);
    CHECK(bins.back() == 120);
    SystemConfig wide = cfg;
    wide.guard_bins = 2;
    CHECK(notch_bins(wide).size() == 41);
    CHECK(notch_bins(wide).front() == 82);

    const CMat F_K = notch_dft(cfg);
    CHECK(F_K.rows() == 37);
    CHECK(F_K.cols() == 80);
}

TEST_CASE("spectral operators agree with a direct oversampled DFT")
{
    const SystemConfig cfg;
    Rng rng = make_stream(51, 0, 0);
    const Instance in = make_instance(cfg, rng);
    const CVec ref = oracle::oversampled_dft(in.x.samples, cfg.zeta * cfg.N, in.ops.bins);
    CHECK((in.ops.F_d - ref).norm() < 1e-10 * ref.norm());

    const CVec s = in.P.basis.col(0);
    const CVec ref_s = oracle::oversampled_dft(in.P.embedded * s, cfg.zeta * cfg.N, in.ops.bins);
    CHECK((in.ops.F_s * s - ref_s).norm() < 1e-10 * ref_s.norm());

    const SpectralOperators zero = spectral_operators(cfg, in.maps, in.P, QamVector{CVec::Zero(53)});
    CHECK(zero.F_d.norm() == 0.0);
}

TEST_CASE("a single active tone peaks at its own bin")
{
    SystemConfig cfg = small_config();
    cfg.zeta = 1;
    cfg.notch_start = 4;
    cfg.notch_width = 1;  // notch is bin 5
    const LinearMaps maps = build_maps(cfg);
    CVec X = CVec::Zero(cfg.N);
    X(5) = 1.0;
    const CVec body = oracle::unitary_idft(X);
    CVec t(cfg.frame_length());
    t << body.tail(cfg.L), body;
    std::vector<int> all(static_cast<std::size_t>(cfg.N));
    for (int k = 0; k < cfg.N; ++k) {
        all[static_cast<std::size_t>(k)] = k;
    }
    const CVec spectrum = oracle::oversampled_dft(t, cfg.N, all);
    Eigen::Index peak = 0;
    spectrum.cwiseAbs().maxCoeff(&peak);
    CHECK(peak == 5);
    (void)maps;
}

TEST_CASE("lsqi: trivial cases")
{
    Rng rng = make_stream(52, 0, 0);
    const Instance in = make_instance(small_config(), rng);

    const SuppressorSolution zero = solve_lsqi(CVec::Zero(in.ops.F_d.size()), in.ops.F_s, 1.0);
    CHECK(zero.s.norm() == 0.0);
    CHECK(zero.objective_oob == 0.0);

    const SuppressorSolution free = solve_lsqi(in.ops.F_d, in.ops.F_s, kInf);
    CHECK(free.lagrange_multiplier == 0.0);
    CHECK_FALSE(free.active_budget);
    const CVec normal = in.ops.F_s.adjoint() * (in.ops.F_d + in.ops.F_s * free.s);
    CHECK(normal.norm() < 1e-9 * (in.ops.F_s.adjoint() * in.ops.F_d).norm());
}

TEST_CASE("lsqi: unlimited budget on a numerically singular gram")
{
    // The notch operator of the reference setup has eigenvalues far below
    // the condition limit; the unlimited solve is the minimum-norm fit.
    const SystemConfig cfg;
    Rng rng = make_stream(53, 0, 0);
    const Instance in = make_instance(cfg, rng);
    const SuppressorSolution free = solve_lsqi(in.ops.F_d, in.ops.F_s, kInf);
    CHECK(free.lagrange_multiplier == 0.0);
    CHECK_FALSE(free.active_budget);
    CHECK(std::isfinite(free.s.norm()));
    for (double l0 : {1e-6, 1e-3, 1.0}) {
        const CVec r = regularized_solution(in.ops.F_d, in.ops.F_s, l0);
        CHECK(free.objective_oob <= (in.ops.F_d + in.ops.F_s * r).norm() * (1.0 + 1e-6));
    }
}

TEST_CASE("lsqi: tight budget matches a projected-gradient oracle")
{
    Rng rng = make_stream(53, 0, 0);
    for (int trial = 0; trial < 10; ++trial) {
        const SystemConfig cfg;
        const Instance in = make_instance(cfg, rng);
        const double eps = power_budget(0.1, in.x);
        const SuppressorSolution sol = solve_lsqi(in.ops.F_d, in.ops.F_s, eps);
        REQUIRE(sol.active_budget);
        CHECK(std::abs(sol.power_used - eps) / eps <= 1e-4);
        CHECK(sol.lagrange_multiplier > 0.0);
        const CVec ref = oracle::lsqi_projected_gradient(in.ops.F_d, in.ops.F_s, eps, 20000);
        const double ref_obj = (in.ops.F_d + in.ops.F_s * ref).norm();
        CHECK(sol.objective_oob <= ref_obj * (1.0 + 1e-6));
        CHECK(sol.objective_oob >= ref_obj * (1.0 - 1e-6));
    }
}

TEST_CASE("lsqi: norm decreases in the multiplier, objective decreases in the budget")
{
    const SystemConfig cfg;
    Rng rng = make_stream(54, 0, 0);
    const Instance in = make_instance(cfg, rng);
    double prev = kInf;
    for (double l0 : {1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0}) {
        const double n = regularized_solution(in.ops.F_d, in.ops.F_s, l0).norm();
        CHECK(n < prev);
        prev = n;
    }
    double prev_obj = kInf;
    for (double a : {0.01, 0.05, 0.1, 0.25, 0.5, 1.0}) {
        const SuppressorSolution sol = solve_lsqi(in.ops.F_d, in.ops.F_s, power_budget(a, in.x));
        CHECK(sol.objective_oob <= prev_obj);
        CHECK(sol.power_used <= power_budget(a, in.x) * (1.0 + 1e-6));
        prev_obj = sol.objective_oob;
    }
}

TEST_CASE("joint: lambda = 0 reduces to lsqi")
{
    const SystemConfig cfg;
    Rng rng = make_stream(55, 0, 0);
    for (int trial = 0; trial < 5; ++trial) {
        const Instance in = make_instance(cfg, rng);
        const double eps = power_budget(0.25, in.x);
        const SuppressorSolution a = solve_lsqi(in.ops.F_d, in.ops.F_s, eps);
        const SuppressorSolution b = solve_joint(in.ops.F_d, in.ops.F_s, in.x.samples, in.P.embedded, eps, 0.0);
        CHECK(b.objective_oob == doctest::Approx(a.objective_oob).epsilon(1e-5));
        CHECK((a.s - b.s).norm() <= 1e-3 * a.s.norm());
    }
}

TEST_CASE("joint: feasibility and dominance of s = 0")
{
    const SystemConfig cfg;
    Rng rng = make_stream(56, 0, 0);
    for (int trial = 0; trial < 5; ++trial) {
        const Instance in = make_instance(cfg, rng);
        for (double alpha : {0.05, 0.25, 1.0}) {
            const double eps = power_budget(alpha, in.x);
            for (double lambda : {0.25, 0.5, 1.0}) {
                const SuppressorSolution sol =
                    solve_joint(in.ops.F_d, in.ops.F_s, in.x.samples, in.P.embedded, eps, lambda);
                CHECK(sol.power_used <= eps * (1.0 + 1e-6));
                const double at_zero = joint_objective(in.ops.F_d, in.ops.F_s, in.x.samples, in.P.embedded,
                                                       CVec::Zero(in.P.dimension()), lambda);
                const double got =
                    joint_objective(in.ops.F_d, in.ops.F_s, in.x.samples, in.P.embedded, sol.s, lambda);
                CHECK(got <= at_zero);
                if (lambda == 1.0) {
                    CHECK(sol.objective_papr <= in.x.samples.cwiseAbs().maxCoeff());
                }
            }
        }
    }
}

TEST_CASE("joint: the trade-off is monotone in lambda")
{
    const SystemConfig cfg;
    Rng rng = make_stream(57, 0, 0);
    for (int trial = 0; trial < 3; ++trial) {
        const Instance in = make_instance(cfg, rng);
        const double eps = power_budget(0.25, in.x);
        double prev_oob = 0.0;
        double prev_peak = kInf;
        for (double lambda : {0.0, 0.25, 0.5, 0.75, 1.0}) {
            const SuppressorSolution sol =
                solve_joint(in.ops.F_d, in.ops.F_s, in.x.samples, in.P.embedded, eps, lambda);
            // slack covers the solver tolerance
            CHECK(sol.objective_oob >= prev_oob * (1.0 - 1e-4));
            CHECK(sol.objective_papr <= prev_peak * (1.0 + 1e-4));
            prev_oob = sol.objective_oob;
            prev_peak = sol.objective_papr;
        }
    }
}

TEST_CASE("joint: interior point and admm agree with the ellipsoid oracle")
{
    Rng rng = make_stream(58, 0, 0);
    for (int trial = 0; trial < 10; ++trial) {
        const Instance in = make_instance(small_config(), rng);
        const double eps = power_budget(0.25, in.x);
        const double lambda = 0.5;
        const SuppressorSolution ipm =
            solve_joint(in.ops.F_d, in.ops.F_s, in.x.samples, in.P.embedded, eps, lambda);
        CHECK(ipm.method == SolveMethod::interior_point);
        const double f_ipm = joint_objective(in.ops.F_d, in.ops.F_s, in.x.samples, in.P.embedded, ipm.s, lambda);
        const double f_ref =
            oracle::joint_ellipsoid(in.ops.F_d, in.ops.F_s, in.x.samples, in.P.embedded, eps, lambda, 6000);
        CHECK(std::abs(f_ipm - f_ref) / f_ref <= 1e-4);

        const SuppressorSolution admm =
            solve_joint_admm(in.ops.F_d, in.ops.F_s, in.x.samples, in.P.embedded, eps, lambda);
        const double f_admm =
            joint_objective(in.ops.F_d, in.ops.F_s, in.x.samples, in.P.embedded, admm.s, lambda);
        CHECK(std::abs(f_admm - f_ref) / f_ref <= 1e-4);
        CHECK(admm.power_used <= eps * (1.0 + 1e-6));
    }
}

TEST_CASE("joint: the objective does not depend on the choice of kernel basis")
{
    const SystemConfig cfg;
    Rng rng = make_stream(59, 0, 0);
    const Instance in = make_instance(cfg, rng);
    const int m = in.P.dimension();
    CMat G(m, m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            G(i, j) = complex_gaussian(rng, 1.0);
        }
    }
    const CMat U = Eigen::HouseholderQR<CMat>(G).householderQ();
    const CMat rotated = in.P.embedded * U;
    const CMat F_s_rot = in.ops.F_s * U;
    const double eps = power_budget(0.25, in.x);
    for (double lambda : {0.0, 0.5, 1.0}) {
        const SuppressorSolution a =
            solve_joint(in.ops.F_d, in.ops.F_s, in.x.samples, in.P.embedded, eps, lambda);
        const SuppressorSolution b = solve_joint(in.ops.F_d, F_s_rot, in.x.samples, rotated, eps, lambda);
        const double fa = joint_objective(in.ops.F_d, in.ops.F_s, in.x.samples, in.P.embedded, a.s, lambda);
        const double fb = joint_objective(in.ops.F_d, F_s_rot, in.x.samples, rotated, b.s, lambda);
        CHECK(fa == doctest::Approx(fb).epsilon(1e-5));
    }
}

TEST_CASE("design_suppressor fills the time-domain signal")
{
    SystemConfig cfg;
    Rng rng = make_stream(60, 0, 0);
    for (double lambda : {0.0, 0.5}) {
        cfg.lambda = lambda;
        const Instance in = make_instance(cfg, rng);
        bool fell_back = true;
        const SuppressorSolution sol = design_suppressor(cfg, in.ops, in.x, in.P, &fell_back);
        CHECK_FALSE(fell_back);
        REQUIRE(sol.c.samples.size() == cfg.frame_length());
        CHECK((sol.c.samples - in.P.embedded * sol.s).norm() < 1e-12);
        CHECK(sol.objective_papr == doctest::Approx((in.x.samples + sol.c.samples).cwiseAbs().maxCoeff()));
        CHECK(sol.method == (lambda == 0.0 ? SolveMethod::lsqi : SolveMethod::interior_point));
    }
}

TEST_CASE("transmit assembly and power budget")
{
    const TimeSymbol x{CVec::Constant(80, cd(0.5, -0.5))};
    const TimeSymbol none{CVec::Zero(80)};
    CHECK(assemble_transmit(x, none, PowerPolicy::shared_budget, 0.0).samples == x.samples);
    CHECK(power_budget(0.0, x) == 0.0);
    CHECK(power_budget(0.25, TimeSymbol{CVec::Ones(1)}) == doctest::Approx(0.25));
    const TimeSymbol c{CVec::Constant(80, cd(0.1, 0.0))};
    const TimeSymbol t = assemble_transmit(x, c, PowerPolicy::shared_budget, 0.25);
    CHECK((t.samples - (x.samples + c.samples) / std::sqrt(1.25)).norm() < 1e-14);
    CHECK(assemble_transmit(x, c, PowerPolicy::raw, 0.25).samples == x.samples + c.samples);
}

TEST_CASE("shared budget: suppressor share and average transmit power")
{
    SystemConfig cfg;
    cfg.alpha = 0.25;
    Rng rng = make_stream(61, 0, 0);
    double tx = 0.0;
    double plain = 0.0;
    double share = 0.0;
    const LinearMaps maps = build_maps(cfg);
    const CMat F_K = notch_dft(cfg);
    const std::vector<int> bins = notch_bins(cfg);
    for (int sym = 0; sym < 2000; ++sym) {
        const ToeplitzChannel H = toeplitz_channel(draw_channel(cfg.num_taps, rng), cfg.frame_length());
        const AlignmentBasis P = null_basis(maps.B, H);
        Bits bits(static_cast<std::size_t>(2 * maps.active_count()));
        for (auto& b : bits) {
            b = static_cast<std::uint8_t>(rng() & 1U);
        }
        const TimeSymbol x = ofdm_modulate(qam_modulate(bits, 4), maps);
        const SuppressorSolution sol = design_suppressor(cfg, spectral_operators(F_K, bins, P, x), x, P);
        const TimeSymbol t = assemble_transmit(x, sol.c, PowerPolicy::shared_budget, cfg.alpha);
        tx += t.samples.squaredNorm();
        plain += x.samples.squaredNorm();
        share = std::max(share, sol.c.samples.squaredNorm() / (x.samples.squaredNorm() + sol.c.samples.squaredNorm()));
    }
    // The suppressor partly cancels x, so Re(x^H c) < 0 on average and the
    // shared budget transmits slightly less than plain OFDM.
    CHECK(share <= 0.2 + 1e-9);
    CHECK(tx / plain < 1.0);
    CHECK(tx / plain > (1.0 - std::sqrt(0.25)) * (1.0 - std::sqrt(0.25)) / 1.25);
}
